#include "affectflow/svg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace affectflow {

namespace {
constexpr double kWidth = 900.0, kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 880.0, kTop = 40.0, kBottom = 370.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}
} // namespace

SvgChart::SvgChart(double x_min, double x_max, double y_min, double y_max, std::string title,
                   std::string x_label, std::string y_label)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max), title_(std::move(title)),
      x_label_(std::move(x_label)), y_label_(std::move(y_label)) {
    if (!(x_max_ > x_min_) || !(y_max_ > y_min_))
        throw std::invalid_argument("chart ranges must be non-empty");
}

double SvgChart::px(double x) const {
    return kLeft + (x - x_min_) / (x_max_ - x_min_) * (kRight - kLeft);
}

double SvgChart::py(double y) const {
    return kBottom - (y - y_min_) / (y_max_ - y_min_) * (kBottom - kTop);
}

void SvgChart::polyline(const std::vector<double>& x, const std::vector<double>& y,
                        const std::string& color, double width) {
    std::ostringstream seg;
    bool open = false;
    auto flush = [&] {
        if (open) {
            body_.push_back("<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                            num(width) + "\" points=\"" + seg.str() + "\"/>");
            seg.str("");
            open = false;
        }
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isnan(y[i])) {
            flush();
            continue;
        }
        seg << num(px(x[i])) << ',' << num(py(y[i])) << ' ';
        open = true;
    }
    flush();
}

void SvgChart::vband(double x0, double x1, const std::string& color, double opacity) {
    body_.push_back("<rect x=\"" + num(px(x0)) + "\" y=\"" + num(kTop) + "\" width=\"" +
                    num(px(x1) - px(x0)) + "\" height=\"" + num(kBottom - kTop) + "\" fill=\"" +
                    color + "\" opacity=\"" + num(opacity) + "\"/>");
}

void SvgChart::hband(double y0, double y1, const std::string& color, double opacity) {
    body_.push_back("<rect x=\"" + num(kLeft) + "\" y=\"" + num(py(y1)) + "\" width=\"" +
                    num(kRight - kLeft) + "\" height=\"" + num(py(y0) - py(y1)) + "\" fill=\"" +
                    color + "\" opacity=\"" + num(opacity) + "\"/>");
}

void SvgChart::band(const std::vector<double>& x, const std::vector<double>& y_low,
                    const std::vector<double>& y_high, const std::string& color, double opacity) {
    std::size_t i = 0;
    const std::size_t n = x.size();
    while (i < n) {
        if (std::isnan(y_low[i]) || std::isnan(y_high[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && !std::isnan(y_low[j + 1]) && !std::isnan(y_high[j + 1])) ++j;
        std::ostringstream pts;
        for (std::size_t k = i; k <= j; ++k) pts << num(px(x[k])) << ',' << num(py(y_high[k])) << ' ';
        for (std::size_t k = j + 1; k-- > i;) pts << num(px(x[k])) << ',' << num(py(y_low[k])) << ' ';
        body_.push_back("<polygon fill=\"" + color + "\" opacity=\"" + num(opacity) +
                        "\" points=\"" + pts.str() + "\"/>");
        i = j + 1;
    }
}

void SvgChart::vline(double x, const std::string& color, double width) {
    body_.push_back("<line x1=\"" + num(px(x)) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(px(x)) +
                    "\" y2=\"" + num(kBottom) + "\" stroke=\"" + color + "\" stroke-width=\"" +
                    num(width) + "\"/>");
}

void SvgChart::hline(double y, const std::string& color, double width) {
    body_.push_back("<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(y)) + "\" x2=\"" + num(kRight) +
                    "\" y2=\"" + num(py(y)) + "\" stroke=\"" + color + "\" stroke-width=\"" +
                    num(width) + "\"/>");
}

void SvgChart::bars(const std::vector<double>& x, const std::vector<double>& height,
                    double bin_width, const std::string& color, double opacity) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isnan(height[i]) || height[i] <= 0) continue;
        double x0 = px(x[i]);
        double x1 = px(x[i] + bin_width);
        body_.push_back("<rect x=\"" + num(x0) + "\" y=\"" + num(py(height[i])) + "\" width=\"" +
                        num(x1 - x0) + "\" height=\"" + num(py(0.0) - py(height[i])) + "\" fill=\"" +
                        color + "\" opacity=\"" + num(opacity) + "\"/>");
    }
}

void SvgChart::legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double y = kTop + 14.0;
    for (const auto& [label, color] : entries) {
        body_.push_back("<rect x=\"" + num(kRight - 180.0) + "\" y=\"" + num(y - 9.0) +
                        "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>");
        body_.push_back("<text x=\"" + num(kRight - 162.0) + "\" y=\"" + num(y + 2.0) +
                        "\" font-size=\"12\" font-family=\"sans-serif\">" + label + "</text>");
        y += 18.0;
    }
}

std::string SvgChart::render() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
           "font-family=\"sans-serif\">" << title_ << "</text>\n";
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kRight - kLeft
        << "\" height=\"" << kBottom - kTop << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double xv = x_min_ + (x_max_ - x_min_) * i / 5.0;
        double yv = y_min_ + (y_max_ - y_min_) * i / 5.0;
        out << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << kBottom << "\" x2=\"" << num(px(xv))
            << "\" y2=\"" << kBottom + 5 << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << num(px(xv)) << "\" y=\"" << kBottom + 20
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
            << tick_label(xv) << "</text>\n";
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << kLeft
            << "\" y2=\"" << num(py(yv)) << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(yv) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
            << tick_label(yv) << "</text>\n";
    }
    out << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kHeight - 8
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << x_label_
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << (kTop + kBottom) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 16 " << (kTop + kBottom) / 2 << ")\">" << y_label_
        << "</text>\n";
    for (const auto& b : body_) out << b << '\n';
    out << "</svg>\n";
    return out.str();
}

void SvgChart::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write svg file: " + path);
    out << render();
}

} // namespace affectflow
