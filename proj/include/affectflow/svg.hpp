#pragma once

#include <string>
#include <vector>

namespace affectflow {

/// Minimal SVG line chart: polylines, shaded bands, reference lines, axis
/// ticks. Data coordinates map linearly into a fixed plot frame; output is
/// deterministic (fixed precision, no timestamps).
class SvgChart {
public:
    SvgChart(double x_min, double x_max, double y_min, double y_max, std::string title,
             std::string x_label, std::string y_label);

    void polyline(const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& color, double width = 1.5);
    /// Vertical band between x0 and x1 over the full plot height.
    void vband(double x0, double x1, const std::string& color, double opacity = 0.25);
    /// Horizontal band between y0 and y1 over the full plot width.
    void hband(double y0, double y1, const std::string& color, double opacity = 0.2);
    /// Filled band between two curves sharing an x grid (NaN gaps split it).
    void band(const std::vector<double>& x, const std::vector<double>& y_low,
              const std::vector<double>& y_high, const std::string& color, double opacity = 0.3);
    void vline(double x, const std::string& color, double width = 1.0);
    void hline(double y, const std::string& color, double width = 1.0);
    /// Histogram bars (x = bin left edges, uniform width).
    void bars(const std::vector<double>& x, const std::vector<double>& height, double bin_width,
              const std::string& color, double opacity = 0.6);
    void legend(const std::vector<std::pair<std::string, std::string>>& entries); // label, color

    std::string render() const;
    void save(const std::string& path) const;

private:
    double px(double x) const;
    double py(double y) const;

    double x_min_, x_max_, y_min_, y_max_;
    std::string title_, x_label_, y_label_;
    std::vector<std::string> body_;
};

} // namespace affectflow
