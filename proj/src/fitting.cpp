#include "affectflow/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace affectflow {

const char* to_string(FitFamily f) {
    switch (f) {
        case FitFamily::exponential: return "exponential";
        case FitFamily::lorentzian: return "lorentzian";
        case FitFamily::gaussian: return "gaussian";
        default: return "quadratic";
    }
}

namespace {

constexpr double kRelSseTol = 1e-10;
constexpr int kMaxIterations = 500;
constexpr double kSqrt2Pi = 2.5066282746310002;

using Vec3 = std::array<double, 3>;

// Model interface for the 3-parameter nonlinear families.
struct Model {
    std::function<double(const Vec3&, double)> eval;
    std::function<void(const Vec3&, double, Vec3&)> jacobian_row; // d f / d p
    std::function<bool(const Vec3&)> valid;                       // parameter domain
};

double sse_of(const Model& m, const Vec3& p, std::span<const double> t,
              std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double r = m.eval(p, t[i]) - y[i];
        if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
        s += r * r;
    }
    return s;
}

// Solve a symmetric 3x3 system by Gaussian elimination with partial pivoting.
bool solve3(std::array<std::array<double, 3>, 3> a, Vec3 b, Vec3& x) {
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            double f = a[r][col] / a[col][col];
            for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int i = 0; i < 3; ++i) x[i] = b[i] / a[i][i];
    return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

struct LmOutcome {
    Vec3 params;
    double sse = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

// Levenberg-Marquardt with additive damping. Steps that leave the parameter
// domain or fail to reduce the SSE raise the damping and retry.
LmOutcome levenberg_marquardt(const Model& m, Vec3 p, std::span<const double> t,
                              std::span<const double> y) {
    LmOutcome out;
    if (!m.valid(p)) return out;
    double sse = sse_of(m, p, t, y);
    if (!std::isfinite(sse)) return out;
    double mu = 1e-3;

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        out.iterations = iter + 1;
        std::array<std::array<double, 3>, 3> jtj{};
        Vec3 jtr{0.0, 0.0, 0.0};
        Vec3 row;
        for (std::size_t i = 0; i < t.size(); ++i) {
            double r = m.eval(p, t[i]) - y[i];
            m.jacobian_row(p, t[i], row);
            for (int a = 0; a < 3; ++a) {
                jtr[a] += row[a] * r;
                for (int b = a; b < 3; ++b) jtj[a][b] += row[a] * row[b];
            }
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

        bool stepped = false;
        for (int attempt = 0; attempt < 25 && !stepped; ++attempt) {
            auto damped = jtj;
            for (int a = 0; a < 3; ++a) damped[a][a] += mu * (1.0 + jtj[a][a]);
            Vec3 delta;
            if (!solve3(damped, {-jtr[0], -jtr[1], -jtr[2]}, delta)) {
                mu *= 4.0;
                continue;
            }
            Vec3 trial{p[0] + delta[0], p[1] + delta[1], p[2] + delta[2]};
            if (!m.valid(trial)) {
                mu *= 4.0;
                continue;
            }
            double trial_sse = sse_of(m, trial, t, y);
            if (trial_sse <= sse) {
                double change = sse - trial_sse;
                p = trial;
                sse = trial_sse;
                mu = std::max(mu / 3.0, 1e-12);
                stepped = true;
                if (change <= kRelSseTol * std::max(sse, 1e-300)) {
                    out.params = p;
                    out.sse = sse;
                    out.converged = true;
                    return out;
                }
            } else {
                mu *= 4.0;
            }
        }
        if (!stepped) break; // damping exhausted: local minimum
    }
    out.params = p;
    out.sse = sse;
    out.converged = true; // no-progress exit is treated as converged-in-place
    return out;
}

FitResult run_multistart(FitFamily family, const Model& m, const std::vector<Vec3>& starts,
                         std::span<const double> t, std::span<const double> y,
                         const std::array<const char*, 3>& names) {
    LmOutcome best;
    for (const auto& s : starts) {
        LmOutcome o = levenberg_marquardt(m, s, t, y);
        if (o.sse < best.sse) best = o;
    }
    if (!std::isfinite(best.sse))
        throw std::runtime_error(std::string("fit did not converge for family ") + to_string(family));
    FitResult fit;
    fit.family = family;
    fit.params[names[0]] = best.params[0];
    fit.params[names[1]] = best.params[1];
    fit.params[names[2]] = best.params[2];
    fit.segment_start = static_cast<int>(std::lround(t.front()));
    fit.segment_end = static_cast<int>(std::lround(t.back()));
    fit.sse = best.sse;
    fit.converged = best.converged;
    fit.iterations = best.iterations;
    return fit;
}

// Slope/intercept of ln|y - b| against t, for exponential rate guesses.
bool log_linear_guess(std::span<const double> t, std::span<const double> y, double b,
                      double& lambda, double& log_amp) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double d = std::abs(y[i] - b);
        if (d < 1e-12) continue;
        double ly = std::log(d);
        sx += t[i];
        sy += ly;
        sxx += t[i] * t[i];
        sxy += t[i] * ly;
        ++n;
    }
    if (n < 2) return false;
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) return false;
    lambda = (n * sxy - sx * sy) / denom;
    log_amp = (sy - lambda * sx) / n;
    return std::isfinite(lambda) && std::isfinite(log_amp);
}

void check_input(std::span<const double> t, std::span<const double> y, std::size_t min_points) {
    if (t.size() != y.size()) throw std::invalid_argument("t and y sizes differ");
    if (t.size() < min_points)
        throw std::invalid_argument("segment has fewer than " + std::to_string(min_points) +
                                    " points");
    for (double v : y)
        if (!std::isfinite(v)) throw std::invalid_argument("segment contains non-finite values");
}

} // namespace

double fit_eval(const FitResult& fit, double t) {
    switch (fit.family) {
        case FitFamily::exponential:
            return fit.params.at("A") * std::exp(fit.params.at("lambda") * t) + fit.params.at("b");
        case FitFamily::lorentzian: {
            double s = fit.params.at("sigma"), mu = fit.params.at("mu");
            double d = t - mu;
            return fit.params.at("A") / M_PI * s / (d * d + s * s);
        }
        case FitFamily::gaussian: {
            double s = fit.params.at("sigma"), mu = fit.params.at("mu");
            double d = t - mu;
            return fit.params.at("A") / (s * kSqrt2Pi) * std::exp(-d * d / (2 * s * s));
        }
        default:
            return fit.params.at("a") * t * t + fit.params.at("b") * t + fit.params.at("c");
    }
}

FitResult fit_exponential(std::span<const double> t, std::span<const double> y) {
    check_input(t, y, 4);
    Model m;
    m.eval = [](const Vec3& p, double x) { return p[0] * std::exp(p[1] * x) + p[2]; };
    m.jacobian_row = [](const Vec3& p, double x, Vec3& row) {
        double e = std::exp(p[1] * x);
        row[0] = e;
        row[1] = p[0] * x * e;
        row[2] = 1.0;
    };
    m.valid = [&](const Vec3& p) {
        // Keep the exponent within a range that cannot overflow on the segment.
        double worst = std::max(std::abs(t.front()), std::abs(t.back()));
        return std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]) &&
               std::abs(p[1]) * worst < 500.0;
    };

    double y_first = y.front(), y_last = y.back();
    double y_min = *std::min_element(y.begin(), y.end());
    double y_max = *std::max_element(y.begin(), y.end());
    double range = std::max(y_max - y_min, 1e-9);

    std::vector<Vec3> starts;
    for (double b0 : {y_first, y_last, y_min - 0.05 * range, y_max + 0.05 * range}) {
        double lambda = 0.0, log_amp = 0.0;
        double sign = 0.0;
        double dev_sum = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) dev_sum += y[i] - b0;
        sign = dev_sum >= 0 ? 1.0 : -1.0;
        if (log_linear_guess(t, y, b0, lambda, log_amp)) {
            double amp = sign * std::exp(log_amp);
            for (double scale : {1.0, 0.5, 2.0, -1.0})
                starts.push_back(Vec3{amp, lambda * scale, b0});
        } else {
            for (double l0 : {0.05, -0.05, 0.2, -0.2})
                starts.push_back(Vec3{sign * range, l0, b0});
        }
    }
    return run_multistart(FitFamily::exponential, m, starts, t, y, {"A", "lambda", "b"});
}

FitResult fit_lorentzian(std::span<const double> t, std::span<const double> y) {
    check_input(t, y, 4);
    Model m;
    m.eval = [](const Vec3& p, double x) {
        double d = x - p[2];
        return p[0] / M_PI * p[1] / (d * d + p[1] * p[1]);
    };
    m.jacobian_row = [](const Vec3& p, double x, Vec3& row) {
        double d = x - p[2];
        double denom = d * d + p[1] * p[1];
        row[0] = p[1] / (M_PI * denom);
        row[1] = p[0] / M_PI * (denom - 2 * p[1] * p[1]) / (denom * denom);
        row[2] = p[0] * p[1] / M_PI * 2 * d / (denom * denom);
    };
    m.valid = [](const Vec3& p) {
        return std::isfinite(p[0]) && std::isfinite(p[2]) && p[1] > 1e-9;
    };

    double span = std::max(t.back() - t.front(), 1.0);
    std::size_t extreme = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (std::abs(y[i]) > std::abs(y[extreme])) extreme = i;
    std::vector<Vec3> starts;
    for (double mu0 : {t[extreme], 0.5 * (t.front() + t.back())})
        for (double s0 : {span / 8, span / 4, span / 2, span, 2 * span}) {
            double a0 = y[extreme] * M_PI * s0;
            starts.push_back(Vec3{a0, s0, mu0});
            starts.push_back(Vec3{-a0, s0, mu0});
        }
    return run_multistart(FitFamily::lorentzian, m, starts, t, y, {"A", "sigma", "mu"});
}

FitResult fit_gaussian(std::span<const double> t, std::span<const double> y) {
    check_input(t, y, 4);
    Model m;
    m.eval = [](const Vec3& p, double x) {
        double d = x - p[2];
        return p[0] / (p[1] * kSqrt2Pi) * std::exp(-d * d / (2 * p[1] * p[1]));
    };
    m.jacobian_row = [](const Vec3& p, double x, Vec3& row) {
        double d = x - p[2];
        double s2 = p[1] * p[1];
        double g = std::exp(-d * d / (2 * s2)) / (p[1] * kSqrt2Pi);
        row[0] = g;
        row[1] = p[0] * g * (d * d / (s2 * p[1]) - 1.0 / p[1]);
        row[2] = p[0] * g * d / s2;
    };
    m.valid = [](const Vec3& p) {
        return std::isfinite(p[0]) && std::isfinite(p[2]) && p[1] > 1e-9;
    };

    double span = std::max(t.back() - t.front(), 1.0);
    std::size_t extreme = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (std::abs(y[i]) > std::abs(y[extreme])) extreme = i;
    std::vector<Vec3> starts;
    for (double mu0 : {t[extreme], 0.5 * (t.front() + t.back())})
        for (double s0 : {span / 8, span / 4, span / 2, span, 2 * span}) {
            double a0 = y[extreme] * s0 * kSqrt2Pi;
            starts.push_back(Vec3{a0, s0, mu0});
            starts.push_back(Vec3{-a0, s0, mu0});
        }
    return run_multistart(FitFamily::gaussian, m, starts, t, y, {"A", "sigma", "mu"});
}

FitResult fit_quadratic(std::span<const double> t, std::span<const double> y) {
    check_input(t, y, 3);
    // Normal equations for the design [t^2, t, 1].
    std::array<std::array<double, 3>, 3> ata{};
    Vec3 atb{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < t.size(); ++i) {
        Vec3 row{t[i] * t[i], t[i], 1.0};
        for (int a = 0; a < 3; ++a) {
            atb[a] += row[a] * y[i];
            for (int b = 0; b < 3; ++b) ata[a][b] += row[a] * row[b];
        }
    }
    Vec3 p;
    if (!solve3(ata, atb, p))
        throw std::runtime_error("quadratic normal equations are singular (degenerate t grid)");
    FitResult fit;
    fit.family = FitFamily::quadratic;
    fit.params["a"] = p[0];
    fit.params["b"] = p[1];
    fit.params["c"] = p[2];
    fit.segment_start = static_cast<int>(std::lround(t.front()));
    fit.segment_end = static_cast<int>(std::lround(t.back()));
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double r = p[0] * t[i] * t[i] + p[1] * t[i] + p[2] - y[i];
        s += r * r;
    }
    fit.sse = s;
    fit.converged = true;
    fit.iterations = 1;
    return fit;
}

std::vector<RankedModel> rank_models(std::vector<RankedModel> models) {
    std::stable_sort(models.begin(), models.end(),
                     [](const RankedModel& a, const RankedModel& b) { return a.sse < b.sse; });
    return models;
}

double half_life_closed_form(double lambda, double segment_end) {
    if (lambda >= 0.0) throw std::invalid_argument("half-life requires a decay rate (lambda < 0)");
    return std::log((1.0 + std::exp(lambda * segment_end)) / 2.0) / lambda;
}

HalfLife half_life(const FitResult& decay_fit, double segment_end) {
    if (decay_fit.family != FitFamily::exponential)
        throw std::invalid_argument("half-life is defined on exponential decay fits");
    const double amp = decay_fit.params.at("A");
    const double lambda = decay_fit.params.at("lambda");
    if (amp == 0.0) throw std::invalid_argument("half-life undefined for a flat fit (A = 0)");
    if (lambda >= 0.0) throw std::invalid_argument("half-life requires a decay rate (lambda < 0)");
    if (segment_end <= 0.0) throw std::invalid_argument("segment end must be positive");

    HalfLife hl;
    hl.peak_value = fit_eval(decay_fit, 0.0);
    hl.end_value = fit_eval(decay_fit, segment_end);
    const double target = 0.5 * (hl.peak_value + hl.end_value);

    // f is monotone between p and e, so bisection brackets cleanly.
    double lo = 0.0, hi = segment_end * 10.0;
    auto over_target = [&](double v) { return amp > 0 ? v > target : v < target; };
    for (int iter = 0; iter < 200 && hi - lo > 1e-6; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (over_target(fit_eval(decay_fit, mid)))
            lo = mid;
        else
            hi = mid;
    }
    hl.minutes = 0.5 * (lo + hi);
    return hl;
}

} // namespace affectflow
