#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace affectflow {

enum class FitFamily { exponential, lorentzian, gaussian, quadratic };
const char* to_string(FitFamily f);

/// Least-squares fit of one model family over one minute-offset segment.
struct FitResult {
    FitFamily family = FitFamily::exponential;
    std::map<std::string, double> params; // exponential: A, lambda, b
                                          // lorentzian/gaussian: A, sigma, mu
                                          // quadratic: a, b, c
    int segment_start = 0;
    int segment_end = 0;
    double sse = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Model value at minute offset t.
double fit_eval(const FitResult& fit, double t);

/// f(t) = A e^(lambda t) + b, damped least squares with data-driven
/// multi-start initializations. Needs >= 4 points.
FitResult fit_exponential(std::span<const double> t, std::span<const double> y);

/// f(t) = (A/pi) * sigma / ((t - mu)^2 + sigma^2)
FitResult fit_lorentzian(std::span<const double> t, std::span<const double> y);

/// f(t) = A / (sigma sqrt(2 pi)) * exp(-(t - mu)^2 / (2 sigma^2))
FitResult fit_gaussian(std::span<const double> t, std::span<const double> y);

/// f(t) = a t^2 + b t + c, closed-form normal equations. Needs >= 3 points.
FitResult fit_quadratic(std::span<const double> t, std::span<const double> y);

/// A named model entry for SSE ranking; the two-exponential model carries the
/// summed SSE of its ramp-up and ramp-down segments.
struct RankedModel {
    std::string name;
    double sse = 0.0;
    std::vector<FitResult> fits;
};

/// Ascending by SSE (stable).
std::vector<RankedModel> rank_models(std::vector<RankedModel> models);

struct HalfLife {
    double minutes = 0.0;
    double peak_value = 0.0; // p = f(0)
    double end_value = 0.0;  // e = f(segment_end)
};

/// Time for an exponential decay fit to move from its peak p = f(0) to
/// (p + e)/2, found by bisection on [0, 10 * segment_end]. Requires
/// lambda < 0 and A != 0.
HalfLife half_life(const FitResult& decay_fit, double segment_end);

/// Closed form of the same quantity: ln((1 + e^(lambda end)) / 2) / lambda.
double half_life_closed_form(double lambda, double segment_end);

} // namespace affectflow
