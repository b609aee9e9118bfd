#pragma once

#include "affectflow/epoch.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace affectflow {

/// Fitted 1-D Gaussian mixture; components sorted by mean ascending.
struct GmmResult {
    int k = 1;
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> sigmas;
    double log_likelihood = 0.0;
    double aic = 0.0; // 2(3k-1) - 2 logL
    double bic = 0.0; // (3k-1) ln n - 2 logL
    int iterations = 0;
    int collapsed_restarts = 0;
    bool monotone = true; // EM log-likelihood never decreased

    double density(double x) const;
};

/// EM fit with k-means++ seeding, best of `restarts` seeded restarts by
/// log-likelihood. Components whose sigma falls below 1e-4 collapse the
/// restart; if every restart collapses this throws. Requires n > 3k.
GmmResult fit_gmm(std::span<const double> values, int k, std::uint64_t seed, int restarts = 10);

struct KSelection {
    int k = 1;     // chosen component count
    int k_aic = 1; // largest marginal AIC drop
    int k_bic = 1; // largest marginal BIC drop
    std::vector<GmmResult> fits; // k = 1..k_max in order
};

/// Fit k = 1..k_max and report the component count at the largest marginal
/// criterion drop (1 when adding a component never helps). When AIC and BIC
/// disagree the smaller count wins.
KSelection select_k(std::span<const double> values, int k_max, std::uint64_t seed);

/// Fraction of peaks whose sign runs contrary to the cohort polarity
/// (positive peaks in a negative cohort and vice versa); zero peaks are
/// non-contrary. Throws on empty input.
double contrary_fraction(const std::vector<PeakValue>& peaks, Polarity polarity);

} // namespace affectflow
