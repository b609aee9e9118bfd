#include "affectflow/mixture.hpp"

#include "affectflow/rng.hpp"
#include "affectflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace affectflow {

namespace {

constexpr double kSigmaFloor = 1e-4;
constexpr double kRelLogLTol = 1e-8;
constexpr int kMaxIterations = 500;
constexpr double kLogSqrt2Pi = 0.9189385332046727;

double log_gauss(double x, double mu, double sigma) {
    double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - kLogSqrt2Pi;
}

struct EmState {
    std::vector<double> w, mu, sigma;
    double logl = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool collapsed = false;
    bool monotone = true;
};

// k-means++ seeding on the raw values.
std::vector<double> kmeanspp_centers(std::span<const double> x, int k, Rng& rng) {
    std::vector<double> centers;
    centers.push_back(x[rng.uniform_index(x.size())]);
    std::vector<double> d2(x.size());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centers) best = std::min(best, (x[i] - c) * (x[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(x[rng.uniform_index(x.size())]);
            continue;
        }
        double u = rng.uniform() * total;
        std::size_t pick = 0;
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            acc += d2[i];
            if (acc >= u) {
                pick = i;
                break;
            }
        }
        centers.push_back(x[pick]);
    }
    return centers;
}

EmState run_em(std::span<const double> x, int k, Rng rng) {
    const std::size_t n = x.size();
    EmState st;
    st.mu = kmeanspp_centers(x, k, rng);
    std::sort(st.mu.begin(), st.mu.end());
    double sigma0 = population_stdev(std::span<const double>(x.data(), n));
    if (sigma0 < kSigmaFloor) sigma0 = kSigmaFloor;
    st.sigma.assign(k, sigma0);
    st.w.assign(k, 1.0 / k);

    std::vector<double> resp(n * static_cast<std::size_t>(k));
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        st.iterations = iter + 1;
        // E step, with a running log-likelihood via log-sum-exp.
        double logl = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double maxlog = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                double lg = std::log(st.w[j]) + log_gauss(x[i], st.mu[j], st.sigma[j]);
                resp[i * k + j] = lg;
                maxlog = std::max(maxlog, lg);
            }
            double sum = 0.0;
            for (int j = 0; j < k; ++j) sum += std::exp(resp[i * k + j] - maxlog);
            double lse = maxlog + std::log(sum);
            logl += lse;
            for (int j = 0; j < k; ++j) resp[i * k + j] = std::exp(resp[i * k + j] - lse);
        }
        if (logl + kRelLogLTol * (std::abs(logl) + 1.0) < st.logl) st.monotone = false;
        bool done = std::isfinite(st.logl) &&
                    std::abs(logl - st.logl) <= kRelLogLTol * (std::abs(logl) + 1.0);
        st.logl = logl;
        if (done) break;

        // M step.
        for (int j = 0; j < k; ++j) {
            double nj = 0.0, sx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nj += resp[i * k + j];
                sx += resp[i * k + j] * x[i];
            }
            if (nj < 1e-10) {
                st.collapsed = true;
                return st;
            }
            double mu = sx / nj;
            double sv = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                sv += resp[i * k + j] * (x[i] - mu) * (x[i] - mu);
            double sigma = std::sqrt(sv / nj);
            if (sigma < kSigmaFloor) {
                st.collapsed = true;
                return st;
            }
            st.w[j] = nj / static_cast<double>(n);
            st.mu[j] = mu;
            st.sigma[j] = sigma;
        }
    }
    return st;
}

} // namespace

double GmmResult::density(double x) const {
    double d = 0.0;
    for (int j = 0; j < k; ++j) d += weights[j] * std::exp(log_gauss(x, means[j], sigmas[j]));
    return d;
}

GmmResult fit_gmm(std::span<const double> values, int k, std::uint64_t seed, int restarts) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (values.size() <= static_cast<std::size_t>(3 * k))
        throw std::invalid_argument("need more than 3k observations for a k-component fit");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("values contain non-finite entries");

    EmState best;
    int collapsed = 0;
    bool have = false;
    for (int r = 0; r < restarts; ++r) {
        EmState st = run_em(values, k, Rng::stream(seed, 0x676d6dULL, static_cast<std::uint64_t>(r)));
        if (st.collapsed) {
            ++collapsed;
            continue;
        }
        if (!have || st.logl > best.logl) {
            best = st;
            have = true;
        }
    }
    if (!have) throw std::runtime_error("all GMM restarts collapsed (degenerate sample)");

    // Sort components by mean for label-permutation invariance.
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return best.mu[a] < best.mu[b]; });

    GmmResult out;
    out.k = k;
    for (int j : order) {
        out.weights.push_back(best.w[j]);
        out.means.push_back(best.mu[j]);
        out.sigmas.push_back(best.sigma[j]);
    }
    out.log_likelihood = best.logl;
    const double params = 3.0 * k - 1.0;
    out.aic = 2.0 * params - 2.0 * best.logl;
    out.bic = params * std::log(static_cast<double>(values.size())) - 2.0 * best.logl;
    out.iterations = best.iterations;
    out.collapsed_restarts = collapsed;
    out.monotone = best.monotone;
    return out;
}

KSelection select_k(std::span<const double> values, int k_max, std::uint64_t seed) {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    KSelection sel;
    for (int k = 1; k <= k_max; ++k) sel.fits.push_back(fit_gmm(values, k, seed));

    auto pick = [&](auto criterion) {
        int best_k = 1;
        double best_drop = 0.0;
        for (int k = 2; k <= k_max; ++k) {
            double drop = criterion(sel.fits[k - 2]) - criterion(sel.fits[k - 1]);
            if (drop > best_drop) {
                best_drop = drop;
                best_k = k;
            }
        }
        return best_k;
    };
    sel.k_aic = pick([](const GmmResult& g) { return g.aic; });
    sel.k_bic = pick([](const GmmResult& g) { return g.bic; });
    sel.k = std::min(sel.k_aic, sel.k_bic);
    return sel;
}

double contrary_fraction(const std::vector<PeakValue>& peaks, Polarity polarity) {
    if (peaks.empty()) throw std::invalid_argument("no peaks to evaluate");
    std::size_t contrary = 0;
    for (const auto& p : peaks) {
        if (polarity == Polarity::negative ? p.peak_z > 0.0 : p.peak_z < 0.0) ++contrary;
    }
    return static_cast<double>(contrary) / static_cast<double>(peaks.size());
}

} // namespace affectflow
