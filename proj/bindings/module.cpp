#include "affectflow/changepoint.hpp"
#include "affectflow/fitting.hpp"
#include "affectflow/mixture.hpp"
#include "affectflow/nullmodel.hpp"
#include "affectflow/pattern.hpp"
#include "affectflow/pipeline.hpp"
#include "affectflow/rdd.hpp"
#include "affectflow/sentiment.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

namespace py = pybind11;
using namespace affectflow;

namespace {

py::object detect_py(const std::string& text) {
    static const AffectDetector detector(PatternConfig::defaults());
    auto hit = detector.detect(text);
    if (!hit) return py::none();
    py::dict d;
    d["polarity"] = std::string(to_string(hit->polarity));
    d["adjective"] = hit->adjective;
    d["booster"] = hit->booster ? py::cast(*hit->booster) : py::none();
    return d;
}

py::list intervals_py(const ChangeReport& report) {
    py::list out;
    for (const auto& iv : report.intervals) {
        py::dict d;
        d["start_k"] = iv.start_k;
        d["end_k"] = iv.end_k;
        d["duration_minutes"] = iv.duration_minutes;
        out.append(d);
    }
    return out;
}

py::dict fit_py(const FitResult& f) {
    py::dict d;
    d["family"] = std::string(to_string(f.family));
    py::dict params;
    for (const auto& [k, v] : f.params) params[py::str(k)] = v;
    d["params"] = params;
    d["sse"] = f.sse;
    d["segment"] = py::make_tuple(f.segment_start, f.segment_end);
    d["converged"] = f.converged;
    return d;
}

ValueSeries make_series(const std::vector<int>& offsets, const std::vector<double>& values) {
    if (offsets.size() != values.size())
        throw std::invalid_argument("offsets and values differ in length");
    return ValueSeries{offsets, values};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Event-aligned emotion dynamics toolkit (C++ core)";

    py::class_<Lexicon>(m, "Lexicon")
        .def_static("load", &load_lexicon, py::arg("path"))
        .def("__len__", [](const Lexicon& l) { return l.entries.size(); })
        .def("rating",
             [](const Lexicon& l, const std::string& token) -> py::object {
                 auto it = l.entries.find(token);
                 if (it == l.entries.end()) return py::none();
                 return py::cast(it->second);
             })
        .def("score", [](const Lexicon& l, const std::string& text) { return score(text, l); });

    m.def("detect_affect_label", &detect_py, py::arg("text"),
          "Match the affect statement grammar; returns a dict or None.");

    m.def(
        "cusum",
        [](const std::vector<int>& offsets, const std::vector<double>& values, double t, double k,
           double h, int lambda_min) {
            CusumParams p{t, k, h, lambda_min};
            return intervals_py(cusum(make_series(offsets, values), p));
        },
        py::arg("offsets"), py::arg("values"), py::arg("t"), py::arg("k"), py::arg("h") = 0.01,
        py::arg("lambda_min") = 40,
        "CUSUM anomaly intervals of a contiguous per-minute series.");

    m.def(
        "median_excursion",
        [](const std::vector<int>& offsets, const std::vector<double>& values, bool positive) {
            return intervals_py(median_excursion(make_series(offsets, values),
                                                 positive ? Polarity::positive : Polarity::negative));
        },
        py::arg("offsets"), py::arg("values"), py::arg("positive") = true);

    m.def(
        "estimate_duration",
        [](const std::vector<std::tuple<std::string, int, int>>& spans) {
            std::vector<ChangeReport> reports;
            for (const auto& [method, start, end] : spans) {
                ChangeReport r;
                r.method = method == "cusum"           ? ChangeMethod::cusum
                           : method == "ci_divergence" ? ChangeMethod::ci_divergence
                                                       : ChangeMethod::median_excursion;
                r.intervals.push_back(Interval{start, end, end - start + 1});
                reports.push_back(std::move(r));
            }
            DurationEstimate est = estimate_duration(reports);
            py::dict d;
            d["average_start"] = est.average_start;
            d["average_end"] = est.average_end;
            d["average_duration"] = est.average_duration;
            d["excluded_methods"] = est.excluded_methods;
            return d;
        },
        py::arg("spans"), "Average per-method (method, start_k, end_k) spans.");

    m.def(
        "bootstrap_ci",
        [](const std::vector<double>& values, int replicates, std::uint64_t seed) {
            BootstrapCi ci = bootstrap_ci(values, replicates, seed);
            return py::make_tuple(ci.p5, ci.p50, ci.p95);
        },
        py::arg("values"), py::arg("replicates") = 10000, py::arg("seed") = 42,
        "Nearest-rank (p5, p50, p95) of resampled means.");

    m.def(
        "rolling_mean",
        [](const std::vector<int>& offsets, const std::vector<double>& values, int span) {
            return rolling_mean(make_series(offsets, values), span).values;
        },
        py::arg("offsets"), py::arg("values"), py::arg("span") = 10);

    m.def(
        "fit_exponential",
        [](const std::vector<double>& t, const std::vector<double>& y) {
            return fit_py(fit_exponential(t, y));
        },
        py::arg("t"), py::arg("y"));
    m.def(
        "fit_lorentzian",
        [](const std::vector<double>& t, const std::vector<double>& y) {
            return fit_py(fit_lorentzian(t, y));
        },
        py::arg("t"), py::arg("y"));
    m.def(
        "fit_gaussian",
        [](const std::vector<double>& t, const std::vector<double>& y) {
            return fit_py(fit_gaussian(t, y));
        },
        py::arg("t"), py::arg("y"));
    m.def(
        "fit_quadratic",
        [](const std::vector<double>& t, const std::vector<double>& y) {
            return fit_py(fit_quadratic(t, y));
        },
        py::arg("t"), py::arg("y"));

    m.def(
        "half_life",
        [](double amplitude, double lambda, double offset, double segment_end) {
            FitResult f;
            f.family = FitFamily::exponential;
            f.params = {{"A", amplitude}, {"lambda", lambda}, {"b", offset}};
            HalfLife hl = half_life(f, segment_end);
            py::dict d;
            d["minutes"] = hl.minutes;
            d["peak_value"] = hl.peak_value;
            d["end_value"] = hl.end_value;
            return d;
        },
        py::arg("amplitude"), py::arg("lambda_"), py::arg("offset"), py::arg("segment_end"),
        "Half-life of an exponential decay fit A*exp(lambda*t) + offset.");

    m.def(
        "fit_gmm",
        [](const std::vector<double>& values, int k, std::uint64_t seed) {
            GmmResult g = fit_gmm(values, k, seed);
            py::dict d;
            d["k"] = g.k;
            d["weights"] = g.weights;
            d["means"] = g.means;
            d["sigmas"] = g.sigmas;
            d["log_likelihood"] = g.log_likelihood;
            d["aic"] = g.aic;
            d["bic"] = g.bic;
            return d;
        },
        py::arg("values"), py::arg("k") = 2, py::arg("seed") = 42);

    m.def(
        "select_k",
        [](const std::vector<double>& values, int k_max, std::uint64_t seed) {
            KSelection sel = select_k(values, k_max, seed);
            py::dict d;
            d["k"] = sel.k;
            d["k_aic"] = sel.k_aic;
            d["k_bic"] = sel.k_bic;
            return d;
        },
        py::arg("values"), py::arg("k_max") = 5, py::arg("seed") = 42);

    m.def(
        "rdd_fit",
        [](const std::vector<int>& offsets, const std::vector<double>& values, int t0) {
            RddResult r = rdd_fit(make_series(offsets, values), t0);
            py::dict d;
            auto line = [](const LineFit& f) {
                py::dict x;
                x["slope"] = f.slope;
                x["intercept"] = f.intercept;
                x["slope_ci_half"] = f.slope_ci_half();
                x["intercept_ci_half"] = f.intercept_ci_half();
                x["n"] = f.n;
                return x;
            };
            d["pre"] = line(r.pre);
            d["post"] = line(r.post);
            d["gap"] = r.gap;
            d["gap_ci_half"] = r.gap_ci_half;
            d["ci_overlap"] = r.ci_overlap;
            return d;
        },
        py::arg("offsets"), py::arg("values"), py::arg("t0") = 0,
        "Regression discontinuity on a difference series.");

    m.def(
        "run_pipeline",
        [](const std::string& config_path, const std::vector<std::string>& stages) {
            RunConfig rc = RunConfig::from_file(config_path);
            rc.stages = stages;
            ResultBundle bundle = run_pipeline(rc);
            py::dict d;
            d["completed_stages"] = bundle.completed_stages;
            d["skipped"] = bundle.skipped;
            return d;
        },
        py::arg("config_path"), py::arg("stages") = std::vector<std::string>{},
        "Run the full analysis pipeline from a run.toml file.");

    m.attr("__version__") = "0.1.0";
}
