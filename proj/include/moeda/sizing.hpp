#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "moeda/engine.hpp"
#include "moeda/errors.hpp"
#include "moeda/names.hpp"
#include "moeda/parallel.hpp"
#include "moeda/problems.hpp"
#include "moeda/rng.hpp"

namespace moeda {

// Constants of the facetwise sizing predictors.  gamma is the confidence of
// maintaining all niches over a horizon of t generations; n_opt counts the
// Pareto-optimal solutions to maintain.
struct SizingParams {
    double c1 = 1.0;
    double c2 = 1.0;
    double gamma = 0.5;
    std::uint32_t t = 10;
    std::uint64_t n_opt = 2;
};

// Population size needed for correct model building: c1 * 2^k * m * log2(m).
inline double predict_eda_popsize(std::uint32_t k, std::uint64_t m, const SizingParams& params) {
    if (m < 2) throw std::invalid_argument("predict_eda_popsize: m must be at least 2");
    if (k < 1) throw std::invalid_argument("predict_eda_popsize: k must be at least 1");
    if (!(params.c1 > 0.0))
        throw std::invalid_argument("predict_eda_popsize: c1 must be positive");
    return params.c1 * std::ldexp(1.0, static_cast<int>(k)) * static_cast<double>(m) *
           std::log2(static_cast<double>(m));
}

struct NichingPrediction {
    double exact = 0.0;
    double approx = 0.0;
};

// Population size needed to keep every niche alive for t generations with
// confidence gamma.  The exact form is a ratio of same-base logarithms, so
// the base cancels; the approximation is the linear-in-n_opt shortcut.
inline NichingPrediction predict_niching_popsize(const SizingParams& params) {
    if (params.n_opt < 2)
        throw std::invalid_argument("predict_niching_popsize: n_opt must be at least 2");
    if (!(params.gamma > 0.0 && params.gamma < 1.0))
        throw std::invalid_argument("predict_niching_popsize: gamma must lie in (0,1)");
    if (params.t < 1) throw std::invalid_argument("predict_niching_popsize: t must be at least 1");
    if (!(params.c2 > 0.0))
        throw std::invalid_argument("predict_niching_popsize: c2 must be positive");
    const auto n_opt = static_cast<double>(params.n_opt);
    const double loss = 1.0 - std::pow(params.gamma, 1.0 / static_cast<double>(params.t));
    NichingPrediction out;
    out.exact = std::log(loss / n_opt) / std::log((n_opt - 1.0) / n_opt);
    out.approx = params.c2 * n_opt;
    return out;
}

// Conservative count of substructures competing for one niche slot:
// floor(k + log2(m)), clamped to [0, m].
inline std::uint64_t max_competing_substructures(std::uint64_t m, std::uint32_t k) {
    if (m < 1) throw std::invalid_argument("max_competing_substructures: m must be positive");
    const std::uint64_t raw = k + static_cast<std::uint64_t>(std::bit_width(m)) - 1u;
    return std::min(raw, m);
}

struct ScalingPoint {
    double ell = 0.0;
    double value = 0.0;
};

// Competing least-squares fits of a scaling series: power law (log value vs
// log ell) and exponential (log value vs ell), natural logarithms, each with
// its sum of squared residuals in the log domain.
struct ScalingFit {
    double power_slope = 0.0;
    double power_residual = 0.0;
    double exp_slope = 0.0;
    double exp_residual = 0.0;
};

namespace detail {

inline void least_squares_line(const std::vector<double>& x, const std::vector<double>& y,
                               double& slope, double& ssr) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_scaling_exponent: abscissae must not be constant");
    slope = sxy / sxx;
    const double intercept = my - slope * mx;
    ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (intercept + slope * x[i]);
        ssr += e * e;
    }
}

}  // namespace detail

inline ScalingFit fit_scaling_exponent(const std::vector<ScalingPoint>& points) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_scaling_exponent: need at least 3 points");
    std::vector<double> log_ell, lin_ell, log_value;
    for (const auto& p : points) {
        if (!(p.ell > 0.0) || !(p.value > 0.0))
            throw std::invalid_argument("fit_scaling_exponent: points must be positive");
        log_ell.push_back(std::log(p.ell));
        lin_ell.push_back(p.ell);
        log_value.push_back(std::log(p.value));
    }
    ScalingFit fit;
    detail::least_squares_line(log_ell, log_value, fit.power_slope, fit.power_residual);
    detail::least_squares_line(lin_ell, log_value, fit.exp_slope, fit.exp_residual);
    return fit;
}

// Bisection methodology knobs.  A candidate size passes when all r
// verification runs succeed; the (fail, pass] bracket is narrowed until
// hi - lo <= stop_gap or hi/lo <= stop_ratio.
struct BisectionConfig {
    std::uint64_t n_start = 16;
    std::uint32_t r = 10;
    std::uint32_t repeats = 10;
    std::uint64_t n_max = 1ULL << 20;
    double stop_ratio = 1.1;
    std::uint64_t stop_gap = 2;
};

// Success test for one candidate size.  repetition and probe identify the
// verification batch so engine-backed predicates can derive distinct
// deterministic streams per batch.
using SuccessPredicate =
    std::function<bool(std::uint64_t n, std::uint32_t repetition, std::uint32_t probe)>;

struct BisectionOutcome {
    std::vector<std::uint64_t> n_min;  // per repetition
    double n_min_mean = 0.0;
    double n_min_std = 0.0;
    // Evaluations n*(g_star+1) of the runs that verified each accepted size;
    // empty (stats NaN) for predicate-only bisections.
    std::vector<double> evaluations;
    double evals_mean = std::numeric_limits<double>::quiet_NaN();
    double evals_std = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void validate_bisection(const BisectionConfig& cfg) {
    if (cfg.n_start < 2) throw std::invalid_argument("bisection: n_start must be at least 2");
    if (cfg.r < 1) throw std::invalid_argument("bisection: r must be at least 1");
    if (cfg.repeats < 1) throw std::invalid_argument("bisection: repeats must be at least 1");
    if (cfg.n_max < cfg.n_start)
        throw std::invalid_argument("bisection: n_max must be at least n_start");
    if (!(cfg.stop_ratio >= 1.0))
        throw std::invalid_argument("bisection: stop_ratio must be at least 1");
    // Keep the (repetition, probe, run) stream fields disjoint.
    if (cfg.repeats > 1024) throw std::invalid_argument("bisection: repeats must be at most 1024");
    if (cfg.r > (1u << 20)) throw std::invalid_argument("bisection: r must be at most 2^20");
}

inline bool bisection_stopped(std::uint64_t lo, std::uint64_t hi, const BisectionConfig& cfg) {
    if (hi - lo <= cfg.stop_gap) return true;
    return lo > 0 &&
           static_cast<double>(hi) <= cfg.stop_ratio * static_cast<double>(lo);
}

// One bisection repetition: double from n_start to the first passing size,
// then narrow the (fail, pass] bracket; returns the passing endpoint.
inline std::uint64_t bisect_one(const SuccessPredicate& pred, const BisectionConfig& cfg,
                                std::uint32_t rep) {
    std::uint32_t probe = 0;
    std::uint64_t lo = 0;  // highest size known to fail; 0 = none failed yet
    std::uint64_t n = cfg.n_start;
    while (!pred(n, rep, probe++)) {
        lo = n;
        if (n >= cfg.n_max)
            throw infeasible_error("bisection: no success within population budget", n);
        n = std::min(n * 2, cfg.n_max);
    }
    std::uint64_t hi = n;
    while (!bisection_stopped(lo, hi, cfg)) {
        const std::uint64_t mid = std::max<std::uint64_t>(2, lo + (hi - lo) / 2);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid, rep, probe++))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population standard deviation; well-defined (0) for a single value.
inline double stddev_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (const double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// Stream layout for verification runs: bits 50+ select the family member,
// 40-49 the bisection repetition, 20-39 the probe, 0-19 the run.
inline std::uint64_t sizing_stream(std::uint64_t member, std::uint32_t rep, std::uint32_t probe,
                                   std::uint32_t run_idx) {
    return (member << 50) | (static_cast<std::uint64_t>(rep) << 40) |
           (static_cast<std::uint64_t>(probe) << 20) | run_idx;
}

inline void finalize_n_min_stats(BisectionOutcome& out) {
    std::vector<double> values;
    values.reserve(out.n_min.size());
    for (const std::uint64_t n : out.n_min) values.push_back(static_cast<double>(n));
    out.n_min_mean = mean_of(values);
    out.n_min_std = stddev_of(values, out.n_min_mean);
    if (!out.evaluations.empty()) {
        out.evals_mean = mean_of(out.evaluations);
        out.evals_std = stddev_of(out.evaluations, out.evals_mean);
    }
}

}  // namespace detail

// Bisection against an injected success predicate (no engine runs).
inline BisectionOutcome bisection_min_popsize(const SuccessPredicate& pred,
                                              const BisectionConfig& cfg) {
    detail::validate_bisection(cfg);
    BisectionOutcome out;
    for (std::uint32_t rep = 0; rep < cfg.repeats; ++rep)
        out.n_min.push_back(detail::bisect_one(pred, cfg, rep));
    detail::finalize_n_min_stats(out);
    return out;
}

// Bisection backed by real engine runs: a size passes when all cfg.r runs
// succeed.  Also reports evaluations n*(g_star+1) of the runs that verified
// each repetition's accepted size.
inline BisectionOutcome bisection_min_popsize(const ProblemSpec& problem,
                                              const AlgorithmConfig& algo,
                                              RepresentativeMode mode, const BisectionConfig& cfg,
                                              std::uint64_t master_seed,
                                              std::uint64_t family_member = 0,
                                              std::uint32_t jobs = 1) {
    detail::validate_bisection(cfg);
    BisectionOutcome out;
    for (std::uint32_t rep = 0; rep < cfg.repeats; ++rep) {
        std::uint64_t accepted_n = 0;
        std::vector<double> accepted_evals;
        const SuccessPredicate pred = [&](std::uint64_t n, std::uint32_t repetition,
                                          std::uint32_t probe) {
            // Each run has a fixed stream, so computing all r runs and then
            // combining matches the sequential early-exit verdict exactly.
            std::vector<std::uint8_t> ok(cfg.r, 0);
            std::vector<double> evals(cfg.r, 0.0);
            detail::parallel_for_index(cfg.r, jobs, [&](std::uint32_t j) {
                RngStream rng(master_seed,
                              detail::sizing_stream(family_member, repetition, probe, j));
                const RunResult res = run(problem, algo, n, mode, rng);
                if (res.success) {
                    ok[j] = 1;
                    evals[j] = static_cast<double>(n) *
                               (static_cast<double>(*res.g_star) + 1.0);
                }
            });
            for (std::uint32_t j = 0; j < cfg.r; ++j)
                if (!ok[j]) return false;
            accepted_n = n;
            accepted_evals = std::move(evals);
            return true;
        };
        const std::uint64_t n_min = detail::bisect_one(pred, cfg, rep);
        if (accepted_n != n_min)
            throw std::logic_error("bisection: accepted size does not match verified size");
        out.n_min.push_back(n_min);
        out.evaluations.insert(out.evaluations.end(), accepted_evals.begin(),
                               accepted_evals.end());
    }
    detail::finalize_n_min_stats(out);
    return out;
}

// Fraction of independent runs (streams 0..runs-1 of master_seed) that end
// with full coverage.
inline double success_probability(const ProblemSpec& problem, const AlgorithmConfig& algo,
                                  std::uint64_t n, RepresentativeMode mode, std::uint32_t runs,
                                  std::uint64_t master_seed) {
    if (runs < 1) throw std::invalid_argument("success_probability: need at least one run");
    std::uint32_t ok = 0;
    for (std::uint32_t j = 0; j < runs; ++j) {
        RngStream rng(master_seed, j);
        ok += run(problem, algo, n, mode, rng).success ? 1u : 0u;
    }
    return static_cast<double>(ok) / static_cast<double>(runs);
}

// One sweep row: problem, algorithm, and sizing statistics.  An infeasible
// entry keeps NaN statistics and records the last failing size.
struct SweepRecord {
    ProblemSpec problem;
    VariationKind algo = VariationKind::umda;
    ReplacementKind replacement = ReplacementKind::elitist;
    RepresentativeMode mode = RepresentativeMode::genotype;
    bool infeasible = false;
    std::uint64_t last_failing_n = 0;
    double n_min_mean = std::numeric_limits<double>::quiet_NaN();
    double n_min_std = std::numeric_limits<double>::quiet_NaN();
    double evals_mean = std::numeric_limits<double>::quiet_NaN();
    double evals_std = std::numeric_limits<double>::quiet_NaN();
    std::uint32_t repeats = 0;
    std::uint64_t master_seed = 0;
};

// Bisection across a family of problem sizes.  An infeasible member yields a
// flagged record; the sweep continues.  Family member i uses its own stream
// block, so the sweep is a pure function of (family, algo, cfg, master_seed).
inline std::vector<SweepRecord> scalability_sweep(const std::vector<ProblemSpec>& family,
                                                  const AlgorithmConfig& algo,
                                                  RepresentativeMode mode,
                                                  const BisectionConfig& cfg,
                                                  std::uint64_t master_seed,
                                                  std::uint32_t jobs = 1) {
    if (family.empty()) throw std::invalid_argument("scalability_sweep: empty problem family");
    detail::validate_bisection(cfg);
    std::vector<SweepRecord> records;
    records.reserve(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) {
        SweepRecord rec;
        rec.problem = family[i];
        rec.algo = algo.variation.kind;
        rec.replacement = algo.replacement;
        rec.mode = mode;
        rec.repeats = cfg.repeats;
        rec.master_seed = master_seed;
        try {
            const BisectionOutcome out =
                bisection_min_popsize(family[i], algo, mode, cfg, master_seed, i, jobs);
            rec.n_min_mean = out.n_min_mean;
            rec.n_min_std = out.n_min_std;
            rec.evals_mean = out.evals_mean;
            rec.evals_std = out.evals_std;
        } catch (const infeasible_error& err) {
            rec.infeasible = true;
            rec.last_failing_n = err.last_failing_n();
        }
        records.push_back(rec);
    }
    return records;
}

inline constexpr const char* kSweepCsvHeader =
    "kind,m,k,d,m_d,ell,algo,replacement,mode,n_min_mean,n_min_std,evals_mean,evals_std,"
    "repeats,master_seed";

namespace detail {

// 6 significant digits, matching the sweep CSV contract.
inline void append_sig6(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 6);
    out.append(buf, res.ptr);
}

}  // namespace detail

inline void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& os) {
    std::string out = kSweepCsvHeader;
    out += '\n';
    for (const auto& rec : records) {
        out += problem_kind_name(rec.problem.kind);
        out += ',';
        out += std::to_string(rec.problem.m);
        out += ',';
        out += std::to_string(rec.problem.k);
        out += ',';
        detail::append_sig6(out, rec.problem.d);
        out += ',';
        out += std::to_string(rec.problem.m_d);
        out += ',';
        out += std::to_string(rec.problem.ell);
        out += ',';
        out += variation_kind_name(rec.algo);
        out += ',';
        out += replacement_kind_name(rec.replacement);
        out += ',';
        out += representative_mode_name(rec.mode);
        out += ',';
        detail::append_sig6(out, rec.n_min_mean);
        out += ',';
        detail::append_sig6(out, rec.n_min_std);
        out += ',';
        detail::append_sig6(out, rec.evals_mean);
        out += ',';
        detail::append_sig6(out, rec.evals_std);
        out += ',';
        out += std::to_string(rec.repeats);
        out += ',';
        out += std::to_string(rec.master_seed);
        out += '\n';
    }
    os << out;
}

}  // namespace moeda
