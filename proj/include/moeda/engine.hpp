#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "moeda/core.hpp"
#include "moeda/errors.hpp"
#include "moeda/parallel.hpp"
#include "moeda/pareto.hpp"
#include "moeda/problems.hpp"
#include "moeda/replacement.hpp"
#include "moeda/rng.hpp"
#include "moeda/variation.hpp"

namespace moeda {

enum class ReplacementKind { elitist, rts };

// Full algorithm description: variation model, replacement scheme, and the
// generation budget.  An unset cap multiplier selects the default for the
// variation kind (5 for the model-building EDAs, 10 for crossover search);
// an explicit 0 is honoured and stops the run after initialization.
struct AlgorithmConfig {
    VariationConfig variation;
    ReplacementKind replacement = ReplacementKind::elitist;
    RtsConfig rts;
    std::optional<std::uint32_t> generation_cap_multiplier;
    bool early_abort_on_coverage = false;
};

inline std::uint32_t default_cap_multiplier(VariationKind kind) {
    return kind == VariationKind::nsga2_xover ? 10u : 5u;
}

// Outcome of one run.  coverage_trajectory[g] is the coverage fraction after
// generation g (index 0 is the initial population), so its length is
// generations_run + 1.  g_star is the first generation of the trailing
// all-covered suffix; it is set only when the final generation has full
// coverage.  per_point_coverage flags which distinct objective points the
// final population covers.
struct RunResult {
    bool success = false;
    std::optional<std::uint32_t> g_star;
    std::uint32_t generations_run = 0;
    std::uint64_t evaluations = 0;
    std::vector<double> coverage_trajectory;
    std::vector<std::uint32_t> points_covered_trajectory;
    std::vector<std::uint8_t> per_point_coverage;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

namespace detail {

// Matches an objective pair against the canonical point list (ascending f1)
// with absolute tolerance 1e-9 on both coordinates.  Adjacent canonical
// points are far further apart than the tolerance, so a match is unique.
class ObjectivePointMatcher {
public:
    static constexpr double kTol = 1e-9;

    explicit ObjectivePointMatcher(const std::vector<ObjectiveVector>& points) {
        f1_.reserve(points.size());
        f2_.reserve(points.size());
        for (const auto& p : points) {
            f1_.push_back(p.f1);
            f2_.push_back(p.f2);
        }
    }

    std::size_t size() const { return f1_.size(); }

    std::optional<std::size_t> match(double f1, double f2) const {
        auto it = std::lower_bound(f1_.begin(), f1_.end(), f1 - kTol);
        for (; it != f1_.end() && *it <= f1 + kTol; ++it) {
            const auto idx = static_cast<std::size_t>(it - f1_.begin());
            if (f2_[idx] >= f2 - kTol && f2_[idx] <= f2 + kTol) return idx;
        }
        return std::nullopt;
    }

private:
    std::vector<double> f1_;
    std::vector<double> f2_;
};

// Tracks which representatives the current population covers.  Genotype mode
// classifies each genome directly (index = conflict-block pattern, or the
// genome value for onemax-zeromax) instead of hashing against a materialized
// representative list, so a generation costs O(n * ell) and a fixed bitset.
// Objective-point coverage falls out of the same pass: a genome covers point
// j iff it is a representative with j all-ones conflicting blocks, because
// every non-representative's objective pair misses every canonical point by
// far more than the matcher tolerance.
class CoverageTracker {
public:
    static constexpr std::uint64_t kGenotypeCap = 1ULL << 20;

    CoverageTracker(const ProblemSpec& spec, RepresentativeMode mode)
        : spec_(spec),
          mode_(mode),
          matcher_(representative_set(spec, RepresentativeMode::objective).points) {
        point_seen_.assign(matcher_.size(), 0);
        if (mode_ == RepresentativeMode::genotype) {
            genotype_total_ = representative_genotype_count(spec);
            if (genotype_total_ > kGenotypeCap)
                throw capacity_error("coverage: representative genotype count exceeds 2^20");
            seen_words_.assign((genotype_total_ + 63) / 64, 0);
        }
    }

    void observe(const Population& pop) {
        std::fill(point_seen_.begin(), point_seen_.end(), 0);
        if (mode_ == RepresentativeMode::genotype) {
            std::fill(seen_words_.begin(), seen_words_.end(), 0);
            for (const auto& ind : pop) {
                const auto idx = representative_index(ind.genome);
                if (idx) seen_words_[*idx >> 6] |= 1ULL << (*idx & 63u);
            }
            genotype_covered_ = 0;
            for (std::size_t w = 0; w < seen_words_.size(); ++w) {
                genotype_covered_ += std::popcount(seen_words_[w]);
                std::uint64_t word = seen_words_[w];
                while (word != 0) {
                    const std::uint64_t idx =
                        (static_cast<std::uint64_t>(w) << 6) +
                        static_cast<std::uint64_t>(std::countr_zero(word));
                    point_seen_[static_cast<std::size_t>(std::popcount(idx))] = 1;
                    word &= word - 1;
                }
            }
        } else {
            for (const auto& ind : pop) {
                if (!ind.objectives.evaluated())
                    throw std::logic_error("coverage: population member not evaluated");
                const auto idx = matcher_.match(ind.objectives.f1, ind.objectives.f2);
                if (idx) point_seen_[*idx] = 1;
            }
        }
        points_covered_ = 0;
        for (const std::uint8_t s : point_seen_) points_covered_ += s;
    }

    double coverage() const {
        if (mode_ == RepresentativeMode::genotype)
            return static_cast<double>(genotype_covered_) / static_cast<double>(genotype_total_);
        return static_cast<double>(points_covered_) / static_cast<double>(point_seen_.size());
    }

    bool fully_covered() const {
        if (mode_ == RepresentativeMode::genotype) return genotype_covered_ == genotype_total_;
        return points_covered_ == point_seen_.size();
    }

    std::uint32_t points_covered() const { return static_cast<std::uint32_t>(points_covered_); }
    const std::vector<std::uint8_t>& point_flags() const { return point_seen_; }

private:
    // Representative index of a genome, or nullopt for non-representatives.
    // Bit b of the index says conflicting block b is all-ones; every block
    // must be uniform, and shared blocks must be all-ones.
    std::optional<std::uint64_t> representative_index(const Genome& g) const {
        if (spec_.kind == ProblemKind::onemax_zeromax) return g.as_bits();
        const std::uint32_t conflicting =
            spec_.kind == ProblemKind::overlap ? spec_.m_d : spec_.m;
        std::uint64_t idx = 0;
        for (std::uint32_t b = 0; b < spec_.m; ++b) {
            const std::uint32_t u = block_ones(g, b, spec_.k);
            if (b < conflicting) {
                if (u == spec_.k)
                    idx |= 1ULL << b;
                else if (u != 0)
                    return std::nullopt;
            } else if (u != spec_.k) {
                return std::nullopt;
            }
        }
        return idx;
    }

    ProblemSpec spec_;
    RepresentativeMode mode_;
    ObjectivePointMatcher matcher_;
    std::vector<std::uint8_t> point_seen_;
    std::vector<std::uint64_t> seen_words_;
    std::uint64_t genotype_total_ = 0;
    std::uint64_t genotype_covered_ = 0;
    std::size_t points_covered_ = 0;
};

}  // namespace detail

// Fraction of the representative set the population covers.  Genotype mode
// counts distinct Pareto-optimal genotypes present; objective mode counts
// distinct Pareto-optimal objective points hit within tolerance 1e-9.
inline double coverage(const Population& pop, const RepresentativeSet& reps) {
    if (reps.mode == RepresentativeMode::genotype) {
        if (reps.genotypes.empty())
            throw std::invalid_argument("coverage: representative set is empty");
        std::vector<std::uint8_t> seen(reps.genotypes.size(), 0);
        for (const auto& ind : pop) {
            auto it = std::lower_bound(reps.genotypes.begin(), reps.genotypes.end(), ind.genome,
                                       [](const Genome& a, const Genome& b) { return a < b; });
            if (it != reps.genotypes.end() && *it == ind.genome)
                seen[static_cast<std::size_t>(it - reps.genotypes.begin())] = 1;
        }
        std::size_t covered = 0;
        for (const std::uint8_t s : seen) covered += s;
        return static_cast<double>(covered) / static_cast<double>(reps.genotypes.size());
    }
    if (reps.points.empty())
        throw std::invalid_argument("coverage: representative set is empty");
    const detail::ObjectivePointMatcher matcher(reps.points);
    std::vector<std::uint8_t> seen(matcher.size(), 0);
    for (const auto& ind : pop) {
        if (!ind.objectives.evaluated())
            throw std::logic_error("coverage: population member not evaluated");
        const auto idx = matcher.match(ind.objectives.f1, ind.objectives.f2);
        if (idx) seen[*idx] = 1;
    }
    std::size_t covered = 0;
    for (const std::uint8_t s : seen) covered += s;
    return static_cast<double>(covered) / static_cast<double>(matcher.size());
}

// One full generational run.  Per generation: rank and crowd the parents,
// draw n binary-tournament winners, produce n offspring from the configured
// variation model, evaluate them, then apply the replacement scheme.  All
// randomness flows through rng in that fixed order, so a (seed, stream) pair
// fully determines the result.
inline RunResult run(const ProblemSpec& problem, const AlgorithmConfig& algo, std::uint64_t n,
                     RepresentativeMode mode, RngStream& rng) {
    if (n < 2) throw std::invalid_argument("run: population size must be at least 2");
    const std::uint32_t ell = problem.ell;
    const double pc = algo.variation.pc;
    const double pm = algo.variation.pm ? *algo.variation.pm : 1.0 / static_cast<double>(ell);
    if (!(pc >= 0.0 && pc <= 1.0))
        throw std::invalid_argument("run: crossover probability must lie in [0,1]");
    if (!(pm >= 0.0 && pm <= 1.0))
        throw std::invalid_argument("run: mutation probability must lie in [0,1]");
    const std::uint32_t mult = algo.generation_cap_multiplier
                                   ? *algo.generation_cap_multiplier
                                   : default_cap_multiplier(algo.variation.kind);
    const std::uint64_t cap = static_cast<std::uint64_t>(mult) * ell;

    const Evaluator eval(problem);
    detail::CoverageTracker tracker(problem, mode);

    RunResult result;
    result.seed = rng.seed();
    result.stream = rng.stream();

    Population pop = random_population(n, ell, rng);
    for (auto& ind : pop) ind.objectives = eval(ind.genome);
    tracker.observe(pop);
    result.coverage_trajectory.push_back(tracker.coverage());
    result.points_covered_trajectory.push_back(tracker.points_covered());

    auto& scratch = detail::shared_pareto_scratch();
    std::vector<char> keep;
    std::vector<std::uint32_t> winners;
    Population offspring;
    RtsConfig rts_cfg = algo.rts;
    if (algo.replacement == ReplacementKind::rts && !rts_cfg.w)
        rts_cfg.w = static_cast<std::uint32_t>(
            std::min<std::uint64_t>(n, static_cast<std::uint64_t>(ell)));

    std::uint64_t gen = 0;
    bool aborted_covered = algo.early_abort_on_coverage && tracker.fully_covered();
    while (!aborted_covered && gen < cap) {
        ++gen;

        detail::rank_and_crowd(detail::PoolView{pop.data(), pop.size(), nullptr, 0}, scratch);
        winners = detail::tournament_indices(pop, pop.size(), rng);

        offspring.clear();
        switch (algo.variation.kind) {
            case VariationKind::umda: {
                const UnivariateModel model = detail::fit_univariate_indices(pop, winners);
                offspring = sample_univariate(model, n, rng);
                break;
            }
            case VariationKind::mecga: {
                Population pool;
                pool.reserve(winners.size());
                for (const std::uint32_t idx : winners) pool.push_back(pop[idx]);
                const MarginalProductModel model = greedy_mpm_search(pool);
                offspring = sample_mpm(model, n, rng);
                break;
            }
            case VariationKind::nsga2_xover: {
                offspring.reserve(n);
                std::size_t t = 0;
                for (; t + 1 < winners.size(); t += 2) {
                    auto children = two_point_crossover(pop[winners[t]].genome,
                                                        pop[winners[t + 1]].genome, pc, rng);
                    Individual a;
                    a.genome = bitflip_mutation(children.first, pm, rng);
                    offspring.push_back(std::move(a));
                    Individual b;
                    b.genome = bitflip_mutation(children.second, pm, rng);
                    offspring.push_back(std::move(b));
                }
                if (t < winners.size()) {
                    Individual a;
                    a.genome = bitflip_mutation(pop[winners[t]].genome, pm, rng);
                    offspring.push_back(std::move(a));
                }
                break;
            }
        }
        for (auto& ind : offspring) ind.objectives = eval(ind.genome);

        if (algo.replacement == ReplacementKind::elitist) {
            detail::elitist_replace_inplace(pop, offspring, scratch, keep);
        } else {
            for (auto& off : offspring) detail::rts_replace_inplace(pop, off, rts_cfg, rng);
        }

        tracker.observe(pop);
        result.coverage_trajectory.push_back(tracker.coverage());
        result.points_covered_trajectory.push_back(tracker.points_covered());
        aborted_covered = algo.early_abort_on_coverage && tracker.fully_covered();
    }

    result.generations_run = static_cast<std::uint32_t>(gen);
    result.evaluations = n * (gen + 1);
    result.success = tracker.fully_covered();
    if (result.success) {
        std::size_t idx = result.coverage_trajectory.size() - 1;
        while (idx > 0 && result.coverage_trajectory[idx - 1] == 1.0) --idx;
        result.g_star = static_cast<std::uint32_t>(idx);
    }
    result.per_point_coverage = tracker.point_flags();
    return result;
}

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace detail

// Per-generation trace of one run as CSV.
inline void write_run_trace(const RunResult& result, std::ostream& os) {
    std::string out = "generation,coverage,points_covered\n";
    for (std::size_t g = 0; g < result.coverage_trajectory.size(); ++g) {
        out += std::to_string(g);
        out += ',';
        detail::append_double(out, result.coverage_trajectory[g]);
        out += ',';
        out += std::to_string(result.points_covered_trajectory[g]);
        out += '\n';
    }
    os << out;
}

// Per-point maintenance probability over independent runs: the fraction of
// runs whose final population covers each distinct objective point.  Run r
// uses stream r of master_seed.
inline std::vector<double> niche_maintenance_probability(const ProblemSpec& problem,
                                                         const AlgorithmConfig& algo,
                                                         std::uint64_t n, std::uint32_t runs,
                                                         std::uint64_t master_seed,
                                                         std::uint32_t jobs = 1) {
    if (runs < 1) throw std::invalid_argument("niche probability: need at least one run");
    std::vector<std::vector<std::uint8_t>> flags(runs);
    detail::parallel_for_index(runs, jobs, [&](std::uint32_t r) {
        RngStream rng(master_seed, r);
        flags[r] = run(problem, algo, n, RepresentativeMode::objective, rng).per_point_coverage;
    });
    std::vector<double> acc(representative_point_count(problem), 0.0);
    for (const auto& per_point : flags)
        for (std::size_t i = 0; i < acc.size(); ++i)
            acc[i] += static_cast<double>(per_point[i]);
    for (auto& v : acc) v /= static_cast<double>(runs);
    return acc;
}

}  // namespace moeda
