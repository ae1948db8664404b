#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "moeda/core.hpp"
#include "moeda/errors.hpp"

namespace moeda {

enum class ProblemKind { trap_invtrap, onemax_zeromax, overlap };

enum class RepresentativeMode { genotype, objective };

inline double default_signal(std::uint32_t k) {
    switch (k) {
        case 3: return 0.9;
        case 4: return 0.75;
        case 5: return 0.8;
        default:
            throw std::invalid_argument("no default signal difference for this k; pass d explicitly");
    }
}

inline double trap(std::uint32_t u, std::uint32_t k, double d) {
    if (u > k) throw std::invalid_argument("trap: u out of range");
    if (k < 2) throw std::invalid_argument("trap: k must be at least 2");
    if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("trap: d must lie in (0,1)");
    if (u == k) return 1.0;
    return (1.0 - d) * (1.0 - static_cast<double>(u) / static_cast<double>(k - 1));
}

inline double invtrap(std::uint32_t u, std::uint32_t k, double d) {
    if (u > k) throw std::invalid_argument("invtrap: u out of range");
    if (k < 2) throw std::invalid_argument("invtrap: k must be at least 2");
    if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("invtrap: d must lie in (0,1)");
    if (u == 0) return 1.0;
    return (1.0 - d) * (static_cast<double>(u - 1) / static_cast<double>(k - 1));
}

// Bi-objective decomposable problem over consecutive disjoint k-bit blocks.
//   trap_invtrap    f = (sum trap, sum invtrap) over all m blocks
//   onemax_zeromax  f = (#ones, #zeros); conceptually m = ell, k = 1
//   overlap         blocks [0, m_d) conflict (trap, invtrap);
//                   blocks [m_d, m) are shared (trap, trap)
struct ProblemSpec {
    ProblemKind kind = ProblemKind::trap_invtrap;
    std::uint32_t m = 0;
    std::uint32_t k = 1;
    double d = 0.0;
    std::uint32_t m_d = 0;  // conflicting blocks; equals m except for overlap
    std::uint32_t ell = 0;
};

inline ProblemSpec make_trap_invtrap(std::uint32_t m, std::uint32_t k,
                                     std::optional<double> d = std::nullopt) {
    if (m < 1) throw std::invalid_argument("trap-invtrap: m must be positive");
    if (k < 2) throw std::invalid_argument("trap-invtrap: k must be at least 2");
    const double signal = d ? *d : default_signal(k);
    if (!(signal > 0.0 && signal < 1.0))
        throw std::invalid_argument("trap-invtrap: d must lie in (0,1)");
    return ProblemSpec{ProblemKind::trap_invtrap, m, k, signal, m, m * k};
}

inline ProblemSpec make_onemax_zeromax(std::uint32_t ell) {
    if (ell < 1) throw std::invalid_argument("onemax-zeromax: ell must be positive");
    return ProblemSpec{ProblemKind::onemax_zeromax, ell, 1, 0.0, 0, ell};
}

inline ProblemSpec make_overlap(std::uint32_t m, std::uint32_t k, std::uint32_t m_d,
                                std::optional<double> d = std::nullopt) {
    if (m < 1) throw std::invalid_argument("overlap: m must be positive");
    if (k < 2) throw std::invalid_argument("overlap: k must be at least 2");
    if (m_d > m) throw std::invalid_argument("overlap: m_d cannot exceed m");
    const double signal = d ? *d : default_signal(k);
    if (!(signal > 0.0 && signal < 1.0))
        throw std::invalid_argument("overlap: d must lie in (0,1)");
    return ProblemSpec{ProblemKind::overlap, m, k, signal, m_d, m * k};
}

namespace detail {

// Ones-count of block b (bit positions [b*k, (b+1)*k)).
inline std::uint32_t block_ones(const Genome& g, std::uint32_t b, std::uint32_t k) {
    const std::uint32_t start = b * k;
    const std::uint32_t end = start + k;
    const std::uint32_t w0 = start >> 6;
    const std::uint32_t w1 = (end - 1) >> 6;
    const std::uint32_t shift = start & 63u;
    std::uint64_t bits = g.word(w0) >> shift;
    if (w1 != w0) bits |= g.word(w1) << (64u - shift);
    if (k < 64) bits &= (1ULL << k) - 1u;
    return static_cast<std::uint32_t>(std::popcount(bits));
}

// Per-u block counts summed against fixed value tables, in fixed u order.
// This makes the objective pair bit-identical for every block arrangement
// with the same ones-count histogram, so genomes on the same Pareto point
// never split by floating-point association noise.
struct BlockTables {
    std::vector<double> trap_val;     // indexed by u
    std::vector<double> invtrap_val;  // indexed by u

    BlockTables() = default;
    BlockTables(std::uint32_t k, double d) {
        trap_val.resize(k + 1);
        invtrap_val.resize(k + 1);
        for (std::uint32_t u = 0; u <= k; ++u) {
            trap_val[u] = trap(u, k, d);
            invtrap_val[u] = invtrap(u, k, d);
        }
    }
};

}  // namespace detail

// Reusable evaluator: value tables built once, no per-genome allocation.
class Evaluator {
public:
    explicit Evaluator(const ProblemSpec& p) : spec_(p) {
        if (p.kind != ProblemKind::onemax_zeromax) tables_ = detail::BlockTables(p.k, p.d);
    }

    const ProblemSpec& spec() const { return spec_; }

    ObjectiveVector operator()(const Genome& g) const {
        if (g.size() != spec_.ell)
            throw std::invalid_argument("evaluate: genome length does not match problem");
        ObjectiveVector f;
        if (spec_.kind == ProblemKind::onemax_zeromax) {
            const auto ones = static_cast<double>(g.ones());
            f.f1 = ones;
            f.f2 = static_cast<double>(spec_.ell) - ones;
            return f;
        }
        std::array<std::uint32_t, 65> conflict_hist{};
        std::array<std::uint32_t, 65> shared_hist{};
        const std::uint32_t conflicting =
            spec_.kind == ProblemKind::overlap ? spec_.m_d : spec_.m;
        for (std::uint32_t b = 0; b < spec_.m; ++b) {
            const std::uint32_t u = detail::block_ones(g, b, spec_.k);
            ++(b < conflicting ? conflict_hist : shared_hist)[u];
        }
        double f1 = 0.0, f2 = 0.0, shared = 0.0;
        for (std::uint32_t u = 0; u <= spec_.k; ++u) {
            const auto cc = static_cast<double>(conflict_hist[u]);
            f1 += cc * tables_.trap_val[u];
            f2 += cc * tables_.invtrap_val[u];
            if (conflicting != spec_.m)
                shared += static_cast<double>(shared_hist[u]) * tables_.trap_val[u];
        }
        f.f1 = f1 + shared;
        f.f2 = f2 + shared;
        return f;
    }

private:
    ProblemSpec spec_;
    detail::BlockTables tables_;
};

inline ObjectiveVector evaluate(const ProblemSpec& p, const Genome& g) {
    return Evaluator(p)(g);
}

inline void evaluate_population(const ProblemSpec& p, Population& pop) {
    const Evaluator eval(p);
    for (auto& ind : pop) ind.objectives = eval(ind.genome);
}

// Number of Pareto-optimal genotypes: 2^m, 2^ell, or 2^{m_d}.
inline std::uint64_t representative_genotype_count(const ProblemSpec& p) {
    switch (p.kind) {
        case ProblemKind::trap_invtrap: return 1ULL << p.m;
        case ProblemKind::onemax_zeromax: return 1ULL << p.ell;
        case ProblemKind::overlap: return 1ULL << p.m_d;
    }
    throw std::logic_error("unknown problem kind");
}

// Number of distinct Pareto-optimal objective points: m+1, ell+1, or m_d+1.
inline std::uint32_t representative_point_count(const ProblemSpec& p) {
    switch (p.kind) {
        case ProblemKind::trap_invtrap: return p.m + 1;
        case ProblemKind::onemax_zeromax: return p.ell + 1;
        case ProblemKind::overlap: return p.m_d + 1;
    }
    throw std::logic_error("unknown problem kind");
}

// Exact Pareto-optimal structure of a problem.  Genotype entries are sorted
// ascending as unsigned integers; objective entries ascending by f1 (one per
// distinct point, from the canonical lowest-f1 representative onward).
struct RepresentativeSet {
    RepresentativeMode mode = RepresentativeMode::genotype;
    std::vector<Genome> genotypes;
    std::vector<ObjectiveVector> points;
};

namespace detail {

// Representative genome for a trap/overlap pattern: conflicting block b is
// all-ones iff bit b of pattern; shared blocks are always all-ones.
inline Genome pattern_genome(const ProblemSpec& p, std::uint64_t pattern) {
    Genome g(p.ell);
    const std::uint32_t conflicting = p.kind == ProblemKind::overlap ? p.m_d : p.m;
    for (std::uint32_t b = 0; b < p.m; ++b) {
        const bool ones = b >= conflicting || ((pattern >> b) & 1ULL);
        if (ones)
            for (std::uint32_t i = b * p.k; i < (b + 1) * p.k; ++i) g.set(i, true);
    }
    return g;
}

inline Genome int_genome(std::uint32_t ell, std::uint64_t value) {
    Genome g(ell);
    g.set_word(0, value);
    return g;
}

}  // namespace detail

inline RepresentativeSet representative_set(const ProblemSpec& p, RepresentativeMode mode,
                                            std::uint64_t genotype_cap = 1ULL << 20) {
    RepresentativeSet reps;
    reps.mode = mode;
    if (mode == RepresentativeMode::genotype) {
        const std::uint64_t count = representative_genotype_count(p);
        if (count > genotype_cap)
            throw capacity_error("representative_set: genotype count exceeds cap");
        reps.genotypes.reserve(count);
        if (p.kind == ProblemKind::onemax_zeromax) {
            for (std::uint64_t v = 0; v < count; ++v)
                reps.genotypes.push_back(detail::int_genome(p.ell, v));
        } else {
            for (std::uint64_t pattern = 0; pattern < count; ++pattern)
                reps.genotypes.push_back(detail::pattern_genome(p, pattern));
        }
        return reps;
    }
    const std::uint32_t points = representative_point_count(p);
    reps.points.reserve(points);
    if (p.kind == ProblemKind::onemax_zeromax) {
        for (std::uint32_t j = 0; j < points; ++j) {
            ObjectiveVector f;
            f.f1 = static_cast<double>(j);
            f.f2 = static_cast<double>(p.ell - j);
            reps.points.push_back(f);
        }
    } else {
        // Canonical class representative: the first j conflicting blocks all-ones.
        for (std::uint32_t j = 0; j < points; ++j) {
            const std::uint64_t pattern = (j == 0) ? 0ULL : ((1ULL << j) - 1u);
            reps.points.push_back(evaluate(p, detail::pattern_genome(p, pattern)));
        }
    }
    return reps;
}

// Exhaustive Pareto oracle.  Exact double-precision domination over all 2^ell
// genomes via a staircase sweep: in descending-f1 order, a genome survives iff
// its f2 beats everything at strictly higher f1 and ties the best f2 of its
// exact f1 class.  Equivalent to the quadratic pairwise scan, just feasible.
inline RepresentativeSet pareto_oracle_bruteforce(const ProblemSpec& p) {
    if (p.ell > 24) throw capacity_error("pareto_oracle_bruteforce: ell exceeds 24");
    const std::uint64_t total = 1ULL << p.ell;
    const Evaluator eval(p);
    struct Entry {
        double f1, f2;
        std::uint64_t v;
    };
    std::vector<Entry> entries(total);
    for (std::uint64_t v = 0; v < total; ++v) {
        const ObjectiveVector f = eval(detail::int_genome(p.ell, v));
        entries[v] = {f.f1, f.f2, v};
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.f1 != b.f1) return a.f1 > b.f1;
        if (a.f2 != b.f2) return a.f2 > b.f2;
        return a.v < b.v;
    });

    std::vector<std::uint64_t> survivors;
    double best_f2_above = -1.0;  // max f2 among strictly higher f1
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i;
        while (j < entries.size() && entries[j].f1 == entries[i].f1) ++j;
        const double class_max_f2 = entries[i].f2;  // sorted f2-descending within class
        if (class_max_f2 > best_f2_above)
            for (std::size_t t = i; t < j && entries[t].f2 == class_max_f2; ++t)
                survivors.push_back(entries[t].v);
        if (class_max_f2 > best_f2_above) best_f2_above = class_max_f2;
        i = j;
    }
    std::sort(survivors.begin(), survivors.end());

    RepresentativeSet reps;
    reps.mode = RepresentativeMode::genotype;
    reps.genotypes.reserve(survivors.size());
    for (const auto v : survivors) reps.genotypes.push_back(detail::int_genome(p.ell, v));
    return reps;
}

// Genotypes per Pareto point, indexed by the number of all-ones partitions.
inline std::vector<std::uint64_t> niche_counts(std::uint32_t m) {
    if (m < 1) throw std::invalid_argument("niche_counts: m must be positive");
    if (m > 63) throw std::invalid_argument("niche_counts: 2^m exceeds 64-bit range");
    std::vector<std::uint64_t> row(m + 1, 0);
    row[0] = 1;
    for (std::uint32_t i = 1; i <= m; ++i)
        for (std::uint32_t j = i; j > 0; --j) row[j] += row[j - 1];
    return row;
}

}  // namespace moeda
