#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "moeda/core.hpp"
#include "moeda/errors.hpp"
#include "moeda/rng.hpp"

namespace moeda {

// Marginal-product model: disjoint gene groups covering all positions, each
// with a full frequency table over its 2^k bit patterns.  Pattern bit t
// corresponds to the group's t-th gene (genes kept sorted), so the table is
// indexed by the pattern's integer value.
struct MpmGroup {
    std::vector<std::uint32_t> genes;
    std::vector<double> freq;
};

struct MarginalProductModel {
    std::uint32_t ell = 0;
    std::vector<MpmGroup> groups;
};

struct UnivariateModel {
    std::vector<double> p;
};

enum class VariationKind { mecga, umda, nsga2_xover };

// pm unset means the per-length default 1/ell, resolved where the genome
// length is known.
struct VariationConfig {
    VariationKind kind = VariationKind::umda;
    double pc = 0.9;
    std::optional<double> pm;
};

inline double model_complexity(const MarginalProductModel& model, std::uint64_t n) {
    if (n < 2)
        throw std::invalid_argument("model_complexity: population size must be at least 2");
    double table_sizes = 0.0;
    for (const auto& group : model.groups)
        table_sizes += std::ldexp(1.0, static_cast<int>(group.genes.size())) - 1.0;
    return std::log2(static_cast<double>(n)) * table_sizes;
}

namespace detail {

constexpr std::uint32_t kMaxGroupBits = 24;

// Entropy term of a pattern-count histogram, already scaled by n:
// sum over counts c of c * log2(n / c).
inline double scaled_entropy(const std::vector<std::uint64_t>& hist, std::uint64_t n) {
    const double log2n = std::log2(static_cast<double>(n));
    double total = 0.0;
    for (const std::uint64_t c : hist)
        if (c > 0)
            total += static_cast<double>(c) * (log2n - std::log2(static_cast<double>(c)));
    return total;
}

inline std::vector<std::uint64_t> group_pattern_counts(const std::vector<std::uint32_t>& genes,
                                                       const Population& pop) {
    if (genes.size() > kMaxGroupBits)
        throw capacity_error("group pattern table exceeds the supported size");
    std::vector<std::uint64_t> hist(std::size_t{1} << genes.size(), 0);
    for (const auto& ind : pop) {
        std::uint32_t pattern = 0;
        for (std::size_t t = 0; t < genes.size(); ++t)
            pattern |= static_cast<std::uint32_t>(ind.genome.get(genes[t])) << t;
        ++hist[pattern];
    }
    return hist;
}

}  // namespace detail

// Model-induced compression size of the population, computed from the
// population's own empirical pattern frequencies under the model's grouping.
inline double compressed_population_complexity(const MarginalProductModel& model,
                                               const Population& pop) {
    double total = 0.0;
    for (const auto& group : model.groups)
        total += detail::scaled_entropy(detail::group_pattern_counts(group.genes, pop), pop.size());
    return total;
}

namespace detail {

struct SearchGroup {
    std::vector<std::uint32_t> genes;  // concatenation order during the search
    std::uint32_t min_gene = 0;
    std::vector<std::uint8_t> pat;     // per-individual pattern
    double solo_cost = 0.0;
    bool alive = true;
};

// Combined metric of one group: table size term plus scaled entropy.
inline double group_cost(std::uint32_t k, const std::vector<std::uint64_t>& hist,
                         std::uint64_t n) {
    return std::log2(static_cast<double>(n)) * (std::ldexp(1.0, static_cast<int>(k)) - 1.0) +
           scaled_entropy(hist, n);
}

inline double joint_cost(const SearchGroup& a, const SearchGroup& b, std::uint64_t n,
                         std::uint32_t k_max, std::vector<std::uint64_t>& hist) {
    const auto ka = static_cast<std::uint32_t>(a.genes.size());
    const auto kb = static_cast<std::uint32_t>(b.genes.size());
    if (ka + kb > k_max) return std::numeric_limits<double>::infinity();
    hist.assign(std::size_t{1} << (ka + kb), 0);
    for (std::size_t i = 0; i < a.pat.size(); ++i)
        ++hist[static_cast<std::uint32_t>(a.pat[i]) |
               (static_cast<std::uint32_t>(b.pat[i]) << ka)];
    return group_cost(ka + kb, hist, n);
}

}  // namespace detail

// Greedy model search: start univariate, repeatedly apply the merge with the
// greatest strict decrease in model complexity plus compressed population
// complexity, stop when none remains.  Near-equal improvements (within 1e-12)
// break ties toward the pair with the lowest smallest gene index, then the
// lower other-group smallest index.  Group size is capped at k_max.
inline MarginalProductModel greedy_mpm_search(const Population& selected,
                                              std::uint32_t k_max = 8) {
    const std::uint64_t n = selected.size();
    if (n < 2)
        throw std::invalid_argument("greedy_mpm_search: need at least 2 selected individuals");
    if (k_max < 1 || k_max > 8)
        throw std::invalid_argument("greedy_mpm_search: k_max must be in [1, 8]");
    const std::uint32_t ell = genome_length(selected);

    std::vector<detail::SearchGroup> groups(ell);
    std::vector<std::uint64_t> hist;
    for (std::uint32_t g = 0; g < ell; ++g) {
        auto& grp = groups[g];
        grp.genes = {g};
        grp.min_gene = g;
        grp.pat.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            grp.pat[i] = static_cast<std::uint8_t>(selected[i].genome.get(g));
        hist.assign(2, 0);
        for (const std::uint8_t p : grp.pat) ++hist[p];
        grp.solo_cost = detail::group_cost(1, hist, n);
    }

    // Pair-cost cache; only rows touching a merged group are recomputed.
    constexpr double kTie = 1e-12;
    std::vector<double> pair_cost(static_cast<std::size_t>(ell) * ell,
                                  std::numeric_limits<double>::infinity());
    auto cost_at = [&](std::uint32_t i, std::uint32_t j) -> double& {
        return pair_cost[static_cast<std::size_t>(std::min(i, j)) * ell + std::max(i, j)];
    };
    for (std::uint32_t i = 0; i < ell; ++i)
        for (std::uint32_t j = i + 1; j < ell; ++j)
            cost_at(i, j) = detail::joint_cost(groups[i], groups[j], n, k_max, hist);

    while (true) {
        bool found = false;
        double best_delta = 0.0;
        std::uint32_t best_i = 0, best_j = 0, best_k1 = 0, best_k2 = 0;
        for (std::uint32_t i = 0; i < ell; ++i) {
            if (!groups[i].alive) continue;
            for (std::uint32_t j = i + 1; j < ell; ++j) {
                if (!groups[j].alive) continue;
                const double joint = cost_at(i, j);
                if (!std::isfinite(joint)) continue;
                const double delta = joint - groups[i].solo_cost - groups[j].solo_cost;
                if (delta >= -kTie) continue;
                const std::uint32_t k1 = std::min(groups[i].min_gene, groups[j].min_gene);
                const std::uint32_t k2 = std::max(groups[i].min_gene, groups[j].min_gene);
                const bool take =
                    !found || delta < best_delta - kTie ||
                    (delta <= best_delta + kTie &&
                     (k1 < best_k1 || (k1 == best_k1 && k2 < best_k2)));
                if (take) {
                    found = true;
                    best_delta = delta;
                    best_i = i;
                    best_j = j;
                    best_k1 = k1;
                    best_k2 = k2;
                }
            }
        }
        if (!found) break;

        auto& a = groups[best_i];
        auto& b = groups[best_j];
        const auto ka = static_cast<std::uint32_t>(a.genes.size());
        for (std::size_t i = 0; i < a.pat.size(); ++i)
            a.pat[i] = static_cast<std::uint8_t>(a.pat[i] | (b.pat[i] << ka));
        a.genes.insert(a.genes.end(), b.genes.begin(), b.genes.end());
        a.min_gene = std::min(a.min_gene, b.min_gene);
        a.solo_cost = cost_at(best_i, best_j);
        b.alive = false;
        b.pat.clear();
        b.pat.shrink_to_fit();
        for (std::uint32_t g = 0; g < ell; ++g) {
            if (g == best_i || !groups[g].alive) continue;
            cost_at(best_i, g) = detail::joint_cost(a, groups[g], n, k_max, hist);
        }
    }

    MarginalProductModel model;
    model.ell = ell;
    std::vector<std::uint32_t> order;
    for (std::uint32_t g = 0; g < ell; ++g)
        if (groups[g].alive) order.push_back(g);
    std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
        return groups[x].min_gene < groups[y].min_gene;
    });
    for (const std::uint32_t g : order) {
        MpmGroup out;
        out.genes = groups[g].genes;
        std::sort(out.genes.begin(), out.genes.end());
        const auto counts = detail::group_pattern_counts(out.genes, selected);
        out.freq.resize(counts.size());
        for (std::size_t p = 0; p < counts.size(); ++p)
            out.freq[p] = static_cast<double>(counts[p]) / static_cast<double>(n);
        model.groups.push_back(std::move(out));
    }
    return model;
}

inline Population sample_mpm(const MarginalProductModel& model, std::uint64_t n_out,
                             RngStream& rng) {
    Population out;
    out.reserve(n_out);
    for (std::uint64_t i = 0; i < n_out; ++i) {
        Individual ind;
        ind.genome = Genome(model.ell);
        for (const auto& group : model.groups) {
            const double u = rng.uniform_double();
            double cum = 0.0;
            std::size_t chosen = 0;
            bool picked = false;
            std::size_t last_support = 0;
            for (std::size_t p = 0; p < group.freq.size(); ++p) {
                if (group.freq[p] <= 0.0) continue;
                last_support = p;
                cum += group.freq[p];
                if (u < cum) {
                    chosen = p;
                    picked = true;
                    break;
                }
            }
            if (!picked) chosen = last_support;  // guards cumulative rounding below 1
            for (std::size_t t = 0; t < group.genes.size(); ++t)
                ind.genome.set(group.genes[t], (chosen >> t) & 1u);
        }
        out.push_back(std::move(ind));
    }
    return out;
}

namespace detail {

inline void count_column_ones(const Genome& g, std::vector<std::uint64_t>& ones) {
    for (std::uint32_t wi = 0; wi < g.word_count(); ++wi) {
        std::uint64_t word = g.word(wi);
        while (word != 0) {
            ++ones[wi * 64u + static_cast<std::uint32_t>(std::countr_zero(word))];
            word &= word - 1;
        }
    }
}

// Fits the univariate model from a subset given by indices, without
// materializing the mating pool.
inline UnivariateModel fit_univariate_indices(const Population& pop,
                                              const std::vector<std::uint32_t>& selected) {
    if (selected.empty())
        throw std::invalid_argument("fit_univariate: selected population is empty");
    const std::uint32_t ell = genome_length(pop);
    std::vector<std::uint64_t> ones(ell, 0);
    for (const std::uint32_t idx : selected) count_column_ones(pop[idx].genome, ones);
    UnivariateModel model;
    model.p.resize(ell);
    for (std::uint32_t i = 0; i < ell; ++i)
        model.p[i] = static_cast<double>(ones[i]) / static_cast<double>(selected.size());
    return model;
}

}  // namespace detail

inline UnivariateModel fit_univariate(const Population& selected) {
    if (selected.empty())
        throw std::invalid_argument("fit_univariate: selected population is empty");
    const std::uint32_t ell = genome_length(selected);
    std::vector<std::uint64_t> ones(ell, 0);
    for (const auto& ind : selected) detail::count_column_ones(ind.genome, ones);
    UnivariateModel model;
    model.p.resize(ell);
    for (std::uint32_t i = 0; i < ell; ++i)
        model.p[i] = static_cast<double>(ones[i]) / static_cast<double>(selected.size());
    return model;
}

inline Population sample_univariate(const UnivariateModel& model, std::uint64_t n_out,
                                    RngStream& rng) {
    const auto ell = static_cast<std::uint32_t>(model.p.size());
    Population out;
    out.reserve(n_out);
    for (std::uint64_t i = 0; i < n_out; ++i) {
        Individual ind;
        ind.genome = Genome(ell);
        for (std::uint32_t b = 0; b < ell; ++b)
            if (rng.bernoulli(model.p[b])) ind.genome.set(b, true);
        out.push_back(std::move(ind));
    }
    return out;
}

namespace detail {

// Swaps the segment [c1, c2) between copies of the parents.
inline std::pair<Genome, Genome> two_point_crossover_at(const Genome& a, const Genome& b,
                                                        std::uint32_t c1, std::uint32_t c2) {
    Genome x = a, y = b;
    for (std::uint32_t i = c1; i < c2; ++i) {
        const bool xi = x.get(i);
        x.set(i, y.get(i));
        y.set(i, xi);
    }
    return {std::move(x), std::move(y)};
}

}  // namespace detail

inline std::pair<Genome, Genome> two_point_crossover(const Genome& a, const Genome& b, double pc,
                                                     RngStream& rng) {
    if (a.size() != b.size())
        throw std::invalid_argument("two_point_crossover: genome lengths differ");
    if (!rng.bernoulli(pc)) return {a, b};
    std::uint32_t c1 = static_cast<std::uint32_t>(rng.uniform_index(a.size() + 1));
    std::uint32_t c2 = static_cast<std::uint32_t>(rng.uniform_index(a.size() + 1));
    if (c1 > c2) std::swap(c1, c2);
    return detail::two_point_crossover_at(a, b, c1, c2);
}

inline Genome bitflip_mutation(const Genome& g, double pm, RngStream& rng) {
    Genome out = g;
    for (std::uint32_t i = 0; i < out.size(); ++i)
        if (rng.bernoulli(pm)) out.flip(i);
    return out;
}

// Debug dump: one line per group, sorted gene indices, a separator, then
// pattern:frequency pairs in pattern-value order.  Pattern strings list the
// bit of each gene in gene order.
inline std::string dump_model(const MarginalProductModel& model) {
    std::string out;
    char buf[32];
    for (const auto& group : model.groups) {
        for (std::size_t t = 0; t < group.genes.size(); ++t) {
            if (t > 0) out += ' ';
            out += std::to_string(group.genes[t]);
        }
        out += " |";
        for (std::size_t p = 0; p < group.freq.size(); ++p) {
            out += ' ';
            for (std::size_t t = 0; t < group.genes.size(); ++t)
                out += ((p >> t) & 1u) ? '1' : '0';
            out += ':';
            const auto res = std::to_chars(buf, buf + sizeof buf, group.freq[p]);
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    return out;
}

}  // namespace moeda
