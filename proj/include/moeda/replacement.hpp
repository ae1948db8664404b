#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "moeda/core.hpp"
#include "moeda/pareto.hpp"
#include "moeda/rng.hpp"

namespace moeda {

enum class RtsTiePolicy { coin_flip, keep_incumbent, always_replace };

// Window size w defaults to min(population size, genome length) when unset.
struct RtsConfig {
    std::optional<std::uint32_t> w;
    RtsTiePolicy tie_policy = RtsTiePolicy::coin_flip;
};

namespace detail {

// Marks the n survivors of the combined pool in `keep`: whole rank classes
// are admitted in rank order; the class that overflows is truncated by
// descending crowding, ties broken toward the lower pool index.  Assumes
// rank_and_crowd has just run on this pool with this scratch.
inline void elitist_select(PoolView pool, std::size_t n, std::uint32_t max_rank,
                           ParetoScratch& scratch, std::vector<char>& keep) {
    keep.assign(pool.size(), 0);
    std::size_t filled = 0;
    for (std::uint32_t r = 1; r <= max_rank && filled < n; ++r) {
        const std::uint32_t begin = scratch.class_offset[r];
        const std::uint32_t end = r < max_rank ? scratch.class_offset[r + 1]
                                               : static_cast<std::uint32_t>(pool.size());
        const std::size_t size = end - begin;
        if (filled + size <= n) {
            for (std::uint32_t t = begin; t < end; ++t) keep[scratch.class_members[t]] = 1;
            filled += size;
            continue;
        }
        std::vector<std::uint32_t> cut(scratch.class_members.begin() + begin,
                                       scratch.class_members.begin() + end);
        std::stable_sort(cut.begin(), cut.end(), [&](std::uint32_t a, std::uint32_t b) {
            return pool[a].crowding > pool[b].crowding;
        });
        for (std::size_t t = 0; t < n - filled; ++t) keep[cut[t]] = 1;
        filled = n;
    }
}

// In-place elitist replacement: survivors of parents ++ offspring are
// compacted into `parents`.  Survivor order is pool-index ascending, so
// surviving parents never move backward and the compaction is safe.
inline void elitist_replace_inplace(Population& parents, Population& offspring,
                                    ParetoScratch& scratch, std::vector<char>& keep) {
    const std::size_t n = parents.size();
    if (n == 0)
        throw std::invalid_argument("elitist_replacement: parents must be non-empty");
    if (offspring.size() > n)
        throw std::invalid_argument("elitist_replacement: more offspring than parents");
    PoolView pool{parents.data(), parents.size(), offspring.data(), offspring.size()};
    const std::uint32_t max_rank = rank_and_crowd(pool, scratch);
    elitist_select(pool, n, max_rank, scratch, keep);
    std::size_t write = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!keep[i]) continue;
        if (i != write) parents[write] = std::move(pool[i]);
        ++write;
    }
}

}  // namespace detail

inline Population elitist_replacement(const Population& parents, const Population& offspring) {
    Population next = parents;
    Population young = offspring;
    std::vector<char> keep;
    detail::elitist_replace_inplace(next, young, detail::shared_pareto_scratch(), keep);
    return next;
}

namespace detail {

// One restricted-tournament step.  Returns true when the offspring replaced
// its nearest drawn member.
inline bool rts_replace_inplace(Population& current, const Individual& offspring,
                                const RtsConfig& cfg, RngStream& rng) {
    const std::size_t n = current.size();
    const std::uint32_t ell = offspring.genome.size();
    const std::uint32_t w =
        cfg.w ? *cfg.w : static_cast<std::uint32_t>(std::min<std::size_t>(n, ell));
    if (w < 1 || w > n)
        throw std::invalid_argument("rts_replace: window must satisfy 1 <= w <= population size");
    if (!offspring.objectives.evaluated())
        throw std::logic_error("rts_replace: offspring not evaluated");

    const auto drawn = sample_without_replacement(n, w, rng);
    std::size_t nearest = n;
    std::uint32_t nearest_dist = 0;
    for (const std::size_t idx : drawn) {
        const std::uint32_t dist = hamming_distance(current[idx].genome, offspring.genome);
        if (nearest == n || dist < nearest_dist || (dist == nearest_dist && idx < nearest)) {
            nearest = idx;
            nearest_dist = dist;
        }
    }
    const Individual& incumbent = current[nearest];
    if (!incumbent.objectives.evaluated())
        throw std::logic_error("rts_replace: population member not evaluated");

    bool replace;
    if (dominates(offspring.objectives, incumbent.objectives))
        replace = true;
    else if (dominates(incumbent.objectives, offspring.objectives))
        replace = false;
    else
        switch (cfg.tie_policy) {
            case RtsTiePolicy::coin_flip: replace = rng.coin(); break;
            case RtsTiePolicy::keep_incumbent: replace = false; break;
            case RtsTiePolicy::always_replace: replace = true; break;
            default: replace = false; break;
        }
    if (replace) current[nearest] = offspring;
    return replace;
}

}  // namespace detail

inline Population rts_replace(const Population& current, const Individual& offspring,
                              const RtsConfig& cfg, RngStream& rng) {
    Population next = current;
    detail::rts_replace_inplace(next, offspring, cfg, rng);
    return next;
}

}  // namespace moeda
