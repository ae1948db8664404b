#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

#include "moeda/core.hpp"
#include "moeda/rng.hpp"

namespace moeda {

// Maximization domination: no worse in both objectives, better in at least one.
inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
    return a.f1 >= b.f1 && a.f2 >= b.f2 && (a.f1 > b.f1 || a.f2 > b.f2);
}

namespace detail {

// A contiguous view over one or two populations (parents ++ offspring),
// letting replacement rank a combined pool without materializing it.
struct PoolView {
    Individual* a = nullptr;
    std::size_t na = 0;
    Individual* b = nullptr;
    std::size_t nb = 0;

    std::size_t size() const { return na + nb; }
    Individual& operator[](std::size_t i) { return i < na ? a[i] : b[i - na]; }
    const Individual& operator[](std::size_t i) const { return i < na ? a[i] : b[i - na]; }
};

inline std::uint64_t double_key(double v) {
    if (v == 0.0) v = 0.0;  // collapse -0.0 onto +0.0
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return bits;
}

// Monotone mapping: orderable_key(x) < orderable_key(y) iff x < y.
inline std::uint64_t orderable_key(double v) {
    const std::uint64_t bits = double_key(v);
    return (bits & 0x8000000000000000ULL) ? ~bits : (bits | 0x8000000000000000ULL);
}

inline std::uint64_t mix_u64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Open-addressing map from 128-bit objective keys to dense ids.  Grows on
// demand; reused across generations to avoid rehash churn.
class PairInterner {
public:
    void reset(std::size_t expected) {
        std::size_t cap = 64;
        while (cap < expected * 2) cap <<= 1;
        if (keys1_.size() < cap) {
            keys1_.assign(cap, EMPTY);
            keys2_.assign(cap, 0);
            ids_.assign(cap, 0);
        } else {
            std::fill(keys1_.begin(), keys1_.end(), EMPTY);
        }
        count_ = 0;
    }

    std::uint32_t intern(std::uint64_t k1, std::uint64_t k2) {
        if (k1 == EMPTY) k1 = EMPTY - 1;  // NaN payload collision guard; NaN rejected upstream
        if ((count_ + 1) * 2 > keys1_.size()) grow();
        const std::size_t mask = keys1_.size() - 1;
        std::size_t slot = (mix_u64(k1) ^ mix_u64(k2 + 0x9e3779b97f4a7c15ULL)) & mask;
        while (true) {
            if (keys1_[slot] == EMPTY) {
                keys1_[slot] = k1;
                keys2_[slot] = k2;
                ids_[slot] = count_;
                return count_++;
            }
            if (keys1_[slot] == k1 && keys2_[slot] == k2) return ids_[slot];
            slot = (slot + 1) & mask;
        }
    }

    std::uint32_t count() const { return count_; }

private:
    static constexpr std::uint64_t EMPTY = 0xFFFFFFFFFFFFFFFFULL;

    void grow() {
        std::vector<std::uint64_t> old1 = std::move(keys1_);
        std::vector<std::uint64_t> old2 = std::move(keys2_);
        std::vector<std::uint32_t> oldids = std::move(ids_);
        keys1_.assign(old1.size() * 2, EMPTY);
        keys2_.assign(old1.size() * 2, 0);
        ids_.assign(old1.size() * 2, 0);
        const std::size_t mask = keys1_.size() - 1;
        for (std::size_t i = 0; i < old1.size(); ++i) {
            if (old1[i] == EMPTY) continue;
            std::size_t slot = (mix_u64(old1[i]) ^ mix_u64(old2[i] + 0x9e3779b97f4a7c15ULL)) & mask;
            while (keys1_[slot] != EMPTY) slot = (slot + 1) & mask;
            keys1_[slot] = old1[i];
            keys2_[slot] = old2[i];
            ids_[slot] = oldids[i];
        }
    }

    std::vector<std::uint64_t> keys1_, keys2_;
    std::vector<std::uint32_t> ids_;
    std::uint32_t count_ = 0;
};

// Value-bucket map for crowding: orderable key -> bucket index, stamped so it
// clears in O(1) between passes.
class BucketMap {
public:
    void begin_pass(std::size_t expected) {
        std::size_t cap = 64;
        while (cap < expected * 2) cap <<= 1;
        if (slots_.size() < cap) slots_.assign(cap, Slot{});
        ++stamp_;
        live_ = 0;
    }

    // Returns the bucket for key, creating it with next_bucket if absent.
    std::uint32_t find_or_add(std::uint64_t key, std::uint32_t next_bucket, bool& created) {
        if ((live_ + 1) * 2 > slots_.size()) grow();
        const std::size_t mask = slots_.size() - 1;
        std::size_t slot = mix_u64(key) & mask;
        while (true) {
            Slot& s = slots_[slot];
            if (s.stamp != stamp_) {
                s.stamp = stamp_;
                s.key = key;
                s.bucket = next_bucket;
                ++live_;
                created = true;
                return next_bucket;
            }
            if (s.key == key) {
                created = false;
                return s.bucket;
            }
            slot = (slot + 1) & mask;
        }
    }

private:
    struct Slot {
        std::uint64_t key = 0;
        std::uint32_t bucket = 0;
        std::uint64_t stamp = 0;
    };

    void grow() {
        std::vector<Slot> old = std::move(slots_);
        slots_.assign(old.size() * 2, Slot{});
        const std::size_t mask = slots_.size() - 1;
        for (const Slot& s : old) {
            if (s.stamp != stamp_) continue;
            std::size_t slot = mix_u64(s.key) & mask;
            while (slots_[slot].stamp == stamp_) slot = (slot + 1) & mask;
            slots_[slot] = s;
        }
    }

    std::vector<Slot> slots_;
    std::uint64_t stamp_ = 0;
    std::size_t live_ = 0;
};

// Reusable workspace for rank + crowding passes.
struct ParetoScratch {
    PairInterner interner;
    BucketMap buckets;
    std::vector<std::uint32_t> distinct_id;    // per pool member
    std::vector<std::uint32_t> class_members;  // members grouped by rank, index-ascending
    std::vector<std::uint32_t> class_offset;   // rank r members at [offset[r], offset[r+1])
    std::vector<double> distinct_f1, distinct_f2;
    std::vector<std::uint32_t> distinct_rank;
    std::vector<std::uint32_t> sorted_distinct;
    std::vector<double> stair_max_f2;
    std::vector<std::uint32_t> bucket_order;
    std::vector<std::uint64_t> bucket_key;
    std::vector<double> bucket_value;
    std::vector<std::uint32_t> bucket_first, bucket_last, bucket_size;
    std::uint32_t bucket_count = 0;
};

// Assigns rank and crowding to every individual in the pool.  Returns the
// number of rank classes.  Semantics are exactly those of the quadratic
// peeling reference: identical objective pairs share a rank; per rank class
// and objective, members are ordered by value with ties in index order,
// boundary members get +infinity, interior members accumulate the
// next-minus-previous difference (objective one first, then objective two).
// With normalize set, each interior difference is divided by the class's
// objective range (zero range contributes zero).
inline std::uint32_t rank_and_crowd(PoolView pool, ParetoScratch& scratch,
                                    bool normalize = false) {
    const std::size_t n = pool.size();
    if (n == 0) return 0;

    // Intern distinct objective pairs.
    scratch.interner.reset(std::min<std::size_t>(n, 1u << 20));
    scratch.distinct_id.resize(n);
    scratch.distinct_f1.clear();
    scratch.distinct_f2.clear();
    for (std::size_t i = 0; i < n; ++i) {
        const ObjectiveVector& f = pool[i].objectives;
        if (!f.evaluated())
            throw std::logic_error("nondominated_sort: population member not evaluated");
        const std::uint32_t id = scratch.interner.intern(double_key(f.f1), double_key(f.f2));
        scratch.distinct_id[i] = id;
        if (id == scratch.distinct_f1.size()) {
            scratch.distinct_f1.push_back(f.f1 == 0.0 ? 0.0 : f.f1);
            scratch.distinct_f2.push_back(f.f2 == 0.0 ? 0.0 : f.f2);
        }
    }
    const std::uint32_t distinct = scratch.interner.count();

    // Staircase sweep over distinct pairs in (f1 desc, f2 desc) order.
    scratch.sorted_distinct.resize(distinct);
    for (std::uint32_t i = 0; i < distinct; ++i) scratch.sorted_distinct[i] = i;
    std::sort(scratch.sorted_distinct.begin(), scratch.sorted_distinct.end(),
              [&](std::uint32_t x, std::uint32_t y) {
                  if (scratch.distinct_f1[x] != scratch.distinct_f1[y])
                      return scratch.distinct_f1[x] > scratch.distinct_f1[y];
                  return scratch.distinct_f2[x] > scratch.distinct_f2[y];
              });
    scratch.distinct_rank.resize(distinct);
    scratch.stair_max_f2.clear();
    for (const std::uint32_t id : scratch.sorted_distinct) {
        const double f2 = scratch.distinct_f2[id];
        // First level whose running max f2 is below f2; ranks above it dominate.
        const auto it = std::partition_point(scratch.stair_max_f2.begin(),
                                             scratch.stair_max_f2.end(),
                                             [f2](double level) { return level >= f2; });
        const auto level = static_cast<std::size_t>(it - scratch.stair_max_f2.begin());
        scratch.distinct_rank[id] = static_cast<std::uint32_t>(level + 1);
        if (level == scratch.stair_max_f2.size())
            scratch.stair_max_f2.push_back(f2);
        else
            scratch.stair_max_f2[level] = f2;
    }
    const auto max_rank = static_cast<std::uint32_t>(scratch.stair_max_f2.size());

    // Write ranks; group members by rank in index order (counting sort).
    scratch.class_offset.assign(max_rank + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t r = scratch.distinct_rank[scratch.distinct_id[i]];
        pool[i].rank = static_cast<std::int32_t>(r);
        pool[i].crowding = 0.0;
        ++scratch.class_offset[r];
    }
    for (std::uint32_t r = 1; r <= max_rank; ++r)
        scratch.class_offset[r] += scratch.class_offset[r - 1];
    scratch.class_members.resize(n);
    for (std::size_t i = n; i-- > 0;) {
        const std::uint32_t r = scratch.distinct_rank[scratch.distinct_id[i]];
        scratch.class_members[--scratch.class_offset[r]] = static_cast<std::uint32_t>(i);
    }
    // class_offset[r] now holds the start of rank r+1's segment... rebuild ends.

    for (std::uint32_t r = 1; r <= max_rank; ++r) {
        const std::uint32_t begin = scratch.class_offset[r];
        const std::uint32_t end =
            r < max_rank ? scratch.class_offset[r + 1] : static_cast<std::uint32_t>(n);
        const std::uint32_t size = end - begin;
        for (int objective = 0; objective < 2; ++objective) {
            // Bucket members by objective value.  In the stable (value, index)
            // order only the first and last member of each equal-value run can
            // receive a nonzero difference, so per bucket it suffices to track
            // the first and last member of the class walk (which is
            // index-ascending) plus the run length.
            scratch.buckets.begin_pass(std::min<std::size_t>(size, 1u << 20));
            scratch.bucket_key.clear();
            scratch.bucket_value.clear();
            scratch.bucket_first.clear();
            scratch.bucket_last.clear();
            scratch.bucket_size.clear();
            scratch.bucket_count = 0;
            for (std::uint32_t t = begin; t < end; ++t) {
                const std::uint32_t member = scratch.class_members[t];
                const double value = objective == 0 ? pool[member].objectives.f1
                                                    : pool[member].objectives.f2;
                const std::uint64_t key = orderable_key(value);
                bool created = false;
                const std::uint32_t bucket =
                    scratch.buckets.find_or_add(key, scratch.bucket_count, created);
                if (created) {
                    scratch.bucket_key.push_back(key);
                    scratch.bucket_value.push_back(value == 0.0 ? 0.0 : value);
                    scratch.bucket_first.push_back(member);
                    scratch.bucket_last.push_back(member);
                    scratch.bucket_size.push_back(1);
                    ++scratch.bucket_count;
                } else {
                    scratch.bucket_last[bucket] = member;
                    ++scratch.bucket_size[bucket];
                }
            }
            const std::uint32_t K = scratch.bucket_count;
            scratch.bucket_order.resize(K);
            for (std::uint32_t i2 = 0; i2 < K; ++i2) scratch.bucket_order[i2] = i2;
            std::sort(scratch.bucket_order.begin(), scratch.bucket_order.end(),
                      [&](std::uint32_t x, std::uint32_t y) {
                          return scratch.bucket_key[x] < scratch.bucket_key[y];
                      });

            const double range = scratch.bucket_value[scratch.bucket_order[K - 1]] -
                                 scratch.bucket_value[scratch.bucket_order[0]];
            const auto value_at = [&](std::uint32_t pos) {
                return scratch.bucket_value[scratch.bucket_order[pos]];
            };
            const auto contribute = [&](std::uint32_t member, double hi, double lo) {
                if (!normalize)
                    pool[member].crowding += hi - lo;
                else
                    pool[member].crowding += range > 0.0 ? (hi - lo) / range : 0.0;
            };
            for (std::uint32_t i2 = 0; i2 < K; ++i2) {
                const std::uint32_t b = scratch.bucket_order[i2];
                const bool at_lo = i2 == 0;
                const bool at_hi = i2 + 1 == K;
                if (scratch.bucket_size[b] == 1) {
                    if (at_lo || at_hi)
                        pool[scratch.bucket_first[b]].crowding =
                            std::numeric_limits<double>::infinity();
                    else
                        contribute(scratch.bucket_first[b], value_at(i2 + 1), value_at(i2 - 1));
                } else {
                    if (at_lo)
                        pool[scratch.bucket_first[b]].crowding =
                            std::numeric_limits<double>::infinity();
                    else
                        contribute(scratch.bucket_first[b], scratch.bucket_value[b],
                                   value_at(i2 - 1));
                    if (at_hi)
                        pool[scratch.bucket_last[b]].crowding =
                            std::numeric_limits<double>::infinity();
                    else
                        contribute(scratch.bucket_last[b], value_at(i2 + 1),
                                   scratch.bucket_value[b]);
                }
            }
        }
    }
    return max_rank;
}

inline ParetoScratch& shared_pareto_scratch() {
    thread_local ParetoScratch scratch;
    return scratch;
}

}  // namespace detail

// Population with ranks 1..max_rank and crowding distances assigned.
struct RankedPopulation {
    Population pop;
    std::uint32_t max_rank = 0;
};

inline RankedPopulation nondominated_sort(Population pop) {
    RankedPopulation ranked;
    ranked.pop = std::move(pop);
    detail::PoolView view{ranked.pop.data(), ranked.pop.size()};
    ranked.max_rank = detail::rank_and_crowd(view, detail::shared_pareto_scratch());
    return ranked;
}

// Ranks and crowding are assigned together by nondominated_sort; this
// recomputes and returns the crowding values in population order.  The
// normalization flag divides each contribution by the rank class's objective
// range; it defaults off, matching the raw-difference accumulation used
// everywhere else.
inline std::vector<double> crowding_distance(RankedPopulation& ranked, bool normalize = false) {
    detail::PoolView view{ranked.pop.data(), ranked.pop.size()};
    ranked.max_rank = detail::rank_and_crowd(view, detail::shared_pareto_scratch(), normalize);
    std::vector<double> values;
    values.reserve(ranked.pop.size());
    for (const auto& ind : ranked.pop) values.push_back(ind.crowding);
    return values;
}

namespace detail {

// Crowded-comparison winner: lower rank, then larger crowding, then a fair
// coin.  Returns true when x wins.
inline bool crowded_compare_first_wins(const Individual& x, const Individual& y, RngStream& rng) {
    if (x.rank == 0 || y.rank == 0)
        throw std::logic_error("crowded_compare: rank/crowding not assigned");
    if (x.rank != y.rank) return x.rank < y.rank;
    if (x.crowding != y.crowding) return x.crowding > y.crowding;
    return !rng.coin();
}

}  // namespace detail

inline const Individual& crowded_compare(const Individual& x, const Individual& y, RngStream& rng) {
    return detail::crowded_compare_first_wins(x, y, rng) ? x : y;
}

namespace detail {

// Index form of the binary tournament; draw order is two contestant indices
// per duel, plus whatever the comparison itself consumes.
inline std::vector<std::uint32_t> tournament_indices(const Population& pop, std::size_t n_out,
                                                     RngStream& rng) {
    if (pop.empty()) throw std::invalid_argument("binary_tournament: empty population");
    std::vector<std::uint32_t> winners;
    winners.reserve(n_out);
    const std::size_t n = pop.size();
    for (std::size_t t = 0; t < n_out; ++t) {
        const auto i = static_cast<std::uint32_t>(rng.uniform_index(n));
        const auto j = static_cast<std::uint32_t>(rng.uniform_index(n));
        winners.push_back(crowded_compare_first_wins(pop[i], pop[j], rng) ? i : j);
    }
    return winners;
}

}  // namespace detail

inline Population binary_tournament(const RankedPopulation& ranked, std::size_t n_out,
                                    RngStream& rng) {
    const auto winners = detail::tournament_indices(ranked.pop, n_out, rng);
    Population pool;
    pool.reserve(n_out);
    for (const auto idx : winners) pool.push_back(ranked.pop[idx]);
    return pool;
}

}  // namespace moeda
