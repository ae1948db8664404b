#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "moeda/replacement.hpp"
#include "oracle_helpers.hpp"

using moeda::elitist_replacement;
using moeda::Genome;
using moeda::genome_from_string;
using moeda::Individual;
using moeda::Population;
using moeda::RngStream;
using moeda::rts_replace;
using moeda::RtsConfig;
using moeda::RtsTiePolicy;

namespace {

Individual evaluated(const std::string& bits, double f1, double f2) {
    Individual ind;
    ind.genome = genome_from_string(bits);
    ind.objectives = {f1, f2};
    return ind;
}

std::multiset<std::pair<double, double>> objective_multiset(const Population& pop) {
    std::multiset<std::pair<double, double>> out;
    for (const auto& ind : pop) out.insert({ind.objectives.f1, ind.objectives.f2});
    return out;
}

// Independent emulation of the replacement contract on top of the naive
// oracles: admit whole rank classes, truncate the overflowing class by
// descending crowding with pool-index tie-break.
std::vector<std::size_t> naive_elitist_indices(const Population& combined, std::size_t n) {
    const std::vector<int> rank = oracle::naive_ranks(combined);
    const std::vector<double> crowd = oracle::naive_crowding(combined, rank);
    std::vector<std::size_t> chosen;
    const int max_rank = *std::max_element(rank.begin(), rank.end());
    for (int r = 1; r <= max_rank && chosen.size() < n; ++r) {
        std::vector<std::size_t> cls;
        for (std::size_t i = 0; i < combined.size(); ++i)
            if (rank[i] == r) cls.push_back(i);
        if (chosen.size() + cls.size() <= n) {
            chosen.insert(chosen.end(), cls.begin(), cls.end());
            continue;
        }
        std::sort(cls.begin(), cls.end(), [&](std::size_t a, std::size_t b) {
            if (crowd[a] != crowd[b]) return crowd[a] > crowd[b];
            return a < b;
        });
        cls.resize(n - chosen.size());
        chosen.insert(chosen.end(), cls.begin(), cls.end());
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

TEST_CASE("elitist replacement keeps parents against dominated duplicate offspring") {
    Population parents{evaluated("1111", 4, 4), evaluated("1110", 3, 3), evaluated("1100", 2, 2),
                       evaluated("1000", 1, 1)};
    Population offspring{evaluated("1000", 1, 1), evaluated("1000", 1, 1)};
    const Population next = elitist_replacement(parents, offspring);
    REQUIRE(next.size() == 4);
    CHECK(objective_multiset(next) == objective_multiset(parents));
}

TEST_CASE("elitist replacement keeps the boundary points of the first front") {
    Population parents{evaluated("10", 3, 1), evaluated("01", 1, 3)};
    Population offspring{evaluated("11", 2, 2), evaluated("00", 1, 1)};
    const Population next = elitist_replacement(parents, offspring);
    REQUIRE(next.size() == 2);
    const auto kept = objective_multiset(next);
    CHECK(kept.count({3, 1}) == 1);
    CHECK(kept.count({1, 3}) == 1);
}

TEST_CASE("elitist replacement of an identical multiset returns the same multiset") {
    Population parents{evaluated("10", 1, 2), evaluated("01", 2, 1)};
    const Population next = elitist_replacement(parents, parents);
    REQUIRE(next.size() == 2);
    CHECK(objective_multiset(next) == objective_multiset(parents));
}

TEST_CASE("elitist replacement matches the naive emulation on random pools") {
    RngStream rng(901, 0);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.uniform_index(24);
        const std::size_t n_off = rng.uniform_index(n + 1);
        auto draw = [&](std::size_t count) {
            Population pop;
            for (std::size_t i = 0; i < count; ++i) {
                Individual ind;
                ind.genome = Genome(4);
                ind.genome.set_word(0, rng.next_u64());
                ind.objectives = {static_cast<double>(rng.uniform_index(4)),
                                  static_cast<double>(rng.uniform_index(4))};
                pop.push_back(std::move(ind));
            }
            return pop;
        };
        const Population parents = draw(n);
        const Population offspring = draw(n_off);

        Population combined = parents;
        combined.insert(combined.end(), offspring.begin(), offspring.end());
        const std::vector<std::size_t> want = naive_elitist_indices(combined, n);

        const Population next = elitist_replacement(parents, offspring);
        REQUIRE(next.size() == n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(next[i].genome == combined[want[i]].genome);
            CHECK(next[i].objectives.f1 == combined[want[i]].objectives.f1);
            CHECK(next[i].objectives.f2 == combined[want[i]].objectives.f2);
        }
    }
}

TEST_CASE("elitist replacement never trades a first-front member for a later one") {
    RngStream rng(902, 0);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.uniform_index(16);
        Population parents, offspring;
        for (std::size_t i = 0; i < n; ++i) {
            Individual a, b;
            a.genome = Genome(3);
            b.genome = Genome(3);
            a.objectives = {static_cast<double>(rng.uniform_index(5)),
                            static_cast<double>(rng.uniform_index(5))};
            b.objectives = {static_cast<double>(rng.uniform_index(5)),
                            static_cast<double>(rng.uniform_index(5))};
            parents.push_back(std::move(a));
            offspring.push_back(std::move(b));
        }
        Population combined = parents;
        combined.insert(combined.end(), offspring.begin(), offspring.end());
        const std::vector<int> rank = oracle::naive_ranks(combined);
        const std::size_t rank1_total =
            static_cast<std::size_t>(std::count(rank.begin(), rank.end(), 1));

        const Population next = elitist_replacement(parents, offspring);
        std::size_t rank1_kept = 0;
        bool later_kept = false;
        for (const auto& ind : next) {
            bool is_rank1 = false;
            for (std::size_t j = 0; j < combined.size(); ++j)
                if (rank[j] == 1 && combined[j].objectives.f1 == ind.objectives.f1 &&
                    combined[j].objectives.f2 == ind.objectives.f2) {
                    is_rank1 = true;
                    break;
                }
            if (is_rank1)
                ++rank1_kept;
            else
                later_kept = true;
        }
        if (later_kept) CHECK(rank1_kept >= std::min(rank1_total, next.size()));
    }
}

TEST_CASE("elitist replacement validates shapes") {
    Population parents{evaluated("1", 1, 1)};
    Population two{evaluated("1", 1, 1), evaluated("0", 0, 0)};
    CHECK_THROWS_AS(elitist_replacement(parents, two), std::invalid_argument);
    CHECK_THROWS_AS(elitist_replacement(Population{}, Population{}), std::invalid_argument);
    const Population next = elitist_replacement(parents, Population{});
    CHECK(next.size() == 1);
}

TEST_CASE("rts replaces a dominated nearest member") {
    Population current{evaluated("0000", 1, 1), evaluated("1100", 2, 2), evaluated("1111", 0, 0),
                       evaluated("0011", 1, 2)};
    Individual off = evaluated("1101", 3, 3);
    RngStream rng(903, 0);
    RtsConfig cfg;
    cfg.w = 4;
    const Population next = rts_replace(current, off, cfg, rng);
    REQUIRE(next.size() == 4);
    // Nearest at distance 1 are members 1 and 2; the lower index loses its slot.
    CHECK(next[1].genome == off.genome);
    CHECK(next[1].objectives.f1 == 3.0);
    CHECK(next[0].genome == current[0].genome);
    CHECK(next[2].genome == current[2].genome);
    CHECK(next[3].genome == current[3].genome);
}

TEST_CASE("rts keeps the population unchanged when the incumbent dominates") {
    Population current{evaluated("1111", 5, 5), evaluated("0000", 4, 4)};
    Individual off = evaluated("1110", 2, 2);
    RngStream rng(904, 0);
    RtsConfig cfg;
    cfg.w = 2;
    const Population next = rts_replace(current, off, cfg, rng);
    for (std::size_t i = 0; i < current.size(); ++i) {
        CHECK(next[i].genome == current[i].genome);
        CHECK(next[i].objectives.f1 == current[i].objectives.f1);
    }
}

TEST_CASE("rts coin-flip tie replaces about half the time") {
    const Population current{evaluated("1010", 2, 2), evaluated("0101", 3, 1)};
    const Individual off = evaluated("1010", 2, 2);
    RngStream rng(905, 0);
    RtsConfig cfg;
    cfg.w = 2;
    int replaced = 0;
    for (int t = 0; t < 10000; ++t) {
        Population trial = current;
        if (moeda::detail::rts_replace_inplace(trial, off, cfg, rng)) ++replaced;
    }
    CHECK(replaced > 4500);
    CHECK(replaced < 5500);
}

TEST_CASE("rts tie policies pick the configured side") {
    const Population current{evaluated("1010", 2, 2), evaluated("0101", 1, 3)};
    const Individual off = evaluated("1010", 2, 2);  // equal objectives, distance 0
    RngStream rng(906, 0);
    RtsConfig cfg;
    cfg.w = 2;
    cfg.tie_policy = RtsTiePolicy::keep_incumbent;
    for (int t = 0; t < 10; ++t) {
        Population trial = current;
        CHECK_FALSE(moeda::detail::rts_replace_inplace(trial, off, cfg, rng));
    }
    cfg.tie_policy = RtsTiePolicy::always_replace;
    for (int t = 0; t < 10; ++t) {
        Population trial = current;
        CHECK(moeda::detail::rts_replace_inplace(trial, off, cfg, rng));
        CHECK(trial[0].genome == off.genome);
    }
}

TEST_CASE("rts window validation and defaults") {
    Population current{evaluated("10", 1, 1), evaluated("01", 2, 2)};
    Individual off = evaluated("11", 3, 3);
    RngStream rng(907, 0);
    RtsConfig cfg;
    cfg.w = 3;
    CHECK_THROWS_AS(rts_replace(current, off, cfg, rng), std::invalid_argument);
    cfg.w = 0;
    CHECK_THROWS_AS(rts_replace(current, off, cfg, rng), std::invalid_argument);
    // Unset w falls back to min(n, genome length) = 2 and succeeds.
    cfg.w.reset();
    const Population next = rts_replace(current, off, cfg, rng);
    CHECK(next.size() == 2);

    Individual raw;
    raw.genome = genome_from_string("11");
    CHECK_THROWS_AS(rts_replace(current, raw, cfg, rng), std::logic_error);
}

TEST_CASE("rts changes at most one member and preserves size") {
    RngStream rng(908, 0);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.uniform_index(20);
        Population current;
        for (std::size_t i = 0; i < n; ++i) {
            Individual ind;
            ind.genome = Genome(8);
            ind.genome.set_word(0, rng.next_u64());
            ind.objectives = {static_cast<double>(rng.uniform_index(3)),
                              static_cast<double>(rng.uniform_index(3))};
            current.push_back(std::move(ind));
        }
        Individual off;
        off.genome = Genome(8);
        off.genome.set_word(0, rng.next_u64());
        off.objectives = {static_cast<double>(rng.uniform_index(3)),
                          static_cast<double>(rng.uniform_index(3))};
        RtsConfig cfg;
        cfg.w = 1 + static_cast<std::uint32_t>(rng.uniform_index(n));
        const Population next = rts_replace(current, off, cfg, rng);
        REQUIRE(next.size() == n);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (!(next[i].genome == current[i].genome)) ++changed;
        CHECK(changed <= 1);
    }
}

TEST_CASE("rts with a full window finds an exact duplicate at distance zero") {
    Population current{evaluated("1100", 1, 1), evaluated("0011", 1, 1), evaluated("1111", 1, 1)};
    Individual off = evaluated("0011", 2, 2);  // dominates its duplicate
    RngStream rng(909, 0);
    RtsConfig cfg;
    cfg.w = 3;
    const Population next = rts_replace(current, off, cfg, rng);
    CHECK(next[1].objectives.f1 == 2.0);
    CHECK(next[0].objectives.f1 == 1.0);
    CHECK(next[2].objectives.f1 == 1.0);
}
