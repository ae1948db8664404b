#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "moeda/engine.hpp"
#include "oracle_helpers.hpp"

namespace {

// Independent tolerance matcher: point j is covered iff some member lands
// within 1e-9 of it on both objectives.
std::vector<std::uint8_t> covered_points(const moeda::Population& pop,
                                         const std::vector<moeda::ObjectiveVector>& points) {
    std::vector<std::uint8_t> seen(points.size(), 0);
    for (const auto& ind : pop)
        for (std::size_t j = 0; j < points.size(); ++j)
            if (std::abs(ind.objectives.f1 - points[j].f1) <= 1e-9 &&
                std::abs(ind.objectives.f2 - points[j].f2) <= 1e-9)
                seen[j] = 1;
    return seen;
}

std::uint32_t count_flags(const std::vector<std::uint8_t>& seen) {
    std::uint32_t covered = 0;
    for (const std::uint8_t s : seen) covered += s;
    return covered;
}

struct ReferenceOutcome {
    moeda::RunResult result;
    moeda::Population final_pop;
};

// Straight-line rebuild of the run contract from public operations only,
// consuming randomness in the documented order.
ReferenceOutcome reference_run(const moeda::ProblemSpec& problem,
                               const moeda::AlgorithmConfig& algo, std::uint64_t n,
                               moeda::RepresentativeMode mode, std::uint64_t seed,
                               std::uint64_t stream) {
    moeda::RngStream rng(seed, stream);
    const std::uint32_t ell = problem.ell;
    const double pc = algo.variation.pc;
    const double pm = algo.variation.pm ? *algo.variation.pm : 1.0 / ell;
    const std::uint32_t mult = algo.generation_cap_multiplier
                                   ? *algo.generation_cap_multiplier
                                   : moeda::default_cap_multiplier(algo.variation.kind);
    const std::uint64_t cap = static_cast<std::uint64_t>(mult) * ell;
    const moeda::RepresentativeSet reps = moeda::representative_set(problem, mode);
    const moeda::RepresentativeSet obj_reps =
        moeda::representative_set(problem, moeda::RepresentativeMode::objective);

    ReferenceOutcome out;
    out.result.seed = seed;
    out.result.stream = stream;

    moeda::Population pop = moeda::random_population(n, ell, rng);
    moeda::evaluate_population(problem, pop);
    auto record = [&] {
        out.result.coverage_trajectory.push_back(moeda::coverage(pop, reps));
        out.result.points_covered_trajectory.push_back(
            count_flags(covered_points(pop, obj_reps.points)));
    };
    record();

    std::uint64_t gen = 0;
    while (gen < cap) {
        if (algo.early_abort_on_coverage && out.result.coverage_trajectory.back() == 1.0) break;
        ++gen;
        moeda::RankedPopulation ranked = moeda::nondominated_sort(pop);
        moeda::Population pool = moeda::binary_tournament(ranked, n, rng);
        moeda::Population off;
        switch (algo.variation.kind) {
            case moeda::VariationKind::umda:
                off = moeda::sample_univariate(moeda::fit_univariate(pool), n, rng);
                break;
            case moeda::VariationKind::mecga:
                off = moeda::sample_mpm(moeda::greedy_mpm_search(pool), n, rng);
                break;
            case moeda::VariationKind::nsga2_xover: {
                std::size_t t = 0;
                for (; t + 1 < pool.size(); t += 2) {
                    auto children =
                        moeda::two_point_crossover(pool[t].genome, pool[t + 1].genome, pc, rng);
                    moeda::Individual a;
                    a.genome = moeda::bitflip_mutation(children.first, pm, rng);
                    off.push_back(std::move(a));
                    moeda::Individual b;
                    b.genome = moeda::bitflip_mutation(children.second, pm, rng);
                    off.push_back(std::move(b));
                }
                if (t < pool.size()) {
                    moeda::Individual a;
                    a.genome = moeda::bitflip_mutation(pool[t].genome, pm, rng);
                    off.push_back(std::move(a));
                }
                break;
            }
        }
        moeda::evaluate_population(problem, off);
        if (algo.replacement == moeda::ReplacementKind::elitist) {
            pop = moeda::elitist_replacement(pop, off);
        } else {
            for (const auto& o : off) pop = moeda::rts_replace(pop, o, algo.rts, rng);
        }
        record();
    }

    out.result.generations_run = static_cast<std::uint32_t>(gen);
    out.result.evaluations = n * (gen + 1);
    out.result.success = out.result.coverage_trajectory.back() == 1.0;
    if (out.result.success) {
        std::size_t idx = out.result.coverage_trajectory.size() - 1;
        while (idx > 0 && out.result.coverage_trajectory[idx - 1] == 1.0) --idx;
        out.result.g_star = static_cast<std::uint32_t>(idx);
    }
    out.result.per_point_coverage = covered_points(pop, obj_reps.points);
    out.final_pop = pop;
    return out;
}

void require_equal_results(const moeda::RunResult& a, const moeda::RunResult& b) {
    REQUIRE(a.success == b.success);
    REQUIRE(a.g_star == b.g_star);
    REQUIRE(a.generations_run == b.generations_run);
    REQUIRE(a.evaluations == b.evaluations);
    REQUIRE(a.coverage_trajectory == b.coverage_trajectory);
    REQUIRE(a.points_covered_trajectory == b.points_covered_trajectory);
    REQUIRE(a.per_point_coverage == b.per_point_coverage);
    REQUIRE(a.seed == b.seed);
    REQUIRE(a.stream == b.stream);
}

void require_result_invariants(const moeda::RunResult& r, std::uint64_t n) {
    REQUIRE(r.evaluations == n * (r.generations_run + 1));
    REQUIRE(r.coverage_trajectory.size() == r.generations_run + 1u);
    REQUIRE(r.points_covered_trajectory.size() == r.generations_run + 1u);
    for (const double c : r.coverage_trajectory) {
        REQUIRE(c >= 0.0);
        REQUIRE(c <= 1.0);
    }
    REQUIRE(r.success == (r.coverage_trajectory.back() == 1.0));
    if (r.g_star) {
        REQUIRE(r.success);
        for (std::size_t g = *r.g_star; g < r.coverage_trajectory.size(); ++g)
            REQUIRE(r.coverage_trajectory[g] == 1.0);
        if (*r.g_star > 0) REQUIRE(r.coverage_trajectory[*r.g_star - 1] != 1.0);
    } else {
        REQUIRE_FALSE(r.success);
    }
}

moeda::AlgorithmConfig make_algo(moeda::VariationKind kind, moeda::ReplacementKind repl) {
    moeda::AlgorithmConfig algo;
    algo.variation.kind = kind;
    algo.replacement = repl;
    return algo;
}

}  // namespace

TEST_CASE("run matches a reference built from public operations") {
    struct Case {
        moeda::ProblemSpec problem;
        moeda::VariationKind kind;
        moeda::ReplacementKind repl;
        std::uint64_t n;
        moeda::RepresentativeMode mode;
        std::uint64_t seed;
    };
    const std::vector<Case> cases = {
        {moeda::make_onemax_zeromax(4), moeda::VariationKind::umda, moeda::ReplacementKind::rts,
         64, moeda::RepresentativeMode::genotype, 11},
        {moeda::make_trap_invtrap(2, 3), moeda::VariationKind::mecga,
         moeda::ReplacementKind::elitist, 48, moeda::RepresentativeMode::genotype, 7},
        {moeda::make_trap_invtrap(2, 3), moeda::VariationKind::mecga, moeda::ReplacementKind::rts,
         40, moeda::RepresentativeMode::objective, 3},
        {moeda::make_trap_invtrap(2, 3), moeda::VariationKind::nsga2_xover,
         moeda::ReplacementKind::rts, 40, moeda::RepresentativeMode::objective, 9},
        {moeda::make_overlap(3, 3, 2), moeda::VariationKind::umda, moeda::ReplacementKind::elitist,
         32, moeda::RepresentativeMode::objective, 21},
        {moeda::make_onemax_zeromax(5), moeda::VariationKind::nsga2_xover,
         moeda::ReplacementKind::elitist, 31, moeda::RepresentativeMode::genotype, 5},
    };
    for (const auto& c : cases) {
        CAPTURE(static_cast<int>(c.kind), static_cast<int>(c.repl), c.n, c.seed);
        const moeda::AlgorithmConfig algo = make_algo(c.kind, c.repl);
        moeda::RngStream rng(c.seed, 0);
        const moeda::RunResult got = moeda::run(c.problem, algo, c.n, c.mode, rng);
        const ReferenceOutcome want = reference_run(c.problem, algo, c.n, c.mode, c.seed, 0);
        require_equal_results(got, want.result);
        require_result_invariants(got, c.n);
    }
}

TEST_CASE("onemax-zeromax ell=4 with umda and rts at n=64 succeeds across seeds") {
    const moeda::ProblemSpec problem = moeda::make_onemax_zeromax(4);
    const moeda::AlgorithmConfig algo =
        make_algo(moeda::VariationKind::umda, moeda::ReplacementKind::rts);
    for (const std::uint64_t seed : {101, 202, 303, 404, 505, 606, 707, 808, 909, 1010}) {
        moeda::RngStream rng(seed, 0);
        const moeda::RunResult r =
            moeda::run(problem, algo, 64, moeda::RepresentativeMode::objective, rng);
        CAPTURE(seed);
        REQUIRE(r.success);
        REQUIRE(r.g_star.has_value());
    }
    // The harsher all-genotypes criterion also holds at favourable seeds.
    moeda::RngStream rng(303, 0);
    const moeda::RunResult r =
        moeda::run(problem, algo, 64, moeda::RepresentativeMode::genotype, rng);
    REQUIRE(r.success);
}

TEST_CASE("generation cap zero returns the initial snapshot") {
    const moeda::ProblemSpec problem = moeda::make_onemax_zeromax(2);
    moeda::AlgorithmConfig algo = make_algo(moeda::VariationKind::umda,
                                            moeda::ReplacementKind::elitist);
    algo.generation_cap_multiplier = 0;
    moeda::RngStream rng(42, 0);
    const moeda::RunResult r =
        moeda::run(problem, algo, 64, moeda::RepresentativeMode::genotype, rng);
    REQUIRE(r.success);
    REQUIRE(r.g_star == 0u);
    REQUIRE(r.generations_run == 0u);
    REQUIRE(r.evaluations == 64u);
    REQUIRE(r.coverage_trajectory.size() == 1u);
    REQUIRE(r.coverage_trajectory.front() == 1.0);
    const ReferenceOutcome want =
        reference_run(problem, algo, 64, moeda::RepresentativeMode::genotype, 42, 0);
    require_equal_results(r, want.result);
}

TEST_CASE("two individuals cannot cover sixteen genotype representatives") {
    const moeda::ProblemSpec problem = moeda::make_trap_invtrap(4, 3);
    for (const auto kind : {moeda::VariationKind::umda, moeda::VariationKind::nsga2_xover}) {
        for (const std::uint64_t seed : {1, 2, 3, 4, 5}) {
            const moeda::AlgorithmConfig algo =
                make_algo(kind, kind == moeda::VariationKind::umda
                                    ? moeda::ReplacementKind::rts
                                    : moeda::ReplacementKind::elitist);
            moeda::RngStream rng(seed, 0);
            const moeda::RunResult r =
                moeda::run(problem, algo, 2, moeda::RepresentativeMode::genotype, rng);
            CAPTURE(static_cast<int>(kind), seed);
            REQUIRE_FALSE(r.success);
            REQUIRE_FALSE(r.g_star.has_value());
        }
    }
}

TEST_CASE("identical seed and stream reproduce the result bitwise") {
    const moeda::ProblemSpec problem = moeda::make_trap_invtrap(2, 3);
    const moeda::AlgorithmConfig algo =
        make_algo(moeda::VariationKind::mecga, moeda::ReplacementKind::rts);
    moeda::RngStream rng_a(123, 7);
    moeda::RngStream rng_b(123, 7);
    const moeda::RunResult a =
        moeda::run(problem, algo, 40, moeda::RepresentativeMode::genotype, rng_a);
    const moeda::RunResult b =
        moeda::run(problem, algo, 40, moeda::RepresentativeMode::genotype, rng_b);
    require_equal_results(a, b);

    moeda::RngStream rng_c(123, 8);
    const moeda::RunResult c =
        moeda::run(problem, algo, 40, moeda::RepresentativeMode::genotype, rng_c);
    REQUIRE(a.coverage_trajectory != c.coverage_trajectory);
}

TEST_CASE("crossover search without variation operators creates no new genomes") {
    const moeda::ProblemSpec problem = moeda::make_trap_invtrap(2, 3);
    for (const auto repl : {moeda::ReplacementKind::elitist, moeda::ReplacementKind::rts}) {
        moeda::AlgorithmConfig algo = make_algo(moeda::VariationKind::nsga2_xover, repl);
        algo.variation.pc = 0.0;
        algo.variation.pm = 0.0;
        const std::uint64_t n = 24;
        const std::uint64_t seed = 77;

        moeda::RngStream rng(seed, 0);
        moeda::Population pop = moeda::random_population(n, problem.ell, rng);
        moeda::evaluate_population(problem, pop);
        std::set<std::string> initial;
        for (const auto& ind : pop) initial.insert(moeda::genome_to_string(ind.genome));

        const std::uint64_t cap = 10ull * problem.ell;
        for (std::uint64_t gen = 0; gen < cap; ++gen) {
            moeda::RankedPopulation ranked = moeda::nondominated_sort(pop);
            moeda::Population pool = moeda::binary_tournament(ranked, n, rng);
            moeda::Population off;
            for (std::size_t t = 0; t + 1 < pool.size(); t += 2) {
                auto children =
                    moeda::two_point_crossover(pool[t].genome, pool[t + 1].genome, 0.0, rng);
                moeda::Individual a;
                a.genome = moeda::bitflip_mutation(children.first, 0.0, rng);
                off.push_back(std::move(a));
                moeda::Individual b;
                b.genome = moeda::bitflip_mutation(children.second, 0.0, rng);
                off.push_back(std::move(b));
            }
            moeda::evaluate_population(problem, off);
            if (repl == moeda::ReplacementKind::elitist) {
                pop = moeda::elitist_replacement(pop, off);
            } else {
                for (const auto& o : off) pop = moeda::rts_replace(pop, o, algo.rts, rng);
            }
            for (const auto& ind : pop)
                REQUIRE(initial.count(moeda::genome_to_string(ind.genome)) == 1u);
        }

        moeda::RngStream rng_engine(seed, 0);
        const moeda::RunResult got =
            moeda::run(problem, algo, n, moeda::RepresentativeMode::objective, rng_engine);
        const ReferenceOutcome want =
            reference_run(problem, algo, n, moeda::RepresentativeMode::objective, seed, 0);
        require_equal_results(got, want.result);
        for (const auto& ind : want.final_pop)
            REQUIRE(initial.count(moeda::genome_to_string(ind.genome)) == 1u);
    }
}

TEST_CASE("elitist replacement retains covered extreme boundary points") {
    const moeda::ProblemSpec problem = moeda::make_trap_invtrap(2, 3);
    const moeda::RepresentativeSet reps =
        moeda::representative_set(problem, moeda::RepresentativeMode::objective);
    const moeda::ObjectiveVector lo_f1 = reps.points.front();
    const moeda::ObjectiveVector hi_f1 = reps.points.back();
    const moeda::Genome all_zeros(problem.ell);
    moeda::Genome all_ones(problem.ell);
    for (std::uint32_t i = 0; i < problem.ell; ++i) all_ones.set(i, true);

    std::size_t applicable = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        moeda::RngStream rng(900 + seed, 0);
        const std::uint64_t n = 12;
        moeda::Population parents = moeda::random_population(n, problem.ell, rng);
        const std::uint64_t at = rng.uniform_index(n - 1);
        parents[at].genome = all_zeros;
        parents[at + 1].genome = all_ones;
        moeda::Population offspring = moeda::random_population(n, problem.ell, rng);
        moeda::evaluate_population(problem, parents);
        moeda::evaluate_population(problem, offspring);

        moeda::Population pool = parents;
        pool.insert(pool.end(), offspring.begin(), offspring.end());
        const std::vector<int> ranks = oracle::naive_ranks(pool);
        std::size_t rank1 = 0;
        for (const int r : ranks) rank1 += r == 1;
        if (rank1 > n) continue;
        ++applicable;

        const moeda::Population next = moeda::elitist_replacement(parents, offspring);
        const std::vector<std::uint8_t> seen = covered_points(next, {lo_f1, hi_f1});
        CAPTURE(seed);
        REQUIRE(seen[0] == 1);
        REQUIRE(seen[1] == 1);
    }
    REQUIRE(applicable >= 10u);
}

TEST_CASE("coverage counts representatives present in the population") {
    const moeda::ProblemSpec problem = moeda::make_trap_invtrap(2, 3);
    const moeda::RepresentativeSet geno =
        moeda::representative_set(problem, moeda::RepresentativeMode::genotype);
    const moeda::RepresentativeSet obj =
        moeda::representative_set(problem, moeda::RepresentativeMode::objective);

    moeda::Population pop;
    for (const auto& g : geno.genotypes) {
        moeda::Individual ind;
        ind.genome = g;
        pop.push_back(std::move(ind));
    }
    moeda::evaluate_population(problem, pop);
    REQUIRE(moeda::coverage(pop, geno) == 1.0);
    REQUIRE(moeda::coverage(pop, obj) == 1.0);

    moeda::Population partial(pop.begin(), pop.begin() + 2);
    REQUIRE(moeda::coverage(partial, geno) == 0.5);

    moeda::Population none;
    moeda::Individual stray;
    stray.genome = moeda::genome_from_string("010010");
    none.push_back(std::move(stray));
    moeda::evaluate_population(problem, none);
    REQUIRE(moeda::coverage(none, geno) == 0.0);
    REQUIRE(moeda::coverage(none, obj) == 0.0);

    moeda::Population unevaluated;
    moeda::Individual raw;
    raw.genome = moeda::Genome(problem.ell);
    unevaluated.push_back(std::move(raw));
    REQUIRE_THROWS_AS(moeda::coverage(unevaluated, obj), std::logic_error);
}

TEST_CASE("single-run niche probabilities are zero or one") {
    const moeda::ProblemSpec problem = moeda::make_trap_invtrap(2, 3);
    const moeda::AlgorithmConfig algo =
        make_algo(moeda::VariationKind::mecga, moeda::ReplacementKind::rts);
    const std::vector<double> p =
        moeda::niche_maintenance_probability(problem, algo, 32, 1, 2024);
    REQUIRE(p.size() == 3u);
    for (const double v : p) REQUIRE((v == 0.0 || v == 1.0));
    REQUIRE_THROWS_AS(moeda::niche_maintenance_probability(problem, algo, 32, 0, 2024),
                      std::invalid_argument);
}

TEST_CASE("generous population maintains every objective point") {
    const moeda::ProblemSpec problem = moeda::make_trap_invtrap(2, 3);
    const moeda::AlgorithmConfig algo =
        make_algo(moeda::VariationKind::mecga, moeda::ReplacementKind::rts);
    const std::vector<double> p =
        moeda::niche_maintenance_probability(problem, algo, 200, 10, 31337);
    REQUIRE(p.size() == 3u);
    for (const double v : p) REQUIRE(v >= 0.9);
}

TEST_CASE("undersized populations lose extreme points before middle points") {
    const moeda::ProblemSpec problem = moeda::make_trap_invtrap(6, 3);
    const moeda::AlgorithmConfig algo =
        make_algo(moeda::VariationKind::mecga, moeda::ReplacementKind::rts);
    const std::vector<double> p =
        moeda::niche_maintenance_probability(problem, algo, 24, 30, 4242);
    REQUIRE(p.size() == 7u);
    const double extremes = (p.front() + p.back()) / 2.0;
    const double middle = (p[2] + p[3] + p[4]) / 3.0;
    CAPTURE(extremes, middle);
    REQUIRE(extremes <= middle);
}

TEST_CASE("run trace lists one row per generation") {
    const moeda::ProblemSpec problem = moeda::make_onemax_zeromax(4);
    const moeda::AlgorithmConfig algo =
        make_algo(moeda::VariationKind::umda, moeda::ReplacementKind::elitist);
    moeda::RngStream rng(5, 0);
    const moeda::RunResult r =
        moeda::run(problem, algo, 16, moeda::RepresentativeMode::objective, rng);

    std::ostringstream os;
    moeda::write_run_trace(r, os);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    REQUIRE(line == "generation,coverage,points_covered");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.find(',', c1 + 1);
        REQUIRE(c1 != std::string::npos);
        REQUIRE(c2 != std::string::npos);
        REQUIRE(std::stoull(line.substr(0, c1)) == rows);
        REQUIRE(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) ==
                r.coverage_trajectory[rows]);
        REQUIRE(std::stoull(line.substr(c2 + 1)) == r.points_covered_trajectory[rows]);
        ++rows;
    }
    REQUIRE(rows == r.coverage_trajectory.size());

    std::ostringstream again;
    moeda::write_run_trace(r, again);
    REQUIRE(again.str() == os.str());
}

TEST_CASE("early abort stops once coverage is complete") {
    const moeda::ProblemSpec problem = moeda::make_onemax_zeromax(2);
    moeda::AlgorithmConfig algo = make_algo(moeda::VariationKind::umda,
                                            moeda::ReplacementKind::elitist);
    algo.early_abort_on_coverage = true;
    moeda::RngStream rng(42, 0);
    const moeda::RunResult r =
        moeda::run(problem, algo, 64, moeda::RepresentativeMode::genotype, rng);
    REQUIRE(r.success);
    REQUIRE(r.generations_run == 0u);
    const ReferenceOutcome want =
        reference_run(problem, algo, 64, moeda::RepresentativeMode::genotype, 42, 0);
    require_equal_results(r, want.result);
}

TEST_CASE("run rejects undersized populations and bad rates") {
    const moeda::ProblemSpec problem = moeda::make_onemax_zeromax(4);
    moeda::AlgorithmConfig algo = make_algo(moeda::VariationKind::umda,
                                            moeda::ReplacementKind::elitist);
    moeda::RngStream rng(1, 0);
    REQUIRE_THROWS_AS(moeda::run(problem, algo, 1, moeda::RepresentativeMode::genotype, rng),
                      std::invalid_argument);
    algo.variation.pc = 1.5;
    REQUIRE_THROWS_AS(moeda::run(problem, algo, 8, moeda::RepresentativeMode::genotype, rng),
                      std::invalid_argument);
    algo.variation.pc = 0.9;
    algo.variation.pm = -0.25;
    REQUIRE_THROWS_AS(moeda::run(problem, algo, 8, moeda::RepresentativeMode::genotype, rng),
                      std::invalid_argument);
}
