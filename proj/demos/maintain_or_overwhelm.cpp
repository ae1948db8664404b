// Side-by-side niche maintenance on a conflicting-blocks problem: elitist
// crowding lets rare Pareto classes die out at population sizes where
// restricted tournament replacement still holds every niche.
#include <cstdio>

#include "moeda/engine.hpp"
#include "moeda/names.hpp"
#include "moeda/problems.hpp"
#include "moeda/sizing.hpp"

namespace {

moeda::AlgorithmConfig make_algo(moeda::VariationKind kind, moeda::ReplacementKind repl) {
    moeda::AlgorithmConfig algo;
    algo.variation.kind = kind;
    algo.replacement = repl;
    return algo;
}

void report(const char* label, const moeda::ProblemSpec& problem,
            const moeda::AlgorithmConfig& algo, std::uint64_t n) {
    const std::vector<double> probs =
        moeda::niche_maintenance_probability(problem, algo, n, 30, 20240101);
    std::printf("%-24s n=%-4llu per-point maintenance:", label,
                static_cast<unsigned long long>(n));
    for (const double p : probs) std::printf(" %.2f", p);
    std::printf("\n");
}

}  // namespace

int main() {
    const moeda::ProblemSpec problem = moeda::make_trap_invtrap(4, 3);
    std::printf("problem: %s m=%u k=%u (%u Pareto points, %llu Pareto genotypes)\n\n",
                moeda::problem_kind_name(problem.kind), problem.m, problem.k,
                moeda::representative_point_count(problem),
                static_cast<unsigned long long>(moeda::representative_genotype_count(problem)));

    const moeda::AlgorithmConfig crowding =
        make_algo(moeda::VariationKind::umda, moeda::ReplacementKind::elitist);
    const moeda::AlgorithmConfig rts =
        make_algo(moeda::VariationKind::mecga, moeda::ReplacementKind::rts);

    for (const std::uint64_t n : {40ULL, 160ULL, 640ULL}) {
        report("umda + elitist crowding", problem, crowding, n);
        report("mecga + rts", problem, rts, n);
        std::printf("\n");
    }

    std::printf("bisecting the minimal size for full objective coverage (cap 4096):\n");
    moeda::BisectionConfig cfg;
    cfg.n_start = 8;
    cfg.r = 5;
    cfg.repeats = 3;
    cfg.n_max = 4096;
    for (const auto& [label, algo] : {std::pair{"umda + elitist crowding", crowding},
                                      std::pair{"mecga + rts", rts}}) {
        try {
            const moeda::BisectionOutcome out = moeda::bisection_min_popsize(
                problem, algo, moeda::RepresentativeMode::objective, cfg, 77);
            std::printf("%-24s n_min = %.0f +- %.0f  (evals %.0f)\n", label, out.n_min_mean,
                        out.n_min_std, out.evals_mean);
        } catch (const moeda::infeasible_error& err) {
            std::printf("%-24s infeasible: still failing at n = %llu\n", label,
                        static_cast<unsigned long long>(err.last_failing_n()));
        }
    }
    return 0;
}
