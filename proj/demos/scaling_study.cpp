// Minimal-population scaling across problem sizes: bisect a family, print the
// sweep table, and let the competing power-law and exponential fits say which
// growth law the data supports.
#include <cmath>
#include <cstdio>
#include <iostream>

#include "moeda/engine.hpp"
#include "moeda/problems.hpp"
#include "moeda/sizing.hpp"

int main() {
    moeda::AlgorithmConfig algo;
    algo.variation.kind = moeda::VariationKind::umda;
    algo.replacement = moeda::ReplacementKind::elitist;

    const std::vector<moeda::ProblemSpec> family = {
        moeda::make_onemax_zeromax(4),
        moeda::make_onemax_zeromax(6),
        moeda::make_onemax_zeromax(8),
        moeda::make_onemax_zeromax(10),
    };

    moeda::BisectionConfig cfg;
    cfg.n_start = 8;
    cfg.r = 3;
    cfg.repeats = 3;
    cfg.n_max = 1ULL << 15;

    const std::vector<moeda::SweepRecord> records = moeda::scalability_sweep(
        family, algo, moeda::RepresentativeMode::genotype, cfg, 4242);
    moeda::write_sweep_csv(records, std::cout);

    std::vector<moeda::ScalingPoint> points;
    for (const auto& rec : records) {
        if (rec.infeasible) continue;
        points.push_back({static_cast<double>(rec.problem.ell), rec.n_min_mean});
    }
    if (points.size() < 3) {
        std::printf("\ntoo few feasible sizes to fit a growth law\n");
        return 0;
    }
    const moeda::ScalingFit fit = moeda::fit_scaling_exponent(points);
    std::printf("\npower law  n ~ ell^%.2f  (log-domain residual %.3f)\n", fit.power_slope,
                fit.power_residual);
    std::printf("exponential n ~ %.2f^ell (log-domain residual %.3f)\n",
                std::exp(fit.exp_slope), fit.exp_residual);
    std::printf("better fit: %s\n",
                fit.power_residual < fit.exp_residual ? "power law" : "exponential");
    return 0;
}
