#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moeda/core.hpp"
#include "moeda/csv.hpp"
#include "moeda/engine.hpp"
#include "moeda/errors.hpp"
#include "moeda/names.hpp"
#include "moeda/problems.hpp"
#include "moeda/sizing.hpp"

namespace {

using namespace moeda;

// Shared flag bundles.  Options stay optional at parse time; build_* applies
// the per-kind requirements so conflicts surface as usage errors.
struct ProblemFlags {
    std::string kind;
    std::optional<std::uint32_t> m;
    std::optional<std::uint32_t> k;
    std::optional<std::uint32_t> ell;
    std::optional<std::uint32_t> md;
    std::optional<double> d;
};

struct AlgoFlags {
    std::string algo;
    std::string replacement = "elitist";
    double pc = 0.9;
    std::optional<double> pm;
    std::optional<std::uint32_t> w;
    std::string tie = "coin-flip";
    std::optional<std::uint32_t> cap_multiplier;
    bool early_abort = false;
};

struct BisectFlags {
    std::uint64_t n_start = 16;
    std::uint32_t r = 10;
    std::uint32_t repeats = 10;
    std::uint64_t n_max = 1ULL << 20;
    double stop_ratio = 1.1;
    std::uint64_t stop_gap = 2;
};

void add_config_option(CLI::App* cmd) {
    // Parsed by expand_config before CLI11 runs; registered here so the flag
    // is documented and accepted by --help.
    cmd->add_option("--config", "Read options from a flat key=value file; flags take precedence");
}

std::string trim_ws(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return std::string();
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

// Expands --config FILE into synthetic --key=value tokens appended after the
// explicit flags.  CLI11 only reads config files at the top level, never for
// subcommands, so the flat file is merged here instead: a key whose flag was
// given explicitly is skipped (flags take precedence), and an unknown key
// fails the subsequent parse by name.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    bool found = false;
    std::vector<std::string> out;
    out.reserve(args.size());
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config" || a.rfind("--config=", 0) == 0) {
            if (found) throw std::invalid_argument("--config given more than once");
            found = true;
            if (a.size() > 8 && a[8] == '=') {
                path = a.substr(9);
            } else {
                if (i + 1 >= args.size())
                    throw std::invalid_argument("--config requires a file path");
                path = args[++i];
            }
            continue;
        }
        out.push_back(a);
    }
    if (!found) return out;
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file: " + path);
    std::set<std::string> given;
    for (const auto& a : out) {
        if (a.rfind("--", 0) != 0) continue;
        const auto eq = a.find('=');
        given.insert(eq == std::string::npos ? a.substr(2) : a.substr(2, eq - 2));
    }
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        line = trim_ws(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        const std::string where = path + " line " + std::to_string(lineno);
        if (eq == std::string::npos)
            throw std::invalid_argument("config " + where + ": expected key=value");
        const std::string key = trim_ws(line.substr(0, eq));
        const std::string value = trim_ws(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config " + where + ": empty key");
        if (value.empty()) throw std::invalid_argument("config " + where + ": empty value");
        if (key == "config")
            throw std::invalid_argument("config " + where + ": config cannot nest");
        if (given.count(key)) continue;
        out.push_back("--" + key + "=" + value);
    }
    return out;
}

void add_problem_flags(CLI::App* cmd, ProblemFlags& f) {
    cmd->add_option("--problem", f.kind,
                    "Problem kind: trap-invtrap, onemax-zeromax, overlap")
        ->required();
    cmd->add_option("--m", f.m, "Block count (trap-invtrap, overlap)");
    cmd->add_option("--k", f.k, "Block size in bits");
    cmd->add_option("--ell", f.ell, "Genome length (onemax-zeromax)");
    cmd->add_option("--md", f.md,
                    "Conflicting block count (overlap); defaults to the competition bound");
    cmd->add_option("--d", f.d, "Signal difference in (0,1); defaults per block size");
}

void add_algo_flags(CLI::App* cmd, AlgoFlags& f) {
    cmd->add_option("--algo", f.algo, "Variation model: umda, mecga, nsga2-xover")->required();
    cmd->add_option("--replacement", f.replacement, "Replacement scheme: elitist, rts");
    cmd->add_option("--pc", f.pc, "Crossover probability (nsga2-xover)");
    cmd->add_option("--pm", f.pm, "Per-bit mutation probability; defaults to 1/ell");
    cmd->add_option("--w", f.w, "Window size for rts; defaults to min(n, ell)");
    cmd->add_option("--tie", f.tie,
                    "rts tie policy: coin-flip, keep-incumbent, always-replace");
    cmd->add_option("--cap-multiplier", f.cap_multiplier,
                    "Generation cap as a multiple of ell; 0 stops after initialization");
    cmd->add_flag("--early-abort", f.early_abort, "Stop once coverage is complete");
}

void add_bisect_flags(CLI::App* cmd, BisectFlags& f) {
    cmd->add_option("--n-start", f.n_start, "First population size to probe");
    cmd->add_option("--r", f.r, "Verification runs per probed size");
    cmd->add_option("--repeats", f.repeats, "Independent bisection repetitions");
    cmd->add_option("--n-max", f.n_max, "Give up above this population size");
    cmd->add_option("--stop-ratio", f.stop_ratio, "Stop when hi <= ratio * lo");
    cmd->add_option("--stop-gap", f.stop_gap, "Stop when hi - lo <= gap");
}

ProblemSpec build_problem(const ProblemFlags& f) {
    switch (parse_problem_kind(f.kind)) {
        case ProblemKind::trap_invtrap:
            if (f.ell)
                throw std::invalid_argument(
                    "--ell conflicts with --problem trap-invtrap (sized by --m and --k)");
            if (f.md) throw std::invalid_argument("--md applies only to --problem overlap");
            if (!f.m || !f.k)
                throw std::invalid_argument("--problem trap-invtrap requires --m and --k");
            return make_trap_invtrap(*f.m, *f.k, f.d);
        case ProblemKind::onemax_zeromax:
            if (f.m || f.k || f.md || f.d)
                throw std::invalid_argument(
                    "--problem onemax-zeromax takes only --ell");
            if (!f.ell) throw std::invalid_argument("--problem onemax-zeromax requires --ell");
            return make_onemax_zeromax(*f.ell);
        case ProblemKind::overlap: {
            if (f.ell)
                throw std::invalid_argument(
                    "--ell conflicts with --problem overlap (sized by --m and --k)");
            if (!f.m || !f.k)
                throw std::invalid_argument("--problem overlap requires --m and --k");
            const auto md = f.md ? *f.md
                                 : static_cast<std::uint32_t>(
                                       max_competing_substructures(*f.m, *f.k));
            return make_overlap(*f.m, *f.k, md, f.d);
        }
    }
    throw std::logic_error("unknown problem kind");
}

AlgorithmConfig build_algo(const AlgoFlags& f) {
    AlgorithmConfig algo;
    algo.variation.kind = parse_variation_kind(f.algo);
    algo.variation.pc = f.pc;
    algo.variation.pm = f.pm;
    algo.replacement = parse_replacement_kind(f.replacement);
    algo.rts.w = f.w;
    algo.rts.tie_policy = parse_rts_tie_policy(f.tie);
    algo.generation_cap_multiplier = f.cap_multiplier;
    algo.early_abort_on_coverage = f.early_abort;
    return algo;
}

BisectionConfig build_bisection(const BisectFlags& f) {
    BisectionConfig cfg;
    cfg.n_start = f.n_start;
    cfg.r = f.r;
    cfg.repeats = f.repeats;
    cfg.n_max = f.n_max;
    cfg.stop_ratio = f.stop_ratio;
    cfg.stop_gap = f.stop_gap;
    return cfg;
}

void append_field(std::string& out, double v) { detail::append_double(out, v); }

void setup_evaluate(CLI::App& app) {
    auto* cmd = app.add_subcommand("evaluate", "Evaluate genomes under a problem");
    add_config_option(cmd);
    auto pf = std::make_shared<ProblemFlags>();
    auto genomes = std::make_shared<std::vector<std::string>>();
    auto out_path = std::make_shared<std::string>("-");
    add_problem_flags(cmd, *pf);
    cmd->add_option("--genome", *genomes, "Genome as a 0/1 string; repeatable")->required();
    cmd->add_option("--out", *out_path, "Output path, or - for stdout");
    cmd->callback([pf, genomes, out_path] {
        const ProblemSpec p = build_problem(*pf);
        const Evaluator eval(p);
        std::string out = "genome,f1,f2\n";
        for (const auto& bits : *genomes) {
            const Genome g = genome_from_string(bits);
            const ObjectiveVector f = eval(g);
            out += genome_to_string(g);
            out += ',';
            append_field(out, f.f1);
            out += ',';
            append_field(out, f.f2);
            out += '\n';
        }
        write_text_atomic(*out_path, out);
    });
}

void setup_oracle(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "oracle", "Print the exact Pareto-optimal genotypes and objective points");
    add_config_option(cmd);
    auto pf = std::make_shared<ProblemFlags>();
    auto out_path = std::make_shared<std::string>("-");
    add_problem_flags(cmd, *pf);
    cmd->add_option("--out", *out_path, "Output path, or - for stdout");
    cmd->callback([pf, out_path] {
        const ProblemSpec p = build_problem(*pf);
        const RepresentativeSet genotypes = representative_set(p, RepresentativeMode::genotype);
        const RepresentativeSet points = representative_set(p, RepresentativeMode::objective);
        const Evaluator eval(p);
        std::string out = "entry,genome,f1,f2\n";
        for (const auto& g : genotypes.genotypes) {
            const ObjectiveVector f = eval(g);
            out += "genotype,";
            out += genome_to_string(g);
            out += ',';
            append_field(out, f.f1);
            out += ',';
            append_field(out, f.f2);
            out += '\n';
        }
        for (const auto& f : points.points) {
            out += "point,,";
            append_field(out, f.f1);
            out += ',';
            append_field(out, f.f2);
            out += '\n';
        }
        write_text_atomic(*out_path, out);
    });
}

void setup_run(CLI::App& app) {
    auto* cmd = app.add_subcommand("run", "Execute one seeded run and summarize it");
    add_config_option(cmd);
    auto pf = std::make_shared<ProblemFlags>();
    auto af = std::make_shared<AlgoFlags>();
    auto mode_name = std::make_shared<std::string>("genotype");
    auto n = std::make_shared<std::uint64_t>(0);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto stream = std::make_shared<std::uint64_t>(0);
    auto out_path = std::make_shared<std::string>("-");
    auto trace_path = std::make_shared<std::string>();
    add_problem_flags(cmd, *pf);
    add_algo_flags(cmd, *af);
    cmd->add_option("--mode", *mode_name, "Coverage mode: genotype, objective");
    cmd->add_option("--n", *n, "Population size")->required();
    cmd->add_option("--seed", *seed, "Master seed")->required();
    cmd->add_option("--stream", *stream, "Stream index under the master seed");
    cmd->add_option("--out", *out_path, "Summary path, or - for stdout");
    cmd->add_option("--trace", *trace_path, "Also write the per-generation coverage trace here");
    cmd->callback([pf, af, mode_name, n, seed, stream, out_path, trace_path] {
        const ProblemSpec p = build_problem(*pf);
        const AlgorithmConfig algo = build_algo(*af);
        const RepresentativeMode mode = parse_representative_mode(*mode_name);
        RngStream rng(*seed, *stream);
        const RunResult res = run(p, algo, *n, mode, rng);
        std::string out = "success,g_star,generations_run,evaluations,final_coverage,seed,stream\n";
        out += res.success ? '1' : '0';
        out += ',';
        if (res.g_star) out += std::to_string(*res.g_star);
        out += ',';
        out += std::to_string(res.generations_run);
        out += ',';
        out += std::to_string(res.evaluations);
        out += ',';
        append_field(out, res.coverage_trajectory.back());
        out += ',';
        out += std::to_string(res.seed);
        out += ',';
        out += std::to_string(res.stream);
        out += '\n';
        write_text_atomic(*out_path, out);
        if (!trace_path->empty()) {
            std::ostringstream trace;
            write_run_trace(res, trace);
            write_text_atomic(*trace_path, trace.str());
        }
    });
}

void setup_bisect(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "bisect", "Bisect the minimal population size for reliable full coverage");
    add_config_option(cmd);
    auto pf = std::make_shared<ProblemFlags>();
    auto af = std::make_shared<AlgoFlags>();
    auto bf = std::make_shared<BisectFlags>();
    auto mode_name = std::make_shared<std::string>("genotype");
    auto seed = std::make_shared<std::uint64_t>(0);
    auto jobs = std::make_shared<std::uint32_t>(1);
    auto out_path = std::make_shared<std::string>("-");
    add_problem_flags(cmd, *pf);
    add_algo_flags(cmd, *af);
    add_bisect_flags(cmd, *bf);
    cmd->add_option("--mode", *mode_name, "Coverage mode: genotype, objective");
    cmd->add_option("--seed", *seed, "Master seed")->required();
    cmd->add_option("--jobs", *jobs, "Worker threads; results do not depend on this");
    cmd->add_option("--out", *out_path, "Output path, or - for stdout");
    cmd->callback([pf, af, bf, mode_name, seed, jobs, out_path] {
        const ProblemSpec p = build_problem(*pf);
        const AlgorithmConfig algo = build_algo(*af);
        const RepresentativeMode mode = parse_representative_mode(*mode_name);
        const BisectionOutcome res =
            bisection_min_popsize(p, algo, mode, build_bisection(*bf), *seed, 0, *jobs);
        std::string out = "n_min_mean,n_min_std,evals_mean,evals_std,repeats,master_seed\n";
        append_field(out, res.n_min_mean);
        out += ',';
        append_field(out, res.n_min_std);
        out += ',';
        append_field(out, res.evals_mean);
        out += ',';
        append_field(out, res.evals_std);
        out += ',';
        out += std::to_string(bf->repeats);
        out += ',';
        out += std::to_string(*seed);
        out += '\n';
        write_text_atomic(*out_path, out);
    });
}

void setup_sweep(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "sweep", "Bisect a family of problem sizes and tabulate the scaling");
    add_config_option(cmd);
    auto kind = std::make_shared<std::string>();
    auto ms = std::make_shared<std::vector<std::uint32_t>>();
    auto ells = std::make_shared<std::vector<std::uint32_t>>();
    auto mds = std::make_shared<std::vector<std::uint32_t>>();
    auto k = std::make_shared<std::optional<std::uint32_t>>();
    auto d = std::make_shared<std::optional<double>>();
    auto af = std::make_shared<AlgoFlags>();
    auto bf = std::make_shared<BisectFlags>();
    auto mode_name = std::make_shared<std::string>("genotype");
    auto seed = std::make_shared<std::uint64_t>(0);
    auto jobs = std::make_shared<std::uint32_t>(1);
    auto out_path = std::make_shared<std::string>("-");
    cmd->add_option("--problem", *kind,
                    "Problem kind: trap-invtrap, onemax-zeromax, overlap")
        ->required();
    cmd->add_option("--m", *ms, "Comma-separated block counts (trap-invtrap, overlap)")
        ->delimiter(',');
    cmd->add_option("--ell", *ells, "Comma-separated genome lengths (onemax-zeromax)")
        ->delimiter(',');
    cmd->add_option("--md", *mds,
                    "Comma-separated conflicting block counts (overlap), one per --m entry; "
                    "defaults to the competition bound")
        ->delimiter(',');
    cmd->add_option("--k", *k, "Block size in bits");
    cmd->add_option("--d", *d, "Signal difference in (0,1); defaults per block size");
    add_algo_flags(cmd, *af);
    add_bisect_flags(cmd, *bf);
    cmd->add_option("--mode", *mode_name, "Coverage mode: genotype, objective");
    cmd->add_option("--seed", *seed, "Master seed")->required();
    cmd->add_option("--jobs", *jobs, "Worker threads; results do not depend on this");
    cmd->add_option("--out", *out_path, "Output path, or - for stdout");
    cmd->callback([kind, ms, ells, mds, k, d, af, bf, mode_name, seed, jobs, out_path] {
        std::vector<ProblemSpec> family;
        switch (parse_problem_kind(*kind)) {
            case ProblemKind::trap_invtrap:
                if (!ells->empty())
                    throw std::invalid_argument(
                        "--ell conflicts with --problem trap-invtrap (sized by --m and --k)");
                if (!mds->empty())
                    throw std::invalid_argument("--md applies only to --problem overlap");
                if (ms->empty() || !*k)
                    throw std::invalid_argument("--problem trap-invtrap requires --m and --k");
                for (const std::uint32_t m : *ms)
                    family.push_back(make_trap_invtrap(m, **k, *d));
                break;
            case ProblemKind::onemax_zeromax:
                if (!ms->empty() || !mds->empty() || *k || *d)
                    throw std::invalid_argument("--problem onemax-zeromax takes only --ell");
                if (ells->empty())
                    throw std::invalid_argument("--problem onemax-zeromax requires --ell");
                for (const std::uint32_t ell : *ells)
                    family.push_back(make_onemax_zeromax(ell));
                break;
            case ProblemKind::overlap:
                if (!ells->empty())
                    throw std::invalid_argument(
                        "--ell conflicts with --problem overlap (sized by --m and --k)");
                if (ms->empty() || !*k)
                    throw std::invalid_argument("--problem overlap requires --m and --k");
                if (!mds->empty() && mds->size() != ms->size())
                    throw std::invalid_argument("--md list must match --m entry for entry");
                for (std::size_t i = 0; i < ms->size(); ++i) {
                    const std::uint32_t m = (*ms)[i];
                    const auto md = mds->empty()
                                        ? static_cast<std::uint32_t>(
                                              max_competing_substructures(m, **k))
                                        : (*mds)[i];
                    family.push_back(make_overlap(m, **k, md, *d));
                }
                break;
        }
        const AlgorithmConfig algo = build_algo(*af);
        const RepresentativeMode mode = parse_representative_mode(*mode_name);
        const std::vector<SweepRecord> records =
            scalability_sweep(family, algo, mode, build_bisection(*bf), *seed, *jobs);
        std::ostringstream csv;
        write_sweep_csv(records, csv);
        write_text_atomic(*out_path, csv.str());
    });
}

void setup_predict(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "predict", "Closed-form population-size predictions for a block problem");
    add_config_option(cmd);
    auto k = std::make_shared<std::uint32_t>(0);
    auto m = std::make_shared<std::uint64_t>(0);
    auto params = std::make_shared<SizingParams>();
    auto n_opt = std::make_shared<std::optional<std::uint64_t>>();
    auto out_path = std::make_shared<std::string>("-");
    cmd->add_option("--k", *k, "Block size in bits")->required();
    cmd->add_option("--m", *m, "Block count")->required();
    cmd->add_option("--c1", params->c1, "Model-building constant");
    cmd->add_option("--c2", params->c2, "Niching approximation constant");
    cmd->add_option("--gamma", params->gamma, "Maintenance confidence in (0,1)");
    cmd->add_option("--t", params->t, "Generations the niches must survive");
    cmd->add_option("--n-opt", *n_opt,
                    "Optima to maintain; defaults to 2^m_d for the competition bound m_d");
    cmd->add_option("--out", *out_path, "Output path, or - for stdout");
    cmd->callback([k, m, params, n_opt, out_path] {
        const std::uint64_t md = max_competing_substructures(*m, *k);
        if (*n_opt) {
            params->n_opt = **n_opt;
        } else {
            if (md >= 63)
                throw std::invalid_argument(
                    "default n_opt 2^m_d overflows; pass --n-opt explicitly");
            params->n_opt = 1ULL << md;
        }
        const double eda = predict_eda_popsize(*k, *m, *params);
        const NichingPrediction niching = predict_niching_popsize(*params);
        std::string out = "quantity,value\n";
        out += "m_d,";
        out += std::to_string(md);
        out += '\n';
        out += "n_opt,";
        out += std::to_string(params->n_opt);
        out += '\n';
        out += "eda_popsize,";
        append_field(out, eda);
        out += '\n';
        out += "niching_exact,";
        append_field(out, niching.exact);
        out += '\n';
        out += "niching_approx,";
        append_field(out, niching.approx);
        out += '\n';
        write_text_atomic(*out_path, out);
    });
}

void setup_niche_prob(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "niche-prob", "Per-point maintenance probability over repeated runs");
    add_config_option(cmd);
    auto pf = std::make_shared<ProblemFlags>();
    auto af = std::make_shared<AlgoFlags>();
    auto n = std::make_shared<std::uint64_t>(0);
    auto runs = std::make_shared<std::uint32_t>(0);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto jobs = std::make_shared<std::uint32_t>(1);
    auto out_path = std::make_shared<std::string>("-");
    add_problem_flags(cmd, *pf);
    add_algo_flags(cmd, *af);
    cmd->add_option("--n", *n, "Population size")->required();
    cmd->add_option("--runs", *runs, "Independent runs to average over")->required();
    cmd->add_option("--seed", *seed, "Master seed")->required();
    cmd->add_option("--jobs", *jobs, "Worker threads; results do not depend on this");
    cmd->add_option("--out", *out_path, "Output path, or - for stdout");
    cmd->callback([pf, af, n, runs, seed, jobs, out_path] {
        const ProblemSpec p = build_problem(*pf);
        const AlgorithmConfig algo = build_algo(*af);
        const std::vector<double> probs =
            niche_maintenance_probability(p, algo, *n, *runs, *seed, *jobs);
        std::string out = "point,probability\n";
        for (std::size_t i = 0; i < probs.size(); ++i) {
            out += std::to_string(i);
            out += ',';
            append_field(out, probs[i]);
            out += '\n';
        }
        write_text_atomic(*out_path, out);
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Population-sizing laboratory for multiobjective model-building search"};
    app.require_subcommand(1);
    setup_evaluate(app);
    setup_oracle(app);
    setup_run(app);
    setup_bisect(app);
    setup_sweep(app);
    setup_predict(app);
    setup_niche_prob(app);
    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(args);
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const moeda::infeasible_error& e) {
        std::cerr << "error: " << e.what()
                  << " (last failing n: " << e.last_failing_n() << ")\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
