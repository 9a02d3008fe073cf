// Command-line experiment runner: run one policy, compare several on shared
// truth, or execute the verification suites.

#include "cellmb/cellmb.hpp"
#include "cellmb/scenario_io.hpp"
#include "cellmb/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cellmb;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

struct RunConfig {
    std::string scenario;
    std::optional<std::string> policy;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::string out = "out";
    bool diagnostics = false;
    bool checkpoint = false;
    int verbosity = 0;
};

Scenario load_with_overrides(const RunConfig& cfg) {
    Scenario sc = load_scenario(cfg.scenario);
    if (cfg.policy) sc.policy.kind = parse_policy(*cfg.policy);
    if (cfg.seed) sc.master_seed = *cfg.seed;
    if (cfg.runs) sc.mc_runs = *cfg.runs;
    sc.validate();
    return sc;
}

ExperimentResult timed_run(const Scenario& sc, const ExperimentOptions& opts, int verbosity) {
    const auto t0 = std::chrono::steady_clock::now();
    auto res = run_experiment(sc, opts);
    if (verbosity > 0) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cerr << to_string(sc.policy.kind) << ": " << sc.mc_runs << " runs x " << sc.duration << " steps in "
                  << std::fixed << std::setprecision(1) << secs << " s\n";
    }
    return res;
}

void print_summary(std::ostream& os, const PolicySummary& s) {
    os << std::fixed << std::setprecision(3) << std::setw(8) << to_string(s.policy) << "  GOSPA " << s.gospa.mean << " +/- "
       << s.gospa.half_width << "  missed " << s.missed.mean << "  false " << s.false_tracks.mean << '\n';
}

int cmd_run(const RunConfig& cfg) {
    const Scenario sc = load_with_overrides(cfg);
    ExperimentOptions opts;
    opts.record_diagnostics = cfg.diagnostics;
    opts.record_checkpoints = cfg.checkpoint;
    const auto res = timed_run(sc, opts, cfg.verbosity);

    fs::create_directories(cfg.out);
    write_atomic(fs::path(cfg.out) / "steps.csv", step_csv(res.runs));
    write_atomic(fs::path(cfg.out) / "summary.json", summary_json(sc, {res.summary}));
    if (cfg.diagnostics) write_atomic(fs::path(cfg.out) / "diagnostics.csv", diagnostics_csv(res.runs, sc.grid));
    if (cfg.checkpoint)
        for (const auto& r : res.runs)
            write_atomic(fs::path(cfg.out) / ("checkpoint_run" + std::to_string(r.run) + ".yaml"), checkpoint_yaml(r));
    print_summary(std::cout, res.summary);
    return exit_ok;
}

int cmd_compare(const RunConfig& cfg, const std::vector<std::string>& policy_names) {
    std::vector<PolicyKind> kinds;
    for (const auto& p : policy_names) kinds.push_back(parse_policy(p));
    const Scenario base = load_with_overrides(cfg);

    ExperimentOptions opts;
    opts.record_diagnostics = cfg.diagnostics;
    std::vector<ExperimentResult> results;
    std::vector<RunResult> all_runs;
    std::vector<PolicySummary> summaries;
    for (auto k : kinds) {
        Scenario sc = base;
        sc.policy.kind = k;
        results.push_back(timed_run(sc, opts, cfg.verbosity));
        summaries.push_back(results.back().summary);
        all_runs.insert(all_runs.end(), results.back().runs.begin(), results.back().runs.end());
    }

    // Improvement is reported against the random policy, or the last listed
    // policy when random is not among them.
    std::size_t baseline = kinds.size() - 1;
    for (std::size_t i = 0; i < kinds.size(); ++i)
        if (kinds[i] == PolicyKind::random) baseline = i;
    const auto& b = summaries[baseline];
    std::vector<ComparisonRow> rows;
    for (const auto& s : summaries)
        rows.push_back(ComparisonRow{s, percent_improvement(b.gospa.mean, s.gospa.mean),
                                     percent_improvement(b.missed.mean, s.missed.mean),
                                     percent_improvement(b.false_tracks.mean, s.false_tracks.mean)});

    std::ostringstream table;
    table << std::fixed << std::setprecision(2);
    table << std::left << std::setw(8) << "policy" << std::right << std::setw(10) << "GOSPA" << std::setw(9) << "%"
          << std::setw(10) << "missed" << std::setw(9) << "%" << std::setw(10) << "false" << std::setw(9) << "%" << '\n';
    for (const auto& r : rows)
        table << std::left << std::setw(8) << to_string(r.summary.policy) << std::right << std::setw(10)
              << r.summary.gospa.mean << std::setw(9) << r.gospa_improvement << std::setw(10) << r.summary.missed.mean
              << std::setw(9) << r.missed_improvement << std::setw(10) << r.summary.false_tracks.mean << std::setw(9)
              << r.false_improvement << '\n';

    fs::create_directories(cfg.out);
    write_atomic(fs::path(cfg.out) / "steps.csv", step_csv(all_runs));
    write_atomic(fs::path(cfg.out) / "summary.json", summary_json(base, summaries, rows));
    write_atomic(fs::path(cfg.out) / "comparison.txt", table.str());
    if (cfg.diagnostics) write_atomic(fs::path(cfg.out) / "diagnostics.csv", diagnostics_csv(all_runs, base.grid));
    std::cout << table.str();
    return exit_ok;
}

int cmd_verify(const std::string& suite, double tol_scale) {
    const auto results = verify::run_suite(suite, tol_scale);
    bool ok = true;
    for (const auto& c : results) {
        verify::print(std::cout, c);
        ok = ok && c.passed;
    }
    std::cout << (ok ? "all checks passed" : "verification FAILED") << '\n';
    return ok ? exit_ok : exit_runtime;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--scenario", cfg.scenario, "Scenario file (YAML)")->required();
    sub->add_option("--seed", cfg.seed, "Override the master seed");
    sub->add_option("--runs", cfg.runs, "Override the number of Monte-Carlo runs")->check(CLI::PositiveNumber);
    sub->add_option("--out", cfg.out, "Output directory")->capture_default_str();
    sub->add_flag("--diagnostics", cfg.diagnostics, "Write per-cell gain arrays and violation fractions");
    sub->add_flag("-v,--verbose", cfg.verbosity, "Report progress on stderr");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cell multi-Bernoulli sensor control simulator"};
    app.require_subcommand(1);

    RunConfig run_cfg;
    auto* run = app.add_subcommand("run", "Run one policy on a scenario");
    add_common(run, run_cfg);
    run->add_option("--policy", run_cfg.policy, "Policy override")->check(CLI::IsMember({"cellmb", "pims", "random"}));
    run->add_flag("--checkpoint", run_cfg.checkpoint, "Write per-step track snapshots");

    RunConfig cmp_cfg;
    std::vector<std::string> policies{"cellmb", "pims", "random"};
    auto* compare = app.add_subcommand("compare", "Compare policies on shared truth realizations");
    add_common(compare, cmp_cfg);
    compare->add_option("--policy,--policies", policies, "Policies to compare")
        ->delimiter(',')
        ->check(CLI::IsMember({"cellmb", "pims", "random"}))
        ->capture_default_str();

    std::string suite;
    double tol_scale = 1.0;
    auto* ver = app.add_subcommand("verify", "Run oracle verification suites");
    ver->add_option("suite", suite, "thm1 | prop1 | additivity | nullgain | filters | gospa | quadrature | all")->required();
    ver->add_option("--tolerance-scale", tol_scale, "Multiply every tolerance (failure injection)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*run) return cmd_run(run_cfg);
        if (*compare) {
            if (policies.size() < 2) {
                std::cerr << "compare needs at least two policies\n";
                return exit_usage;
            }
            return cmd_compare(cmp_cfg, policies);
        }
        if (*ver) {
            if (!verify::is_suite(suite)) {
                std::cerr << "unknown suite '" << suite << "'\n";
                return exit_usage;
            }
            return cmd_verify(suite, tol_scale);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_usage;
}
