// Command-line front end for the max-min energy-efficiency benchmark.
//
//   mmee run <config.json>        execute the spec as written
//   mmee sweep <config.json>      execute with the standard six-budget sweep
//   mmee validate <scenario.json> per-user DE-vs-Monte-Carlo rate report
//   mmee baselines <config.json>  run with both baselines enabled
//   mmee weights <config.json>    weighting study on a symmetric scenario
//
// Exit codes: 0 on success, 1 on configuration errors, 2 when at least one
// solver run was flagged (results were still written).
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmee/de_rate.hpp"
#include "mmee/experiment.hpp"

namespace {

struct CommonFlags {
    std::string solver;
    std::string profile;
    std::string out_dir;
    std::vector<std::uint64_t> seeds;
    int mc_samples = 0;
    bool bus_log = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--solver", flags.solver,
                    "Override solver choice: centralized, distributed, both")
        ->check(CLI::IsMember({"centralized", "distributed", "both"}));
    cmd->add_option("--profile", flags.profile,
                    "Start from a named profile instead of requiring a "
                    "config file: desk, paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--out", flags.out_dir, "Output directory override");
    cmd->add_option("--seed", flags.seeds,
                    "Seed list override (repeatable)");
    cmd->add_option("--mc-samples", flags.mc_samples,
                    "Monte-Carlo validation sample count override");
    cmd->add_flag("--bus-log", flags.bus_log,
                  "Record every distributed message exchange to a log file");
}

mmee::ExperimentSpec load_spec(const std::string& config_path,
                               const CommonFlags& flags) {
    mmee::ExperimentSpec spec;
    if (!config_path.empty()) {
        spec = mmee::parse_config(config_path);
    } else if (!flags.profile.empty()) {
        if (flags.profile == "paper") {
            spec.network = mmee::paper_network();
        } else {
            spec.network = mmee::desk_network();
        }
        spec.geometry =
            mmee::default_geometry(spec.network.num_cells, 1);
    } else {
        throw std::invalid_argument(
            "either a config file or --profile is required");
    }
    if (!flags.profile.empty() && !config_path.empty())
        throw std::invalid_argument(
            "--profile cannot be combined with a config file; put "
            "\"profile\" in the config instead");
    if (!flags.solver.empty()) {
        if (flags.solver == "centralized")
            spec.solver = mmee::SolverChoice::centralized;
        else if (flags.solver == "distributed")
            spec.solver = mmee::SolverChoice::distributed;
        else
            spec.solver = mmee::SolverChoice::both;
    }
    if (!flags.out_dir.empty()) spec.output_dir = flags.out_dir;
    if (!flags.seeds.empty()) spec.seeds = flags.seeds;
    if (flags.mc_samples > 0) spec.mc_samples = flags.mc_samples;
    if (flags.bus_log) spec.log_bus = true;
    return spec;
}

int finish_run(const mmee::ExperimentResult& result,
               const std::string& out_dir) {
    int flagged = 0;
    for (const auto& rec : result.records) {
        const auto& r = rec.row;
        if (r.flagged) ++flagged;
        std::printf(
            "seed=%llu p_max=%g dBm %s/%s min_weighted_ee=%.6g bit/J "
            "(mc gap %.2f%%) msgs=%lld outer=%d inner=%d%s\n",
            static_cast<unsigned long long>(r.seed), r.p_max_dbm,
            r.solver.c_str(), r.variant.c_str(), r.min_weighted_ee,
            100.0 * r.mc_relative_gap, r.messages_total, r.outer_iterations,
            r.inner_iterations_total, r.flagged ? "  [FLAGGED]" : "");
    }
    if (!out_dir.empty())
        std::printf("wrote %zu rows to %s\n", result.records.size(),
                    out_dir.c_str());
    if (flagged > 0) {
        std::fprintf(stderr, "%d run(s) flagged\n", flagged);
        return 2;
    }
    return 0;
}

int run_validate(const std::string& scenario_path, const CommonFlags& flags) {
    mmee::LoadedScenario scenario = mmee::load_scenario(scenario_path);
    const mmee::NetworkConfig& cfg = scenario.stats.config;

    // Uniform full-budget allocation: the standard operating point for
    // checking the deterministic-equivalent rates against sampling.
    const mmee::PowerAllocation alloc = mmee::PowerAllocation::uniform(cfg);
    const mmee::RateReport report = mmee::de_rate(scenario.stats, alloc);

    const int samples = flags.mc_samples > 0 ? flags.mc_samples : 10000;
    const std::uint64_t seed = flags.seeds.empty() ? 1 : flags.seeds.front();
    std::mt19937_64 rng(mmee::derive_seed(seed, 1));
    const auto mc =
        mmee::mc_ergodic_rate(scenario.stats, alloc, samples, rng);

    double worst = 0.0;
    for (int u = 0; u < cfg.num_cells; ++u) {
        for (int k = 0; k < cfg.users_per_cell[u]; ++k) {
            const double de = report.rate[u][k];
            const double ref = mc[u][k].mean;
            const double gap = ref > 0.0 ? std::abs(de - ref) / ref : 0.0;
            worst = std::max(worst, gap);
            std::printf(
                "cell=%d user=%d de=%.6f mc=%.6f (+/- %.6f) nats "
                "gap=%.3f%%\n",
                u, k, de, ref, mc[u][k].std_error, 100.0 * gap);
        }
    }
    std::printf("worst per-user relative gap: %.3f%% over %d samples\n",
                100.0 * worst, samples);

    if (!flags.out_dir.empty()) {
        const auto path =
            std::filesystem::path(flags.out_dir) / "rates.csv";
        mmee::write_rates_csv(cfg, report, &mc, path.string());
        std::printf("wrote %s\n", path.string().c_str());
    }
    return 0;
}

int run_weights(const std::string& config_path, const CommonFlags& flags) {
    mmee::ExperimentSpec spec = load_spec(config_path, flags);
    std::vector<std::vector<double>> sets = spec.weight_sets;
    if (sets.empty()) {
        sets.push_back(std::vector<double>(spec.network.num_cells, 1.0));
        if (spec.network.num_cells == 3) sets.push_back({1.0, 2.0, 0.5});
    }
    const auto rows = mmee::weighting_study(spec, sets);
    int flagged = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.flagged) ++flagged;
        std::printf("set %zu: weights=[", i);
        for (size_t u = 0; u < r.weights.size(); ++u)
            std::printf("%s%g", u ? "," : "", r.weights[u]);
        std::printf("] weighted EE spread=%.2f%%%s\n",
                    100.0 * r.weighted_spread,
                    r.flagged ? "  [FLAGGED]" : "");
        for (size_t u = 0; u < r.cell_ee.size(); ++u)
            std::printf("  cell %zu: EE=%.6g bit/J, weighted %.6g bit/J\n", u,
                        r.cell_ee[u], r.weighted_cell_ee[u]);
    }
    if (!spec.output_dir.empty()) {
        const auto path =
            std::filesystem::path(spec.output_dir) / "weights.csv";
        mmee::write_weights_csv(rows, path.string());
        std::printf("wrote %s\n", path.string().c_str());
    }
    return flagged > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Max-min weighted energy-efficiency benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::string scenario_path;
    CommonFlags flags;

    CLI::App* cmd_run =
        app.add_subcommand("run", "Execute an experiment spec");
    cmd_run->add_option("config", config_path, "JSON config file");
    add_common_flags(cmd_run, flags);

    CLI::App* cmd_sweep = app.add_subcommand(
        "sweep", "Execute a spec over the standard six-budget sweep");
    cmd_sweep->add_option("config", config_path, "JSON config file");
    add_common_flags(cmd_sweep, flags);

    CLI::App* cmd_validate = app.add_subcommand(
        "validate", "Compare DE rates against Monte-Carlo on a scenario");
    cmd_validate->add_option("scenario", scenario_path, "Scenario JSON file")
        ->required();
    add_common_flags(cmd_validate, flags);

    CLI::App* cmd_baselines = app.add_subcommand(
        "baselines", "Execute a spec with both baselines enabled");
    cmd_baselines->add_option("config", config_path, "JSON config file");
    add_common_flags(cmd_baselines, flags);

    CLI::App* cmd_weights = app.add_subcommand(
        "weights", "Weighting study on a rotation-symmetric scenario");
    cmd_weights->add_option("config", config_path, "JSON config file");
    add_common_flags(cmd_weights, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_validate->parsed())
            return run_validate(scenario_path, flags);
        if (cmd_weights->parsed()) return run_weights(config_path, flags);

        mmee::ExperimentSpec spec = load_spec(config_path, flags);
        if (cmd_sweep->parsed()) spec.sweep_dbm = mmee::default_sweep_dbm();
        if (cmd_baselines->parsed()) {
            spec.run_maxmin_se = true;
            spec.run_non_cooperative = true;
        }
        const mmee::ExperimentResult result = mmee::run_experiment(spec);
        return finish_run(result, spec.output_dir);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
