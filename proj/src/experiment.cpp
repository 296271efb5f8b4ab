#include "mmee/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

#include <json.hpp>

#include "mmee/central.hpp"
#include "mmee/de_rate.hpp"
#include "mmee/distributed.hpp"

namespace mmee {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

// Fixed-format float so CSV bytes are reproducible across runs.
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// CSV cells must stay single-field: drop separators from free-form notes.
std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void atomic_write(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out << content;
        if (!out) throw std::runtime_error("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

NetworkConfig base_network(int num_cells, int bs_antennas, int users_per_cell,
                           int user_antennas, double budget_dbm) {
    NetworkConfig cfg;
    cfg.num_cells = num_cells;
    cfg.bs_antennas = bs_antennas;
    cfg.users_per_cell.assign(num_cells, users_per_cell);
    cfg.user_antennas.assign(num_cells,
                             std::vector<int>(users_per_cell, user_antennas));
    cfg.noise_power = dbm_to_watts(-105.0);
    cfg.bandwidth = 10e6;
    cfg.amp_inefficiency.assign(num_cells, 5.0);
    cfg.per_antenna_power.assign(num_cells, dbm_to_watts(30.0));
    cfg.static_power.assign(num_cells, dbm_to_watts(40.0));
    cfg.power_budget.assign(num_cells, dbm_to_watts(budget_dbm));
    cfg.weights.assign(num_cells, 1.0);
    return cfg;
}

std::unique_ptr<InnerSolver> make_solver(const std::string& name,
                                         bool log_bus) {
    if (name == "centralized") return std::make_unique<CentralSolver>();
    if (name == "distributed") {
        DistributedOptions opts;
        opts.log_bus = log_bus;
        return std::make_unique<DistributedSolver>(opts);
    }
    throw std::invalid_argument("unknown solver '" + name + "'");
}

std::vector<std::string> solver_names(SolverChoice choice) {
    switch (choice) {
        case SolverChoice::centralized: return {"centralized"};
        case SolverChoice::distributed: return {"distributed"};
        case SolverChoice::both: return {"centralized", "distributed"};
    }
    throw std::logic_error("unreachable solver choice");
}

// Baselines serve as references, not architecture comparisons, so they run
// on a single solver: the centralized one unless the spec asked for the
// distributed architecture exclusively.
std::string baseline_solver_name(SolverChoice choice) {
    return choice == SolverChoice::distributed ? "distributed" : "centralized";
}

// Fills the per-cell and aggregate metrics of `row` from an allocation
// evaluated under `stats` (the true network), then validates the min-EE
// against a fresh Monte-Carlo estimate.
void evaluate_row(const ChannelStats& stats, const PowerAllocation& alloc,
                  int mc_samples, std::uint64_t mc_seed, ResultRow& row) {
    const NetworkConfig& cfg = stats.config;
    const RateReport report = de_rate(stats, alloc);

    row.cell_ee.resize(cfg.num_cells);
    row.cell_se.resize(cfg.num_cells);
    row.cell_weight = cfg.weights;
    double min_ee = std::numeric_limits<double>::infinity();
    double min_se = std::numeric_limits<double>::infinity();
    for (int u = 0; u < cfg.num_cells; ++u) {
        const double power = cell_power(alloc, cfg, u);
        const double ee = cell_ee(report.cell_rate[u], power, cfg.bandwidth);
        row.cell_ee[u] = nats_to_bits(ee);
        row.cell_se[u] = nats_to_bits(report.cell_rate[u]);
        min_ee = std::min(min_ee, cfg.weights[u] * row.cell_ee[u]);
        min_se = std::min(min_se, cfg.weights[u] * row.cell_se[u]);
    }
    row.min_weighted_ee = min_ee;
    row.min_weighted_se = min_se;

    std::mt19937_64 rng(derive_seed(mc_seed, 1));
    const auto mc = mc_ergodic_rate(stats, alloc, mc_samples, rng);
    double mc_min_ee = std::numeric_limits<double>::infinity();
    for (int u = 0; u < cfg.num_cells; ++u) {
        double rate = 0.0;
        for (const auto& est : mc[u]) rate += est.mean;
        const double power = cell_power(alloc, cfg, u);
        const double ee = cell_ee(rate, power, cfg.bandwidth);
        mc_min_ee = std::min(mc_min_ee, cfg.weights[u] * nats_to_bits(ee));
    }
    row.mc_min_weighted_ee = mc_min_ee;
    row.mc_relative_gap = mc_min_ee > 0.0
                              ? std::abs(row.min_weighted_ee - mc_min_ee) /
                                    mc_min_ee
                              : std::abs(row.min_weighted_ee - mc_min_ee);
}

void fill_iteration_stats(const SolveResult& result, ResultRow& row) {
    row.messages_total = result.messages_total;
    row.outer_iterations = result.outer_iterations;
    row.inner_iterations_total = result.inner_iterations_total;
    if (result.trace.flagged) {
        row.flagged = true;
        for (const auto& n : result.trace.notes) {
            if (!row.note.empty()) row.note += "; ";
            row.note += n;
        }
    }
}

// Runs one optimizer on `solve_stats` and evaluates the result on
// `eval_stats` (the two differ for baselines).  Exceptions become a flagged
// row so a sweep never dies half way.
RunRecord run_single(const ChannelStats& solve_stats,
                     const ChannelStats& eval_stats,
                     const std::string& solver, const SolveOptions& opts,
                     int mc_samples, std::uint64_t mc_seed, bool log_bus,
                     std::vector<std::string>* bus_lines,
                     const PowerAllocation* init = nullptr) {
    RunRecord rec;
    rec.row.solver = solver;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        auto inner = make_solver(solver, log_bus);
        rec.result = maxmin_ee(solve_stats, *inner, opts, init);
        if (bus_lines != nullptr) {
            if (const auto* dist =
                    dynamic_cast<const DistributedSolver*>(inner.get()))
                *bus_lines = dist->bus().entries();
        }
    } catch (const std::exception& e) {
        rec.row.flagged = true;
        rec.row.note = e.what();
        rec.alloc = PowerAllocation::zeros(solve_stats.config);
        rec.row.cell_ee.assign(solve_stats.config.num_cells, 0.0);
        rec.row.cell_se.assign(solve_stats.config.num_cells, 0.0);
        rec.row.cell_weight = solve_stats.config.weights;
        rec.row.wall_time_ms =
            std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - t0)
                .count();
        return rec;
    }
    rec.alloc = rec.result.alloc;
    fill_iteration_stats(rec.result, rec.row);
    evaluate_row(eval_stats, rec.alloc, mc_samples, mc_seed, rec.row);
    rec.row.wall_time_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    return rec;
}

ChannelStats with_budget(const ChannelStats& stats, double budget_dbm) {
    ChannelStats out = stats;
    for (double& b : out.config.power_budget) b = dbm_to_watts(budget_dbm);
    return out;
}

std::string budget_tag(double dbm) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", dbm);
    return buf;
}

}  // namespace

NetworkConfig desk_network(int num_cells, double budget_dbm) {
    return base_network(num_cells, 32, 2, 2, budget_dbm);
}

NetworkConfig paper_network(double budget_dbm) {
    return base_network(3, 128, 4, 4, budget_dbm);
}

GeometryConfig default_geometry(int num_cells, std::uint64_t seed) {
    GeometryConfig geo;
    geo.bs_positions = regular_polygon_positions(num_cells, 500.0);
    geo.rng_seed = seed;
    return geo;
}

std::string to_string(SolverChoice choice) {
    switch (choice) {
        case SolverChoice::centralized: return "centralized";
        case SolverChoice::distributed: return "distributed";
        case SolverChoice::both: return "both";
    }
    throw std::logic_error("unreachable solver choice");
}

std::vector<double> default_sweep_dbm() {
    return {10.0, 16.0, 22.0, 28.0, 34.0, 40.0};
}

void ExperimentSpec::validate() const {
    network.validate();
    if (scenario_file.empty()) geometry.validate(network.num_cells);
    require(!sweep_dbm.empty(), "sweep_dbm must not be empty");
    require(!seeds.empty(), "seeds must contain at least one entry");
    require(mc_samples >= 1, "mc_samples must be >= 1");
    for (const auto& set : weight_sets)
        require(static_cast<int>(set.size()) == network.num_cells,
                "each weight set needs one weight per cell");
}

RunRecord baseline_maxmin_se(const ChannelStats& stats, SolverChoice solver,
                             const SolveOptions& opts, int mc_samples,
                             std::uint64_t mc_seed,
                             const PowerAllocation* init) {
    // Zero amplifier inefficiency turns the optimized ratio into weighted
    // rate over a constant circuit power, i.e. max-min weighted SE.  The
    // coupling is untouched, so the solution is re-evaluated under the true
    // power model only.
    ChannelStats se_stats = stats;
    for (double& xi : se_stats.config.amp_inefficiency) xi = 0.0;
    RunRecord rec =
        run_single(se_stats, stats, baseline_solver_name(solver), opts,
                   mc_samples, mc_seed, false, nullptr, init);
    rec.row.variant = "maxmin_se";
    return rec;
}

RunRecord baseline_non_cooperative(const ChannelStats& stats,
                                   SolverChoice solver,
                                   const SolveOptions& opts, int mc_samples,
                                   std::uint64_t mc_seed) {
    const NetworkConfig& cfg = stats.config;
    const std::string name = baseline_solver_name(solver);

    RunRecord rec;
    rec.row.solver = name;
    rec.row.variant = "non_cooperative";
    rec.alloc = PowerAllocation::zeros(cfg);
    const auto t0 = std::chrono::steady_clock::now();

    for (int u = 0; u < cfg.num_cells; ++u) {
        // Single-cell slice: only this cell's users, served by this cell's
        // BS, with every cross-cell coupling dropped.
        ChannelStats local;
        NetworkConfig& c1 = local.config;
        c1.num_cells = 1;
        c1.bs_antennas = cfg.bs_antennas;
        c1.users_per_cell = {cfg.users_per_cell[u]};
        c1.user_antennas = {cfg.user_antennas[u]};
        c1.noise_power = cfg.noise_power;
        c1.bandwidth = cfg.bandwidth;
        c1.amp_inefficiency = {cfg.amp_inefficiency[u]};
        c1.per_antenna_power = {cfg.per_antenna_power[u]};
        c1.static_power = {cfg.static_power[u]};
        c1.power_budget = {cfg.power_budget[u]};
        c1.weights = {cfg.weights[u]};
        local.omega.resize(1);
        local.omega[0].resize(cfg.users_per_cell[u]);
        for (int k = 0; k < cfg.users_per_cell[u]; ++k)
            local.omega[0][k] = {stats.omega[u][k][u]};

        try {
            auto inner = make_solver(name, false);
            const SolveResult result = maxmin_ee(local, *inner, opts);
            rec.alloc.lambda[u] = result.alloc.lambda[0];
            rec.row.messages_total += result.messages_total;
            rec.row.outer_iterations =
                std::max(rec.row.outer_iterations, result.outer_iterations);
            rec.row.inner_iterations_total += result.inner_iterations_total;
            if (result.trace.flagged) {
                rec.row.flagged = true;
                for (const auto& n : result.trace.notes) {
                    if (!rec.row.note.empty()) rec.row.note += "; ";
                    rec.row.note += n;
                }
            }
        } catch (const std::exception& e) {
            rec.row.flagged = true;
            if (!rec.row.note.empty()) rec.row.note += "; ";
            rec.row.note += e.what();
        }
    }

    evaluate_row(stats, rec.alloc, mc_samples, mc_seed, rec.row);
    rec.row.wall_time_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    return rec;
}

std::vector<WeightStudyRow> weighting_study(
    const ExperimentSpec& spec,
    const std::vector<std::vector<double>>& sets) {
    GeometryConfig geo = spec.geometry;
    geo.symmetrize = true;
    geo.rng_seed = derive_seed(spec.seeds.front(), 0);
    NetworkConfig cfg = spec.network;
    for (double& b : cfg.power_budget)
        b = dbm_to_watts(spec.weight_study_budget_dbm);

    const ChannelStats base = build_scenario(geo, cfg);

    std::vector<WeightStudyRow> rows;
    for (const auto& weights : sets) {
        require(static_cast<int>(weights.size()) == cfg.num_cells,
                "each weight set needs one weight per cell");
        ChannelStats stats = base;
        stats.config.weights = weights;

        WeightStudyRow row;
        row.weights = weights;
        row.cell_ee.assign(cfg.num_cells, 0.0);
        row.weighted_cell_ee.assign(cfg.num_cells, 0.0);
        try {
            auto inner = make_solver(baseline_solver_name(spec.solver),
                                     false);
            const SolveResult result = maxmin_ee(stats, *inner, spec.solve);
            row.flagged = result.trace.flagged;
            for (int u = 0; u < cfg.num_cells; ++u) {
                row.cell_ee[u] = nats_to_bits(result.cell_ee_exact[u]);
                row.weighted_cell_ee[u] = weights[u] * row.cell_ee[u];
            }
            const double lo = *std::min_element(row.weighted_cell_ee.begin(),
                                                row.weighted_cell_ee.end());
            const double hi = *std::max_element(row.weighted_cell_ee.begin(),
                                                row.weighted_cell_ee.end());
            double mean = 0.0;
            for (double v : row.weighted_cell_ee) mean += v;
            mean /= static_cast<double>(cfg.num_cells);
            row.weighted_spread = mean > 0.0 ? (hi - lo) / mean : 0.0;
        } catch (const std::exception&) {
            row.flagged = true;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();

    ChannelStats file_stats;
    const bool from_file = !spec.scenario_file.empty();
    if (from_file) {
        LoadedScenario loaded = load_scenario(spec.scenario_file);
        file_stats = std::move(loaded.stats);
    }

    ExperimentResult out;
    struct BusDump {
        std::string path;
        std::vector<std::string> lines;
    };
    std::vector<BusDump> bus_dumps;

    for (const std::uint64_t seed : spec.seeds) {
        ChannelStats base;
        if (from_file) {
            base = file_stats;
        } else {
            GeometryConfig geo = spec.geometry;
            geo.rng_seed = derive_seed(seed, 0);
            base = build_scenario(geo, spec.network);
        }

        // Warm starts across the budget sweep: a solution found at a lower
        // budget is feasible at any higher one, so reusing it keeps the
        // reported curve non-decreasing in the budget and saves outer
        // iterations.  Only the centralized runs reuse starts: the per-cell
        // game the distributed algorithm plays reacts badly to a start far
        // from its own fixed point (every cell jumps at once and the run
        // creeps through fractional steps without settling), so it always
        // starts cold.  A warm run that still fails to settle falls back to
        // a cold one.  The SE baseline keeps its own chain, since it
        // optimizes under a different power model.
        std::map<std::string, PowerAllocation> warm;
        auto warm_init = [&](const std::string& key,
                             const NetworkConfig& cfg) -> PowerAllocation* {
            auto it = warm.find(key);
            if (it == warm.end() || !it->second.feasible(cfg)) return nullptr;
            return &it->second;
        };
        const auto better = [](const RunRecord& a, const RunRecord& b) {
            if (a.row.flagged != b.row.flagged) return !a.row.flagged;
            return a.result.min_weighted_ee_exact >
                   b.result.min_weighted_ee_exact;
        };

        for (const double budget : spec.sweep_dbm) {
            const ChannelStats stats = with_budget(base, budget);

            for (const std::string& name : solver_names(spec.solver)) {
                std::vector<std::string> bus_lines;
                std::vector<std::string>* bus_sink =
                    spec.log_bus && name == "distributed" ? &bus_lines
                                                          : nullptr;
                const PowerAllocation* init =
                    name == "centralized" ? warm_init(name, stats.config)
                                          : nullptr;
                RunRecord rec =
                    run_single(stats, stats, name, spec.solve,
                               spec.mc_samples, seed, spec.log_bus, bus_sink,
                               init);
                if (init && rec.row.flagged) {
                    RunRecord cold =
                        run_single(stats, stats, name, spec.solve,
                                   spec.mc_samples, seed, false, nullptr);
                    if (better(cold, rec)) rec = std::move(cold);
                }
                rec.row.seed = seed;
                rec.row.p_max_dbm = budget;
                if (!rec.row.flagged) warm[name] = rec.alloc;
                if (!bus_lines.empty())
                    bus_dumps.push_back(
                        {"bus_s" + std::to_string(seed) + "_p" +
                             budget_tag(budget) + ".log",
                         std::move(bus_lines)});
                out.records.push_back(std::move(rec));
            }
            if (spec.run_maxmin_se) {
                const std::string key = "se:" + to_string(spec.solver);
                const PowerAllocation* init = warm_init(key, stats.config);
                RunRecord rec = baseline_maxmin_se(
                    stats, spec.solver, spec.solve, spec.mc_samples, seed,
                    init);
                if (init && rec.row.flagged) {
                    RunRecord cold = baseline_maxmin_se(
                        stats, spec.solver, spec.solve, spec.mc_samples,
                        seed);
                    if (better(cold, rec)) rec = std::move(cold);
                }
                rec.row.seed = seed;
                rec.row.p_max_dbm = budget;
                if (!rec.row.flagged) warm[key] = rec.alloc;
                out.records.push_back(std::move(rec));
            }
            if (spec.run_non_cooperative) {
                RunRecord rec = baseline_non_cooperative(
                    stats, spec.solver, spec.solve, spec.mc_samples, seed);
                rec.row.seed = seed;
                rec.row.p_max_dbm = budget;
                out.records.push_back(std::move(rec));
            }
        }
    }

    if (!spec.output_dir.empty()) {
        const std::filesystem::path dir(spec.output_dir);
        std::vector<ResultRow> rows;
        rows.reserve(out.records.size());
        for (const auto& rec : out.records) rows.push_back(rec.row);
        write_results_csv(rows, (dir / "results.csv").string());
        write_cells_csv(rows, (dir / "cells.csv").string());
        write_timing_csv(rows, (dir / "timing.csv").string());
        for (const auto& rec : out.records) {
            const std::string stem = rec.row.variant + "_" + rec.row.solver +
                                     "_s" + std::to_string(rec.row.seed) +
                                     "_p" + budget_tag(rec.row.p_max_dbm);
            write_trace_csv(rec.result.trace,
                            (dir / "traces" / ("trace_" + stem + ".csv"))
                                .string());
            if (!rec.result.trace.dual_rows.empty())
                write_dual_csv(rec.result.trace,
                               (dir / "traces" / ("dual_" + stem + ".csv"))
                                   .string());
        }
        for (const auto& dump : bus_dumps) {
            std::string text;
            for (const auto& line : dump.lines) {
                text += line;
                text += '\n';
            }
            atomic_write((dir / dump.path).string(), text);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

// Wraps json access so errors cite the offending field.
template <typename T>
T field_as(const json& j, const std::string& name) {
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument("config field '" + name +
                                    "': " + e.what());
    }
}

template <typename T>
T field_or(const json& j, const std::string& name, T fallback) {
    if (!j.contains(name)) return fallback;
    return field_as<T>(j, name);
}

SolverChoice parse_solver(const std::string& s) {
    if (s == "centralized") return SolverChoice::centralized;
    if (s == "distributed") return SolverChoice::distributed;
    if (s == "both") return SolverChoice::both;
    throw std::invalid_argument(
        "config field 'solver': expected centralized, distributed or both, "
        "got '" +
        s + "'");
}

// Scalar-or-list per-cell field: a scalar replicates across cells.
std::vector<double> per_cell_field(const json& j, const std::string& name,
                                   int num_cells,
                                   const std::vector<double>& fallback) {
    if (!j.contains(name)) return fallback;
    const json& v = j.at(name);
    if (v.is_array()) {
        auto list = field_as<std::vector<double>>(j, name);
        if (static_cast<int>(list.size()) != num_cells)
            throw std::invalid_argument("config field '" + name + "': need " +
                                        std::to_string(num_cells) +
                                        " entries, got " +
                                        std::to_string(list.size()));
        return list;
    }
    return std::vector<double>(num_cells, field_as<double>(j, name));
}

}  // namespace

ExperimentSpec parse_config(const std::string& path) {
    json doc;
    {
        std::ifstream in(path);
        if (!in)
            throw std::invalid_argument("cannot open config file " + path);
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(path + ": " + e.what());
        }
    }
    if (doc.contains("schema_version") &&
        field_as<int>(doc, "schema_version") != 1)
        throw std::invalid_argument(
            "config field 'schema_version': only version 1 is supported");

    ExperimentSpec spec;

    const std::string profile = field_or<std::string>(doc, "profile", "desk");
    if (profile == "desk") {
        const int cells = field_or<int>(doc, "num_cells", 2);
        spec.network = desk_network(cells);
    } else if (profile == "paper") {
        spec.network = paper_network();
    } else {
        throw std::invalid_argument(
            "config field 'profile': expected desk or paper, got '" +
            profile + "'");
    }

    if (doc.contains("network")) {
        const json& net = doc.at("network");
        NetworkConfig& cfg = spec.network;
        cfg.bs_antennas = field_or<int>(net, "bs_antennas", cfg.bs_antennas);
        if (net.contains("users_per_cell")) {
            const int k = field_as<int>(net, "users_per_cell");
            cfg.users_per_cell.assign(cfg.num_cells, k);
            const int n = cfg.user_antennas.at(0).at(0);
            cfg.user_antennas.assign(cfg.num_cells, std::vector<int>(k, n));
        }
        if (net.contains("user_antennas")) {
            const int n = field_as<int>(net, "user_antennas");
            for (auto& row : cfg.user_antennas)
                std::fill(row.begin(), row.end(), n);
        }
        if (net.contains("noise_dbm"))
            cfg.noise_power = dbm_to_watts(field_as<double>(net, "noise_dbm"));
        if (net.contains("bandwidth_mhz"))
            cfg.bandwidth = field_as<double>(net, "bandwidth_mhz") * 1e6;
        cfg.amp_inefficiency = per_cell_field(
            net, "amp_inefficiency", cfg.num_cells, cfg.amp_inefficiency);
        if (net.contains("per_antenna_power_dbm"))
            cfg.per_antenna_power.assign(
                cfg.num_cells,
                dbm_to_watts(field_as<double>(net, "per_antenna_power_dbm")));
        if (net.contains("static_power_dbm"))
            cfg.static_power.assign(
                cfg.num_cells,
                dbm_to_watts(field_as<double>(net, "static_power_dbm")));
        if (net.contains("budget_dbm"))
            cfg.power_budget.assign(
                cfg.num_cells,
                dbm_to_watts(field_as<double>(net, "budget_dbm")));
        cfg.weights =
            per_cell_field(net, "weights", cfg.num_cells, cfg.weights);
    }

    spec.geometry = default_geometry(spec.network.num_cells, 1);
    if (doc.contains("geometry")) {
        const json& g = doc.at("geometry");
        GeometryConfig& geo = spec.geometry;
        if (g.contains("cell_side_m"))
            geo.bs_positions = regular_polygon_positions(
                spec.network.num_cells, field_as<double>(g, "cell_side_m"));
        geo.ut_min_distance =
            field_or<double>(g, "ut_min_distance_m", geo.ut_min_distance);
        geo.ut_max_distance =
            field_or<double>(g, "ut_max_distance_m", geo.ut_max_distance);
        geo.pathloss_slope =
            field_or<double>(g, "pathloss_slope_db", geo.pathloss_slope);
        geo.pathloss_offset_db =
            field_or<double>(g, "pathloss_offset_db", geo.pathloss_offset_db);
        geo.shadow_std_db =
            field_or<double>(g, "shadow_std_db", geo.shadow_std_db);
        geo.band_fraction =
            field_or<double>(g, "band_fraction", geo.band_fraction);
        geo.pathloss_offset_inside_log = field_or<bool>(
            g, "pathloss_offset_inside_log", geo.pathloss_offset_inside_log);
        geo.symmetrize = field_or<bool>(g, "symmetrize", geo.symmetrize);
    }

    spec.scenario_file = field_or<std::string>(doc, "scenario_file", "");
    spec.solver =
        parse_solver(field_or<std::string>(doc, "solver", "both"));
    spec.sweep_dbm =
        field_or<std::vector<double>>(doc, "sweep_dbm", spec.sweep_dbm);
    spec.seeds =
        field_or<std::vector<std::uint64_t>>(doc, "seeds", spec.seeds);
    if (doc.contains("baselines")) {
        for (const auto& b :
             field_as<std::vector<std::string>>(doc, "baselines")) {
            if (b == "maxmin_se")
                spec.run_maxmin_se = true;
            else if (b == "non_cooperative")
                spec.run_non_cooperative = true;
            else
                throw std::invalid_argument(
                    "config field 'baselines': unknown baseline '" + b + "'");
        }
    }
    spec.weight_sets = field_or<std::vector<std::vector<double>>>(
        doc, "weight_sets", spec.weight_sets);
    spec.weight_study_budget_dbm = field_or<double>(
        doc, "weight_study_budget_dbm", spec.weight_study_budget_dbm);
    spec.mc_samples = field_or<int>(doc, "mc_samples", spec.mc_samples);
    spec.output_dir =
        field_or<std::string>(doc, "output_dir", spec.output_dir);
    spec.log_bus = field_or<bool>(doc, "log_bus", spec.log_bus);

    if (doc.contains("solve")) {
        const json& s = doc.at("solve");
        SolveOptions& o = spec.solve;
        o.outer_tol = field_or<double>(s, "outer_tol", o.outer_tol);
        o.eta_tol = field_or<double>(s, "eta_tol", o.eta_tol);
        o.outer_cap = field_or<int>(s, "outer_cap", o.outer_cap);
        o.inner_cap = field_or<int>(s, "inner_cap", o.inner_cap);
        o.de_tol = field_or<double>(s, "de_tol", o.de_tol);
        o.de_max_iter = field_or<int>(s, "de_max_iter", o.de_max_iter);
    }

    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// CSV emission

void write_results_csv(const std::vector<ResultRow>& rows,
                       const std::string& path) {
    std::string text = "# schema=mmee-results-v1\n";
    text +=
        "seed,p_max_dbm,solver,variant,min_weighted_ee_bit_per_joule,"
        "mc_min_weighted_ee_bit_per_joule,mc_relative_gap,"
        "min_weighted_se_bit_per_s_hz,messages_total,outer_iterations,"
        "inner_iterations_total,flagged,note\n";
    for (const auto& r : rows) {
        text += std::to_string(r.seed) + ',' + fmt(r.p_max_dbm) + ',' +
                r.solver + ',' + r.variant + ',' + fmt(r.min_weighted_ee) +
                ',' + fmt(r.mc_min_weighted_ee) + ',' +
                fmt(r.mc_relative_gap) + ',' + fmt(r.min_weighted_se) + ',' +
                std::to_string(r.messages_total) + ',' +
                std::to_string(r.outer_iterations) + ',' +
                std::to_string(r.inner_iterations_total) + ',' +
                (r.flagged ? "1" : "0") + ',' + sanitize(r.note) + '\n';
    }
    atomic_write(path, text);
}

void write_cells_csv(const std::vector<ResultRow>& rows,
                     const std::string& path) {
    std::string text = "# schema=mmee-cells-v1\n";
    text +=
        "seed,p_max_dbm,solver,variant,cell,weight,"
        "cell_ee_bit_per_joule,cell_se_bit_per_s_hz\n";
    for (const auto& r : rows) {
        for (size_t u = 0; u < r.cell_ee.size(); ++u) {
            const double w =
                u < r.cell_weight.size() ? r.cell_weight[u] : 1.0;
            text += std::to_string(r.seed) + ',' + fmt(r.p_max_dbm) + ',' +
                    r.solver + ',' + r.variant + ',' + std::to_string(u) +
                    ',' + fmt(w) + ',' + fmt(r.cell_ee[u]) + ',' +
                    fmt(r.cell_se[u]) + '\n';
        }
    }
    atomic_write(path, text);
}

void write_timing_csv(const std::vector<ResultRow>& rows,
                      const std::string& path) {
    std::string text = "# schema=mmee-timing-v1\n";
    text += "seed,p_max_dbm,solver,variant,wall_time_ms\n";
    for (const auto& r : rows) {
        text += std::to_string(r.seed) + ',' + fmt(r.p_max_dbm) + ',' +
                r.solver + ',' + r.variant + ',' + fmt(r.wall_time_ms) + '\n';
    }
    atomic_write(path, text);
}

void write_trace_csv(const SolverTrace& trace, const std::string& path) {
    std::string text = "# schema=mmee-trace-v1 ee_units=bit_per_joule\n";
    text +=
        "outer,inner,min_weighted_ee_surrogate,min_weighted_ee_exact_de,"
        "eta,wall_time_ms,messages_exchanged\n";
    for (const auto& r : trace.rows) {
        text += std::to_string(r.outer) + ',' + std::to_string(r.inner) +
                ',' + fmt(nats_to_bits(r.min_weighted_ee_surrogate)) + ',' +
                fmt(nats_to_bits(r.min_weighted_ee_exact_de)) + ',' +
                fmt(nats_to_bits(r.eta)) + ',' + fmt(r.wall_time_ms) + ',' +
                std::to_string(r.messages_exchanged) + '\n';
    }
    for (const auto& note : trace.notes) text += "# note=" + note + '\n';
    atomic_write(path, text);
}

void write_dual_csv(const SolverTrace& trace, const std::string& path) {
    std::string text = "# schema=mmee-dual-v1\n";
    text +=
        "outer,inner,step,subgradient_norm_balance,subgradient_norm_power,"
        "max_power_violation_w\n";
    for (const auto& d : trace.dual_rows) {
        text += std::to_string(d.outer) + ',' + std::to_string(d.inner) +
                ',' + std::to_string(d.step) + ',' +
                fmt(d.subgradient_norm_balance) + ',' +
                fmt(d.subgradient_norm_power) + ',' +
                fmt(d.max_power_violation) + '\n';
    }
    atomic_write(path, text);
}

void write_rates_csv(const NetworkConfig& cfg, const RateReport& report,
                     const std::vector<std::vector<McEstimate>>* mc,
                     const std::string& path) {
    std::string text = "# schema=mmee-rates-v1\n";
    text +=
        "cell,user,a_bar_nats,b_nats,rate_nats,rate_bits,mc_rate_nats,"
        "mc_std_error_nats,relative_gap\n";
    for (int u = 0; u < cfg.num_cells; ++u) {
        for (int k = 0; k < cfg.users_per_cell[u]; ++k) {
            text += std::to_string(u) + ',' + std::to_string(k) + ',' +
                    fmt(report.a_bar[u][k]) + ',' + fmt(report.b[u][k]) +
                    ',' + fmt(report.rate[u][k]) + ',' +
                    fmt(nats_to_bits(report.rate[u][k]));
            if (mc != nullptr) {
                const McEstimate& est = (*mc)[u][k];
                const double gap =
                    est.mean > 0.0
                        ? std::abs(report.rate[u][k] - est.mean) / est.mean
                        : std::abs(report.rate[u][k] - est.mean);
                text += ',' + fmt(est.mean) + ',' + fmt(est.std_error) + ',' +
                        fmt(gap);
            } else {
                text += ",,,";
            }
            text += '\n';
        }
    }
    atomic_write(path, text);
}

void write_weights_csv(const std::vector<WeightStudyRow>& rows,
                       const std::string& path) {
    std::string text = "# schema=mmee-weights-v1\n";
    text +=
        "set,cell,weight,cell_ee_bit_per_joule,weighted_ee_bit_per_joule,"
        "weighted_spread,flagged\n";
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        for (size_t u = 0; u < r.cell_ee.size(); ++u) {
            text += std::to_string(i) + ',' + std::to_string(u) + ',' +
                    fmt(r.weights[u]) + ',' + fmt(r.cell_ee[u]) + ',' +
                    fmt(r.weighted_cell_ee[u]) + ',' +
                    fmt(r.weighted_spread) + ',' + (r.flagged ? "1" : "0") +
                    '\n';
        }
    }
    atomic_write(path, text);
}

}  // namespace mmee
