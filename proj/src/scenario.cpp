#include "mmee/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

namespace mmee {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

// Circular distance between beam index m and a real-valued band center.
double beam_distance(double m, double center, int num_beams) {
    double d = std::fmod(std::abs(m - center), static_cast<double>(num_beams));
    return std::min(d, num_beams - d);
}

// Raised-cosine taper over a circular beam band of half-width `half`.
double band_profile(double dist, double half) {
    if (dist >= half) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * dist / half));
}

}  // namespace

void GeometryConfig::validate(int num_cells) const {
    require(static_cast<int>(bs_positions.size()) == num_cells,
            "bs_positions must have one entry per cell");
    require(ut_min_distance > 0.0, "ut_min_distance must be > 0");
    require(ut_max_distance > ut_min_distance,
            "ut_max_distance must exceed ut_min_distance");
    require(shadow_std_db >= 0.0, "shadow_std_db must be >= 0");
    require(band_fraction > 0.0 && band_fraction <= 1.0,
            "band_fraction must lie in (0, 1]");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 on (seed + stream * odd constant); decorrelates sub-streams.
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double pathloss_gain(const GeometryConfig& geo, double distance_m,
                     double shadow_db) {
    double gain_db;
    if (geo.pathloss_offset_inside_log) {
        // Offset and shadowing added to the distance before the log; the
        // argument is clamped away from zero to keep the expression defined.
        const double arg =
            std::max(distance_m + geo.pathloss_offset_db + shadow_db, 1e-3);
        gain_db = geo.pathloss_slope * std::log10(arg);
    } else {
        gain_db = geo.pathloss_slope * std::log10(distance_m) +
                  geo.pathloss_offset_db + shadow_db;
    }
    return std::pow(10.0, gain_db / 10.0);
}

ChannelStats build_scenario(const GeometryConfig& geo,
                            const NetworkConfig& cfg) {
    cfg.validate();
    geo.validate(cfg.num_cells);

    std::mt19937_64 rng(derive_seed(geo.rng_seed, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> shadow(0.0,
                                            std::max(geo.shadow_std_db, 1e-300));
    const bool has_shadow = geo.shadow_std_db > 0.0;

    const int M = cfg.bs_antennas;
    const int U = cfg.num_cells;

    if (geo.symmetrize) {
        for (int u = 1; u < U; ++u)
            require(cfg.users_per_cell[u] == cfg.users_per_cell[0] &&
                        cfg.user_antennas[u] == cfg.user_antennas[0],
                    "symmetrize requires identical per-cell user layouts");
    }

    // UT positions: uniform in the serving cell's annulus (area-uniform
    // radius, uniform angle).  Under symmetrize only the first cell's users
    // are drawn; every other cell gets the same layout rotated about the
    // origin by its share of the full circle.
    std::vector<std::vector<Eigen::Vector2d>> ut_pos(U);
    const int cells_drawn = geo.symmetrize ? 1 : U;
    for (int u = 0; u < cells_drawn; ++u) {
        ut_pos[u].reserve(cfg.users_per_cell[u]);
        for (int k = 0; k < cfg.users_per_cell[u]; ++k) {
            const double r2_lo = geo.ut_min_distance * geo.ut_min_distance;
            const double r2_hi = geo.ut_max_distance * geo.ut_max_distance;
            const double r = std::sqrt(r2_lo + (r2_hi - r2_lo) * unit(rng));
            const double ang = kTwoPi * unit(rng);
            ut_pos[u].push_back(geo.bs_positions[u] +
                                r * Eigen::Vector2d(std::cos(ang), std::sin(ang)));
        }
    }
    if (geo.symmetrize) {
        for (int u = 1; u < U; ++u) {
            const double ang = kTwoPi * u / U;
            const Eigen::Rotation2Dd rot(ang);
            ut_pos[u].reserve(cfg.users_per_cell[u]);
            for (const auto& p : ut_pos[0]) ut_pos[u].push_back(rot * p);
        }
    }

    // Per-link shadowing, drawn up front.  Under symmetrize the first cell's
    // draws are replicated so that the link (cell u, user k) -> BS v reuses
    // the draw of (cell 0, user k) -> BS (v - u mod U), matching the rotation
    // applied to the positions.
    std::vector<std::vector<std::vector<double>>> shadow_db(U);
    for (int u = 0; u < U; ++u) {
        shadow_db[u].resize(cfg.users_per_cell[u]);
        for (auto& row : shadow_db[u]) row.resize(U, 0.0);
    }
    if (geo.symmetrize) {
        for (int k = 0; k < cfg.users_per_cell[0]; ++k)
            for (int v = 0; v < U; ++v)
                shadow_db[0][k][v] = has_shadow ? shadow(rng) : 0.0;
        for (int u = 1; u < U; ++u)
            for (int k = 0; k < cfg.users_per_cell[u]; ++k)
                for (int v = 0; v < U; ++v)
                    shadow_db[u][k][v] = shadow_db[0][k][(v - u + U) % U];
    } else {
        for (int u = 0; u < U; ++u)
            for (int k = 0; k < cfg.users_per_cell[u]; ++k)
                for (int v = 0; v < U; ++v)
                    shadow_db[u][k][v] = has_shadow ? shadow(rng) : 0.0;
    }

    ChannelStats stats;
    stats.config = cfg;
    stats.omega.resize(cfg.num_cells);

    const double half_width = std::max(1.0, 0.5 * geo.band_fraction * M);

    for (int u = 0; u < cfg.num_cells; ++u) {
        stats.omega[u].resize(cfg.users_per_cell[u]);
        for (int k = 0; k < cfg.users_per_cell[u]; ++k) {
            const int N = cfg.user_antennas[u][k];
            stats.omega[u][k].resize(cfg.num_cells);
            for (int v = 0; v < cfg.num_cells; ++v) {
                const Eigen::Vector2d delta = ut_pos[u][k] - geo.bs_positions[v];
                const double dist = delta.norm();
                if (dist < geo.ut_min_distance)
                    throw std::invalid_argument(
                        "UT placement closer than the minimum link distance");
                const double gain = pathloss_gain(geo, dist, shadow_db[u][k][v]);

                // Band center: UT azimuth relative to BS-v mapped onto the
                // beam index circle; receive antenna n shifts it by n beams.
                const double azimuth = std::atan2(delta.y(), delta.x());
                const double center0 =
                    (azimuth + std::numbers::pi) / kTwoPi * M;

                MatrixXd profile(N, M);
                for (int n = 0; n < N; ++n)
                    for (int m = 0; m < M; ++m)
                        profile(n, m) = band_profile(
                            beam_distance(m, center0 + n, M), half_width);

                const double total = profile.sum();
                if (!(total > 0.0) || !(gain > 0.0))
                    throw std::invalid_argument(
                        "generated coupling matrix has zero energy");
                // Exact normalization: total energy M * N * gain.
                stats.omega[u][k][v] = profile * (M * N * gain / total);
            }
        }
    }
    stats.validate();
    return stats;
}

Eigen::MatrixXcd sample_beam_channel(const MatrixXd& omega,
                                     std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd g(omega.rows(), omega.cols());
    // Column-major fill keeps the draw order independent of expression
    // evaluation order, so results are reproducible.
    for (Eigen::Index m = 0; m < omega.cols(); ++m) {
        for (Eigen::Index n = 0; n < omega.rows(); ++n) {
            const double amp = std::sqrt(0.5 * omega(n, m));
            g(n, m) = std::complex<double>(amp * gauss(rng), amp * gauss(rng));
        }
    }
    return g;
}

namespace {

using nlohmann::json;

json matrix_to_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index n = 0; n < m.rows(); ++n) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(n, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.size();
    require(rows > 0, "matrix in scenario file has no rows");
    const auto cols = j.at(0).size();
    MatrixXd m(rows, cols);
    for (size_t n = 0; n < rows; ++n) {
        require(j.at(n).size() == cols, "ragged matrix in scenario file");
        for (size_t c = 0; c < cols; ++c) m(n, c) = j.at(n).at(c).get<double>();
    }
    return m;
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out << content;
        if (!out) throw std::runtime_error("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void save_scenario(const ChannelStats& stats, const GeometryConfig& geo,
                   const std::string& path) {
    const NetworkConfig& cfg = stats.config;
    json doc;
    doc["schema_version"] = 1;

    json net;
    net["num_cells"] = cfg.num_cells;
    net["bs_antennas"] = cfg.bs_antennas;
    net["users_per_cell"] = cfg.users_per_cell;
    net["user_antennas"] = cfg.user_antennas;
    net["noise_power_w"] = cfg.noise_power;
    net["bandwidth_hz"] = cfg.bandwidth;
    net["amp_inefficiency"] = cfg.amp_inefficiency;
    net["per_antenna_power_w"] = cfg.per_antenna_power;
    net["static_power_w"] = cfg.static_power;
    net["power_budget_w"] = cfg.power_budget;
    net["weights"] = cfg.weights;
    doc["network"] = std::move(net);

    json g;
    json pos = json::array();
    for (const auto& p : geo.bs_positions) pos.push_back({p.x(), p.y()});
    g["bs_positions_m"] = std::move(pos);
    g["cell_radius_m"] = geo.cell_radius;
    g["ut_min_distance_m"] = geo.ut_min_distance;
    g["ut_max_distance_m"] = geo.ut_max_distance;
    g["pathloss_slope_db"] = geo.pathloss_slope;
    g["pathloss_offset_db"] = geo.pathloss_offset_db;
    g["shadow_std_db"] = geo.shadow_std_db;
    g["band_fraction"] = geo.band_fraction;
    g["pathloss_offset_inside_log"] = geo.pathloss_offset_inside_log;
    g["symmetrize"] = geo.symmetrize;
    g["rng_seed"] = geo.rng_seed;
    doc["geometry"] = std::move(g);

    json coupling = json::array();
    for_each_user(cfg, [&](UserRef r) {
        for (int v = 0; v < cfg.num_cells; ++v) {
            json entry;
            entry["cell"] = r.cell;
            entry["user"] = r.user;
            entry["tx"] = v;
            entry["values"] = matrix_to_json(stats.coupling(r, v));
            coupling.push_back(std::move(entry));
        }
    });
    doc["coupling"] = std::move(coupling);

    atomic_write(path, doc.dump(1) + "\n");
}

LoadedScenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path);
    json doc = json::parse(in);
    require(doc.at("schema_version").get<int>() == 1,
            "unsupported scenario schema version");

    LoadedScenario out;
    const json& net = doc.at("network");
    NetworkConfig& cfg = out.stats.config;
    cfg.num_cells = net.at("num_cells").get<int>();
    cfg.bs_antennas = net.at("bs_antennas").get<int>();
    cfg.users_per_cell = net.at("users_per_cell").get<std::vector<int>>();
    cfg.user_antennas =
        net.at("user_antennas").get<std::vector<std::vector<int>>>();
    cfg.noise_power = net.at("noise_power_w").get<double>();
    cfg.bandwidth = net.at("bandwidth_hz").get<double>();
    cfg.amp_inefficiency = net.at("amp_inefficiency").get<std::vector<double>>();
    cfg.per_antenna_power =
        net.at("per_antenna_power_w").get<std::vector<double>>();
    cfg.static_power = net.at("static_power_w").get<std::vector<double>>();
    cfg.power_budget = net.at("power_budget_w").get<std::vector<double>>();
    cfg.weights = net.at("weights").get<std::vector<double>>();

    const json& g = doc.at("geometry");
    GeometryConfig& geo = out.geometry;
    geo.bs_positions.clear();
    for (const auto& p : g.at("bs_positions_m"))
        geo.bs_positions.emplace_back(p.at(0).get<double>(),
                                      p.at(1).get<double>());
    geo.cell_radius = g.at("cell_radius_m").get<double>();
    geo.ut_min_distance = g.at("ut_min_distance_m").get<double>();
    geo.ut_max_distance = g.at("ut_max_distance_m").get<double>();
    geo.pathloss_slope = g.at("pathloss_slope_db").get<double>();
    geo.pathloss_offset_db = g.at("pathloss_offset_db").get<double>();
    geo.shadow_std_db = g.at("shadow_std_db").get<double>();
    geo.band_fraction = g.at("band_fraction").get<double>();
    geo.pathloss_offset_inside_log =
        g.at("pathloss_offset_inside_log").get<bool>();
    geo.symmetrize = g.value("symmetrize", false);
    geo.rng_seed = g.at("rng_seed").get<std::uint64_t>();

    out.stats.omega.resize(cfg.num_cells);
    for (int u = 0; u < cfg.num_cells; ++u) {
        out.stats.omega[u].resize(cfg.users_per_cell[u]);
        for (int k = 0; k < cfg.users_per_cell[u]; ++k)
            out.stats.omega[u][k].resize(cfg.num_cells);
    }
    for (const auto& entry : doc.at("coupling")) {
        const int u = entry.at("cell").get<int>();
        const int k = entry.at("user").get<int>();
        const int v = entry.at("tx").get<int>();
        require(u >= 0 && u < cfg.num_cells && v >= 0 && v < cfg.num_cells &&
                    k >= 0 && k < cfg.users_per_cell[u],
                "coupling entry indices out of range");
        out.stats.omega[u][k][v] = matrix_from_json(entry.at("values"));
    }
    out.stats.validate();
    return out;
}

std::vector<Eigen::Vector2d> regular_polygon_positions(int num_cells,
                                                       double side_m) {
    require(num_cells >= 1, "num_cells must be >= 1");
    std::vector<Eigen::Vector2d> pos;
    if (num_cells == 1) {
        pos.emplace_back(0.0, 0.0);
        return pos;
    }
    const double circumradius =
        side_m / (2.0 * std::sin(std::numbers::pi / num_cells));
    for (int u = 0; u < num_cells; ++u) {
        const double ang = kTwoPi * u / num_cells;
        pos.emplace_back(circumradius * std::cos(ang),
                         circumradius * std::sin(ang));
    }
    return pos;
}

}  // namespace mmee
