// Scenario generation: places user terminals around base stations, converts
// link distances to large-scale gains (log-distance path loss + log-normal
// shadowing), and spreads each link's energy over a contiguous band of beams
// to produce the coupling matrices that drive everything downstream.
#pragma once

#include <cstdint>
#include <random>

#include "mmee/types.hpp"

namespace mmee {

// Geometric and statistical parameters of the scenario generator.
struct GeometryConfig {
    std::vector<Eigen::Vector2d> bs_positions;  // one per cell, meters
    double cell_radius = 250.0;                 // meters, documentation bound
    double ut_min_distance = 30.0;              // annulus inner radius, meters
    double ut_max_distance = 250.0;             // annulus outer radius, meters
    double pathloss_slope = -38.0;              // dB per decade of distance
    double pathloss_offset_db = -34.5;          // dB constant
    double shadow_std_db = 8.0;                 // log-normal shadowing, dB
    double band_fraction = 0.2;                 // beam band width as share of M
    // Alternate parenthesization of the path-loss expression kept selectable
    // for comparison: applies the dB offset and shadowing to the distance
    // inside the log instead of adding them outside. Off by default.
    bool pathloss_offset_inside_log = false;
    // Replicate the first cell's user layout and shadowing to every cell by
    // rotation about the origin. With BS positions on a regular polygon this
    // makes the whole scenario rotation-symmetric, so all cells see
    // statistically identical conditions (useful for weighting studies).
    bool symmetrize = false;
    std::uint64_t rng_seed = 1;

    void validate(int num_cells) const;  // throws std::invalid_argument
};

// Deterministically derives an independent sub-stream seed (splitmix64 mix),
// so scenario generation and Monte-Carlo sampling never share a stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Linear large-scale gain for one link. `shadow_db` is the realized
// shadowing term c in dB; distance in meters.
double pathloss_gain(const GeometryConfig& geo, double distance_m,
                     double shadow_db);

// Builds the full statistical-CSI state for the network: samples one UT
// position per user (uniform in the serving cell's annulus), draws per-link
// shadowing, and fills each coupling matrix with a raised-cosine beam band
// centered on the UT's azimuth relative to the transmitting BS (each receive
// antenna's band shifted by one beam so rows stay distinct). Every matrix is
// scaled so its total energy equals M * N * gain exactly. Deterministic
// given geo.rng_seed.
ChannelStats build_scenario(const GeometryConfig& geo,
                            const NetworkConfig& cfg);

// Draws one beam-domain channel realization: independent entries
// sqrt(omega(n,m)) * z with z a standard circular complex Gaussian, so the
// elementwise second moment of the result is exactly `omega`.
Eigen::MatrixXcd sample_beam_channel(const MatrixXd& omega,
                                     std::mt19937_64& rng);

// Scenario export/import as a versioned JSON document carrying the network
// config, geometry, and all coupling matrices, so experiments can be
// replayed without re-seeding.
void save_scenario(const ChannelStats& stats, const GeometryConfig& geo,
                   const std::string& path);
struct LoadedScenario {
    ChannelStats stats;
    GeometryConfig geometry;
};
LoadedScenario load_scenario(const std::string& path);

// BS positions on a regular polygon with the given side length (a single BS
// sits at the origin); keeps synthetic multi-cell layouts symmetric.
std::vector<Eigen::Vector2d> regular_polygon_positions(int num_cells,
                                                       double side_m);

}  // namespace mmee
