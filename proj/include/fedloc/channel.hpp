#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fedloc/geometry.hpp"
#include "fedloc/rng.hpp"

namespace fedloc::channel {

using geom::Point2;

struct AoiSpec {
    double width = 50.0;   // meters
    double height = 50.0;  // meters
    double area() const { return width * height; }
    bool contains(const Point2& p) const {
        return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
    }
};

/// Piecewise-constant scalar field over the AoI on a square grid.
/// Positions outside the grid clamp to the nearest cell.
struct GridField {
    double cell = 5.0;  // meters per cell edge
    int nx = 1;
    int ny = 1;
    std::vector<double> values;  // row-major, ny rows of nx

    double at(const Point2& p) const;
    static GridField constant(const AoiSpec& aoi, double value);
};

std::pair<GridField, GridField> make_fields(const AoiSpec& aoi,
                                            double grid_resolution,
                                            std::uint64_t seed);

struct ChannelParams {
    std::vector<Point2> ap_positions;
    double tx_power_dbm = 10.0;
    double ref_rx_power_1m = -30.0;  // dBm at ref_distance
    GridField pathloss_field;        // exponent, in [3, 8]
    GridField noise_var_field;       // dB^2, in [2, 8]
    double ref_distance = 1.0;       // meters
    bool noise_enabled = true;

    std::size_t n_aps() const { return ap_positions.size(); }
};

// Four APs at the AoI corners with random fields; the default scenario
// channel.
ChannelParams default_channel(const AoiSpec& aoi, std::uint64_t seed,
                              double grid_resolution = 5.0);

using RssVector = std::vector<double>;  // dBm, one entry per AP

// Noiseless log-distance mean. Distances inside ref_distance clamp to
// ref_distance to avoid the log singularity.
double rss_mean(const Point2& position, std::size_t ap_index,
                const ChannelParams& params);

// Mean plus one Gaussian shadowing draw (variance from noise_var_field).
double rss_at(const Point2& position, std::size_t ap_index,
              const ChannelParams& params, Rng& rng);

// One fingerprint measurement: per AP, the dB-domain mean of n_avg
// independent draws.
RssVector measure(const Point2& position, const ChannelParams& params,
                  int n_avg, Rng& rng);

}  // namespace fedloc::channel
