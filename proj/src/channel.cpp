#include "fedloc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedloc::channel {

double GridField::at(const Point2& p) const {
    int ix = static_cast<int>(std::floor(p.x / cell));
    int iy = static_cast<int>(std::floor(p.y / cell));
    ix = std::clamp(ix, 0, nx - 1);
    iy = std::clamp(iy, 0, ny - 1);
    return values[static_cast<std::size_t>(iy) * nx + ix];
}

GridField GridField::constant(const AoiSpec& aoi, double value) {
    GridField f;
    f.cell = std::max(aoi.width, aoi.height);
    f.nx = 1;
    f.ny = 1;
    f.values = {value};
    return f;
}

static GridField random_field(const AoiSpec& aoi, double resolution,
                              double lo, double hi, Rng& rng) {
    GridField f;
    f.cell = resolution;
    f.nx = std::max(1, static_cast<int>(std::ceil(aoi.width / resolution)));
    f.ny = std::max(1, static_cast<int>(std::ceil(aoi.height / resolution)));
    f.values.resize(static_cast<std::size_t>(f.nx) * f.ny);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : f.values) v = dist(rng);
    return f;
}

std::pair<GridField, GridField> make_fields(const AoiSpec& aoi,
                                            double grid_resolution,
                                            std::uint64_t seed) {
    if (grid_resolution <= 0.0)
        throw std::invalid_argument("grid_resolution must be positive");
    Rng rng_pl = make_rng(seed, 0x50617468);  // distinct streams per field
    Rng rng_nv = make_rng(seed, 0x4e6f6973);
    return {random_field(aoi, grid_resolution, 3.0, 8.0, rng_pl),
            random_field(aoi, grid_resolution, 2.0, 8.0, rng_nv)};
}

ChannelParams default_channel(const AoiSpec& aoi, std::uint64_t seed,
                              double grid_resolution) {
    ChannelParams p;
    p.ap_positions = {{0.0, 0.0},
                      {aoi.width, 0.0},
                      {aoi.width, aoi.height},
                      {0.0, aoi.height}};
    auto [pl, nv] = make_fields(aoi, grid_resolution, seed);
    p.pathloss_field = std::move(pl);
    p.noise_var_field = std::move(nv);
    return p;
}

double rss_mean(const Point2& position, std::size_t ap_index,
                const ChannelParams& params) {
    if (ap_index >= params.n_aps())
        throw std::out_of_range("ap_index out of range");
    const Point2& ap = params.ap_positions[ap_index];
    const double d = std::max(geom::distance(position, ap), params.ref_distance);
    const double n = params.pathloss_field.at(position);
    return params.ref_rx_power_1m -
           10.0 * n * std::log10(d / params.ref_distance);
}

double rss_at(const Point2& position, std::size_t ap_index,
              const ChannelParams& params, Rng& rng) {
    double v = rss_mean(position, ap_index, params);
    if (params.noise_enabled) {
        const double var = params.noise_var_field.at(position);
        std::normal_distribution<double> noise(0.0, std::sqrt(var));
        v += noise(rng);
    }
    return v;
}

RssVector measure(const Point2& position, const ChannelParams& params,
                  int n_avg, Rng& rng) {
    if (n_avg < 1) throw std::invalid_argument("n_avg must be >= 1");
    RssVector out(params.n_aps(), 0.0);
    for (std::size_t ap = 0; ap < params.n_aps(); ++ap) {
        double sum = 0.0;
        for (int k = 0; k < n_avg; ++k) sum += rss_at(position, ap, params, rng);
        out[ap] = sum / n_avg;
    }
    return out;
}

}  // namespace fedloc::channel
