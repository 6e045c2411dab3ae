#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedloc/channel.hpp"
#include "fedloc/geometry.hpp"

namespace fedloc::scenario {

using channel::AoiSpec;
using channel::ChannelParams;
using channel::RssVector;
using geom::ConvexHull;
using geom::Point2;

struct FingerprintRecord {
    RssVector rss;
    Point2 position;
    int floor = 0;  // used by the multi-floor pipeline only
};

struct FingerprintDatabase {
    int client_id = 0;
    std::vector<FingerprintRecord> records;
    ConvexHull hull;  // over record positions, cached at build time

    std::vector<Point2> positions() const;
    void refresh_hull();
};

struct ClientMotionConfig {
    Point2 start;
    double velocity = 0.5;        // m/s
    double sample_interval = 3.0; // s
    int n_samples = 200;
    int n_avg = 10;
};

// Random-waypoint walk sampled every sample_interval seconds. Positions
// never leave the AoI (waypoints are interior; a reflect guard covers
// numeric overshoot at the walls).
std::vector<Point2> generate_trajectory(const ClientMotionConfig& config,
                                        const AoiSpec& aoi, Rng& rng);

FingerprintDatabase build_database(int client_id,
                                   const ClientMotionConfig& motion,
                                   const ChannelParams& params,
                                   const AoiSpec& aoi, Rng& rng);

enum class ScenarioKind { Homogeneous, Heterogeneous };

struct ScenarioConfig {
    int n_clients = 8;
    int n_samples = 200;
    int n_avg = 10;
    double sample_interval = 3.0;
    double velocity_normal = 0.5;
    double velocity_straggler = 0.05;
    int test_set_size = 1200;
};

struct Scenario {
    std::vector<FingerprintDatabase> databases;
    std::vector<FingerprintRecord> test_set;
};

// Clients start from the AoI corners, cycled. Heterogeneous mode turns
// the first half of the clients into stragglers (requires even
// n_clients). Deterministic in seed; per-client RNG streams.
Scenario make_scenario(ScenarioKind kind, const ScenarioConfig& cfg,
                       const AoiSpec& aoi, const ChannelParams& params,
                       std::uint64_t seed);

// CSV form: header client_id,x,y,rss_0..rss_{L-1}; one record per row.
void write_databases_csv(std::ostream& out,
                         const std::vector<FingerprintDatabase>& dbs);
std::vector<FingerprintDatabase> read_databases_csv(std::istream& in);

}  // namespace fedloc::scenario
