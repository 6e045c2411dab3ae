#include "fedloc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fedloc/parallel.hpp"

namespace fedloc::scenario {

std::vector<Point2> FingerprintDatabase::positions() const {
    std::vector<Point2> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.position);
    return out;
}

void FingerprintDatabase::refresh_hull() {
    hull = geom::convex_hull(positions());
}

static Point2 reflect_into(Point2 p, const AoiSpec& aoi) {
    // fold back across the walls until inside
    auto fold = [](double v, double hi) {
        while (v < 0.0 || v > hi) {
            if (v < 0.0) v = -v;
            if (v > hi) v = 2.0 * hi - v;
        }
        return v;
    };
    return {fold(p.x, aoi.width), fold(p.y, aoi.height)};
}

std::vector<Point2> generate_trajectory(const ClientMotionConfig& config,
                                        const AoiSpec& aoi, Rng& rng) {
    if (!aoi.contains(config.start))
        throw std::invalid_argument("start position outside AoI");
    if (config.sample_interval <= 0.0)
        throw std::invalid_argument("sample_interval must be positive");
    if (config.n_samples < 1)
        throw std::invalid_argument("n_samples must be >= 1");

    std::uniform_real_distribution<double> ux(0.0, aoi.width);
    std::uniform_real_distribution<double> uy(0.0, aoi.height);

    std::vector<Point2> out;
    out.reserve(config.n_samples);
    Point2 pos = config.start;
    Point2 target{ux(rng), uy(rng)};
    out.push_back(pos);

    const double step = config.velocity * config.sample_interval;
    for (int k = 1; k < config.n_samples; ++k) {
        double remaining = step;
        while (remaining > 0.0) {
            const double dx = target.x - pos.x;
            const double dy = target.y - pos.y;
            const double to_target = std::hypot(dx, dy);
            if (to_target <= remaining) {
                pos = target;
                remaining -= to_target;
                target = {ux(rng), uy(rng)};
            } else {
                pos.x += dx / to_target * remaining;
                pos.y += dy / to_target * remaining;
                remaining = 0.0;
            }
        }
        out.push_back(reflect_into(pos, aoi));
    }
    return out;
}

FingerprintDatabase build_database(int client_id,
                                   const ClientMotionConfig& motion,
                                   const ChannelParams& params,
                                   const AoiSpec& aoi, Rng& rng) {
    FingerprintDatabase db;
    db.client_id = client_id;
    const auto traj = generate_trajectory(motion, aoi, rng);
    db.records.reserve(traj.size());
    for (const Point2& p : traj)
        db.records.push_back({channel::measure(p, params, motion.n_avg, rng), p});
    db.refresh_hull();
    return db;
}

Scenario make_scenario(ScenarioKind kind, const ScenarioConfig& cfg,
                       const AoiSpec& aoi, const ChannelParams& params,
                       std::uint64_t seed) {
    if (cfg.n_clients < 2)
        throw std::invalid_argument("n_clients must be >= 2");
    if (kind == ScenarioKind::Heterogeneous && cfg.n_clients % 2 != 0)
        throw std::invalid_argument(
            "heterogeneous scenario needs an even client count");

    const std::vector<Point2> corners = {{0.0, 0.0},
                                         {aoi.width, 0.0},
                                         {aoi.width, aoi.height},
                                         {0.0, aoi.height}};

    Scenario sc;
    sc.databases.resize(cfg.n_clients);
    parallel_for(cfg.n_clients, [&](std::ptrdiff_t i) {
        ClientMotionConfig motion;
        motion.start = corners[i % corners.size()];
        motion.sample_interval = cfg.sample_interval;
        motion.n_samples = cfg.n_samples;
        motion.n_avg = cfg.n_avg;
        const bool straggler = kind == ScenarioKind::Heterogeneous &&
                               i < cfg.n_clients / 2;
        motion.velocity = straggler ? cfg.velocity_straggler
                                    : cfg.velocity_normal;
        Rng rng = make_rng(seed, 0x636c69, static_cast<std::uint64_t>(i));
        sc.databases[i] = build_database(static_cast<int>(i), motion, params,
                                         aoi, rng);
    });

    Rng test_rng = make_rng(seed, 0x74657374);
    std::uniform_real_distribution<double> ux(0.0, aoi.width);
    std::uniform_real_distribution<double> uy(0.0, aoi.height);
    sc.test_set.reserve(cfg.test_set_size);
    for (int k = 0; k < cfg.test_set_size; ++k) {
        const Point2 p{ux(test_rng), uy(test_rng)};
        sc.test_set.push_back(
            {channel::measure(p, params, cfg.n_avg, test_rng), p});
    }
    return sc;
}

void write_databases_csv(std::ostream& out,
                         const std::vector<FingerprintDatabase>& dbs) {
    std::size_t n_aps = 0;
    for (const auto& db : dbs)
        if (!db.records.empty()) n_aps = db.records.front().rss.size();
    out << "client_id,x,y";
    for (std::size_t j = 0; j < n_aps; ++j) out << ",rss_" << j;
    out << "\n";
    out.precision(17);
    for (const auto& db : dbs) {
        for (const auto& r : db.records) {
            out << db.client_id << ',' << r.position.x << ',' << r.position.y;
            for (double v : r.rss) out << ',' << v;
            out << "\n";
        }
    }
}

std::vector<FingerprintDatabase> read_databases_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("databases CSV: missing header");
    std::vector<FingerprintDatabase> dbs;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> fields;
        while (std::getline(ss, cell, ',')) {
            try {
                fields.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("databases CSV: bad value at row " +
                                         std::to_string(row));
            }
        }
        if (fields.size() < 4)
            throw std::runtime_error("databases CSV: short row " +
                                     std::to_string(row));
        const int id = static_cast<int>(fields[0]);
        FingerprintRecord rec;
        rec.position = {fields[1], fields[2]};
        rec.rss.assign(fields.begin() + 3, fields.end());
        auto it = std::find_if(dbs.begin(), dbs.end(), [&](const auto& d) {
            return d.client_id == id;
        });
        if (it == dbs.end()) {
            dbs.push_back({id, {}, {}});
            it = dbs.end() - 1;
        }
        it->records.push_back(std::move(rec));
    }
    for (auto& db : dbs) db.refresh_hull();
    return dbs;
}

}  // namespace fedloc::scenario
