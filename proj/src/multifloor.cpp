#include "fedloc/multifloor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fedloc/parallel.hpp"

namespace fedloc::multifloor {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& cell, std::size_t row) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size() && cell.find_first_not_of(" \r", pos) !=
                                      std::string::npos)
            throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("UJIIndoorLoc: non-numeric cell '" + cell +
                                 "' at row " + std::to_string(row));
    }
}

}  // namespace

std::vector<UjiRecord> load_ujiindoorloc(const std::string& path,
                                         const UjiLoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("UJIIndoorLoc: cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("UJIIndoorLoc: empty file " + path);
    const auto header = split_csv_line(line);

    std::vector<int> wap_cols(kUjiWapCount, -1);
    int col_lon = -1, col_lat = -1, col_floor = -1, col_building = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string h = header[c];
        while (!h.empty() && (h.back() == '\r' || h.back() == ' ')) h.pop_back();
        if (h.rfind("WAP", 0) == 0 && h.size() == 6) {
            const int idx = std::stoi(h.substr(3)) - 1;
            if (idx >= 0 && idx < kUjiWapCount) wap_cols[idx] = static_cast<int>(c);
        } else if (h == "LONGITUDE") {
            col_lon = static_cast<int>(c);
        } else if (h == "LATITUDE") {
            col_lat = static_cast<int>(c);
        } else if (h == "FLOOR") {
            col_floor = static_cast<int>(c);
        } else if (h == "BUILDINGID") {
            col_building = static_cast<int>(c);
        }
    }
    if (col_lon < 0 || col_lat < 0 || col_floor < 0 || col_building < 0 ||
        std::count(wap_cols.begin(), wap_cols.end(), -1) > 0)
        throw std::runtime_error("UJIIndoorLoc: malformed header in " + path);

    std::vector<UjiRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() < header.size())
            throw std::runtime_error("UJIIndoorLoc: short row " +
                                     std::to_string(row));
        UjiRecord rec;
        rec.building = static_cast<int>(parse_cell(cells[col_building], row));
        if (rec.building != opts.building) continue;
        rec.floor = static_cast<int>(parse_cell(cells[col_floor], row));
        rec.longitude = parse_cell(cells[col_lon], row);
        rec.latitude = parse_cell(cells[col_lat], row);
        rec.rss.resize(kUjiWapCount);
        for (int w = 0; w < kUjiWapCount; ++w) {
            double v = parse_cell(cells[wap_cols[w]], row);
            if (v == kUjiSentinel) v = opts.sentinel_fill;
            rec.rss[w] = v;
        }
        records.push_back(std::move(rec));
    }

    if (opts.shift_origin && !records.empty()) {
        double min_lon = records[0].longitude, min_lat = records[0].latitude;
        for (const auto& r : records) {
            min_lon = std::min(min_lon, r.longitude);
            min_lat = std::min(min_lat, r.latitude);
        }
        for (auto& r : records) {
            r.longitude -= min_lon;
            r.latitude -= min_lat;
        }
    }
    return records;
}

void write_uji_records(std::ostream& out, const std::vector<UjiRecord>& records) {
    out << "longitude,latitude,floor,building";
    for (int w = 0; w < kUjiWapCount; ++w) out << ",rss_" << w;
    out << "\n";
    out.precision(17);
    for (const auto& r : records) {
        out << r.longitude << ',' << r.latitude << ',' << r.floor << ','
            << r.building;
        for (double v : r.rss) out << ',' << v;
        out << "\n";
    }
}

std::vector<UjiRecord> read_uji_records(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("uji records: missing header");
    std::vector<UjiRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 4 + kUjiWapCount)
            throw std::runtime_error("uji records: short row " +
                                     std::to_string(row));
        UjiRecord rec;
        rec.longitude = parse_cell(cells[0], row);
        rec.latitude = parse_cell(cells[1], row);
        rec.floor = static_cast<int>(parse_cell(cells[2], row));
        rec.building = static_cast<int>(parse_cell(cells[3], row));
        rec.rss.resize(kUjiWapCount);
        for (int w = 0; w < kUjiWapCount; ++w)
            rec.rss[w] = parse_cell(cells[4 + w], row);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<FingerprintRecord> to_fingerprints(const std::vector<UjiRecord>& records) {
    std::vector<FingerprintRecord> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back({r.rss, {r.longitude, r.latitude}, r.floor});
    return out;
}

std::vector<FingerprintDatabase> partition_clients(
    const std::vector<FingerprintRecord>& records, int n_clients,
    PartitionMode mode, std::uint64_t seed, double disc_fraction) {
    if (n_clients < 2) throw std::invalid_argument("n_clients must be >= 2");
    if (records.size() < static_cast<std::size_t>(n_clients))
        throw std::invalid_argument("fewer records than clients");

    Rng rng = make_rng(seed, 0x70617274);
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<FingerprintDatabase> dbs(n_clients);
    for (int i = 0; i < n_clients; ++i) dbs[i].client_id = i;

    if (mode == PartitionMode::Homogeneous) {
        for (std::size_t k = 0; k < order.size(); ++k)
            dbs[k % n_clients].records.push_back(records[order[k]]);
    } else {
        // bounding box diagonal sets the disc radius
        double min_x = records[0].position.x, max_x = min_x;
        double min_y = records[0].position.y, max_y = min_y;
        for (const auto& r : records) {
            min_x = std::min(min_x, r.position.x);
            max_x = std::max(max_x, r.position.x);
            min_y = std::min(min_y, r.position.y);
            max_y = std::max(max_y, r.position.y);
        }
        const double radius =
            disc_fraction * std::hypot(max_x - min_x, max_y - min_y);

        const int n_restricted = n_clients / 2;
        const std::size_t quota = records.size() / n_clients;
        std::vector<bool> taken(records.size(), false);
        std::uniform_int_distribution<std::size_t> pick(0, records.size() - 1);
        for (int c = 0; c < n_restricted; ++c) {
            const Point2 center = records[pick(rng)].position;
            for (std::size_t k = 0;
                 k < order.size() && dbs[c].records.size() < quota; ++k) {
                const std::size_t idx = order[k];
                if (taken[idx]) continue;
                if (geom::distance(records[idx].position, center) <= radius) {
                    dbs[c].records.push_back(records[idx]);
                    taken[idx] = true;
                }
            }
            if (dbs[c].records.empty()) {
                // disc missed everything; fall back to the center record
                for (std::size_t k = 0; k < order.size(); ++k) {
                    if (!taken[order[k]]) {
                        dbs[c].records.push_back(records[order[k]]);
                        taken[order[k]] = true;
                        break;
                    }
                }
            }
        }
        std::size_t next = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const std::size_t idx = order[k];
            if (taken[idx]) continue;
            dbs[n_restricted + next % (n_clients - n_restricted)].records
                .push_back(records[idx]);
            ++next;
        }
    }

    for (auto& db : dbs) {
        if (db.records.empty())
            throw std::runtime_error("client partition produced an empty client");
        db.refresh_hull();
    }
    return dbs;
}

std::vector<double> RssScaler::apply(const std::vector<double>& rss) const {
    std::vector<double> out(rss.size());
    for (std::size_t i = 0; i < rss.size(); ++i)
        out[i] = (rss[i] + offset) * scale;
    return out;
}

namespace {

// Shared round loop for both stages; federation::run_federated is
// regression-only, the classifier needs the same loop over generic sets.
MlpModel federated_train(const MlpModel& init,
                         const std::vector<neural::TrainSet>& client_sets,
                         const std::vector<double>& weights, int rounds,
                         const neural::TrainConfig& train, std::uint64_t seed) {
    MlpModel global = init;
    std::vector<MlpModel> locals(client_sets.size(), global);
    for (int t = 1; t <= rounds; ++t) {
        const MlpModel snapshot = global;
        parallel_for(static_cast<std::ptrdiff_t>(client_sets.size()),
                     [&](std::ptrdiff_t i) {
                         locals[i] = neural::train_local(
                             snapshot, client_sets[i], train,
                             derive_seed(seed, static_cast<std::uint64_t>(t),
                                         static_cast<std::uint64_t>(i)));
                     });
        global = federation::aggregate(locals, weights);
    }
    return global;
}

neural::TrainSet scaled_regression_set(const std::vector<FingerprintRecord>& recs,
                                       const RssScaler& scaler) {
    neural::TrainSet set;
    set.reserve(recs.size());
    for (const auto& r : recs)
        set.push_back({scaler.apply(r.rss), {r.position.x, r.position.y}});
    return set;
}

}  // namespace

MultiFloorModel train_multifloor(const std::vector<FingerprintDatabase>& databases,
                                 const MultiFloorConfig& cfg) {
    if (databases.empty()) throw std::invalid_argument("no client databases");
    const std::size_t input_dim = databases.front().records.front().rss.size();

    int n_floors = 0;
    std::set<int> seen_floors;
    for (const auto& db : databases)
        for (const auto& r : db.records) {
            n_floors = std::max(n_floors, r.floor + 1);
            seen_floors.insert(r.floor);
        }
    for (int f = 0; f < n_floors; ++f)
        if (!seen_floors.count(f))
            throw std::invalid_argument("no training data for floor " +
                                        std::to_string(f));

    MultiFloorModel model;
    model.n_floors = n_floors;

    // Stage 1: floor classifier, federated averaging with uniform weights.
    std::vector<neural::TrainSet> class_sets;
    for (const auto& db : databases) {
        neural::TrainSet set;
        for (const auto& r : db.records) {
            std::vector<double> y(n_floors, 0.0);
            y[r.floor] = 1.0;
            set.push_back({model.scaler.apply(r.rss), std::move(y)});
        }
        class_sets.push_back(std::move(set));
    }
    std::vector<int> clf_layers;
    clf_layers.push_back(static_cast<int>(input_dim));
    clf_layers.insert(clf_layers.end(), cfg.classifier_hidden.begin(),
                      cfg.classifier_hidden.end());
    clf_layers.push_back(n_floors);
    const auto uniform =
        federation::compute_weights(databases, Strategy::Uniform);
    model.floor_classifier = federated_train(
        neural::init_model(clf_layers, neural::Head::Softmax,
                           derive_seed(cfg.seed, 0x636c66)),
        class_sets, uniform.weights, cfg.classifier_rounds,
        cfg.classifier_train, derive_seed(cfg.seed, 0x636c6672));

    // Stage 2: one regressor per floor over the clients holding data there.
    for (int f = 0; f < n_floors; ++f) {
        std::vector<FingerprintDatabase> floor_dbs;
        for (const auto& db : databases) {
            FingerprintDatabase fd;
            fd.client_id = db.client_id;
            for (const auto& r : db.records)
                if (r.floor == f) fd.records.push_back(r);
            if (!fd.records.empty()) {
                fd.refresh_hull();
                floor_dbs.push_back(std::move(fd));
            }
        }
        const auto wr =
            federation::compute_weights(floor_dbs, cfg.regressor_strategy);
        std::vector<neural::TrainSet> reg_sets;
        for (const auto& db : floor_dbs)
            reg_sets.push_back(scaled_regression_set(db.records, model.scaler));

        std::vector<int> reg_layers;
        reg_layers.push_back(static_cast<int>(input_dim));
        reg_layers.insert(reg_layers.end(), cfg.regressor_hidden.begin(),
                          cfg.regressor_hidden.end());
        reg_layers.push_back(2);
        model.per_floor_regressors[f] = federated_train(
            neural::init_model(reg_layers, neural::Head::Regression,
                               derive_seed(cfg.seed, 0x726567,
                                           static_cast<std::uint64_t>(f))),
            reg_sets, wr.weights, cfg.regressor_rounds, cfg.regressor_train,
            derive_seed(cfg.seed, 0x72656772, static_cast<std::uint64_t>(f)));
    }
    return model;
}

int classify_floor(const MultiFloorModel& model, const std::vector<double>& rss) {
    const auto scores =
        neural::forward(model.floor_classifier, model.scaler.apply(rss));
    int best = 0;
    for (std::size_t f = 1; f < scores.size(); ++f)
        if (scores[f] > scores[best]) best = static_cast<int>(f);  // tie -> lower
    return best;
}

Point2 predict_on_floor(const MultiFloorModel& model, int floor,
                        const std::vector<double>& rss) {
    const auto it = model.per_floor_regressors.find(floor);
    if (it == model.per_floor_regressors.end())
        throw std::runtime_error("no regressor for floor " +
                                 std::to_string(floor));
    const auto out = neural::forward(it->second, model.scaler.apply(rss));
    return {out[0], out[1]};
}

FloorPrediction predict(const MultiFloorModel& model,
                        const std::vector<double>& rss) {
    const int floor = classify_floor(model, rss);
    return {floor, predict_on_floor(model, floor, rss)};
}

ClassifierComparison compare_floor_classifiers(
    const std::vector<FingerprintDatabase>& databases,
    const std::vector<FingerprintRecord>& test_set, int n_floors, int rounds,
    const neural::TrainConfig& train, const std::vector<int>& hidden,
    std::uint64_t seed, const RssScaler& scaler) {
    if (databases.empty()) throw std::invalid_argument("no client databases");
    const std::size_t input_dim = databases.front().records.front().rss.size();

    std::vector<neural::TrainSet> client_sets;
    neural::TrainSet merged;
    for (const auto& db : databases) {
        neural::TrainSet set;
        for (const auto& r : db.records) {
            std::vector<double> y(n_floors, 0.0);
            y[r.floor] = 1.0;
            set.push_back({scaler.apply(r.rss), std::move(y)});
        }
        merged.insert(merged.end(), set.begin(), set.end());
        client_sets.push_back(std::move(set));
    }

    neural::TrainSet eval;
    for (const auto& r : test_set) {
        std::vector<double> y(n_floors, 0.0);
        y[r.floor] = 1.0;
        eval.push_back({scaler.apply(r.rss), std::move(y)});
    }
    auto accuracy = [&](const MlpModel& m) {
        std::size_t hits = 0;
        for (const auto& s : eval) {
            const auto scores = neural::forward(m, s.x);
            int best = 0;
            for (std::size_t f = 1; f < scores.size(); ++f)
                if (scores[f] > scores[best]) best = static_cast<int>(f);
            if (s.y[best] == 1.0) ++hits;
        }
        return static_cast<double>(hits) / eval.size();
    };

    std::vector<int> layers;
    layers.push_back(static_cast<int>(input_dim));
    layers.insert(layers.end(), hidden.begin(), hidden.end());
    layers.push_back(n_floors);
    MlpModel fed = neural::init_model(layers, neural::Head::Softmax,
                                      derive_seed(seed, 0x636d70));
    MlpModel cen = fed;  // same init so the comparison is like for like
    const std::vector<double> uniform(databases.size(),
                                      1.0 / databases.size());

    ClassifierComparison out;
    std::vector<MlpModel> locals(client_sets.size(), fed);
    for (int t = 1; t <= rounds; ++t) {
        const MlpModel snapshot = fed;
        parallel_for(static_cast<std::ptrdiff_t>(client_sets.size()),
                     [&](std::ptrdiff_t i) {
                         locals[i] = neural::train_local(
                             snapshot, client_sets[i], train,
                             derive_seed(seed, 0x666564,
                                         static_cast<std::uint64_t>(t),
                                         static_cast<std::uint64_t>(i)));
                     });
        fed = federation::aggregate(locals, uniform);
        cen = neural::train_local(
            cen, merged, train,
            derive_seed(seed, 0x63656e, static_cast<std::uint64_t>(t)));
        out.federated_accuracy.push_back(accuracy(fed));
        out.centralized_accuracy.push_back(accuracy(cen));
    }
    return out;
}

double classifier_accuracy(const MultiFloorModel& model,
                           const std::vector<FingerprintRecord>& test_set) {
    if (test_set.empty()) throw std::invalid_argument("empty test set");
    std::size_t hits = 0;
    for (const auto& r : test_set)
        if (classify_floor(model, r.rss) == r.floor) ++hits;
    return static_cast<double>(hits) / test_set.size();
}

double end_to_end_mae(const MultiFloorModel& model,
                      const std::vector<FingerprintRecord>& test_set) {
    if (test_set.empty()) throw std::invalid_argument("empty test set");
    double total = 0.0;
    for (const auto& r : test_set) {
        const auto pred = predict(model, r.rss);
        total += std::hypot(pred.position.x - r.position.x,
                            pred.position.y - r.position.y);
    }
    return total / test_set.size();
}

}  // namespace fedloc::multifloor
