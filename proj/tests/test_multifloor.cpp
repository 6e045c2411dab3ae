#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fedloc/multifloor.hpp"

using namespace fedloc;
using namespace fedloc::multifloor;

namespace {

// writes a file in the published UJIIndoorLoc layout: 520 WAP columns,
// then the location/metadata columns
struct UjiFixture {
    std::string path = "uji_fixture.csv";

    explicit UjiFixture(const std::vector<UjiRecord>& rows,
                        bool drop_one_wap = false) {
        std::ofstream out(path);
        for (int w = 1; w <= kUjiWapCount; ++w) {
            if (drop_one_wap && w == 5) {
                out << "NOTAWAP,";
                continue;
            }
            char buf[8];
            std::snprintf(buf, sizeof buf, "WAP%03d", w);
            out << buf << ',';
        }
        out << "LONGITUDE,LATITUDE,FLOOR,BUILDINGID,SPACEID,USERID\n";
        out.precision(17);
        for (const auto& r : rows) {
            for (double v : r.rss) out << v << ',';
            out << r.longitude << ',' << r.latitude << ',' << r.floor << ','
                << r.building << ",101,7\n";
        }
    }
    ~UjiFixture() { std::remove(path.c_str()); }
};

UjiRecord raw_record(double lon, double lat, int floor, int building,
                     double first_rss) {
    UjiRecord r;
    r.rss.assign(kUjiWapCount, 100.0);  // raw sentinel everywhere
    r.rss[0] = first_rss;
    r.longitude = lon;
    r.latitude = lat;
    r.floor = floor;
    r.building = building;
    return r;
}

// records tagged through rss[0] so partitions can be traced back
std::vector<scenario::FingerprintRecord> tagged_records(int n, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<scenario::FingerprintRecord> out;
    for (int i = 0; i < n; ++i)
        out.push_back({{static_cast<double>(i), -60.0}, {u(rng), u(rng)}, 0});
    return out;
}

// four floors, each with an unmistakable RSS signature and its own
// anchor position
scenario::FingerprintRecord toy_record(int floor, double jitter) {
    std::vector<double> rss(6, -105.0);
    rss[floor] = -20.0 + jitter;
    return {std::move(rss),
            {10.0 * floor + 5.0 + jitter, 30.0 - 4.0 * floor},
            floor};
}

std::vector<FingerprintDatabase> toy_clients(int n_floors) {
    std::vector<FingerprintDatabase> dbs(2);
    for (int c = 0; c < 2; ++c) {
        dbs[c].client_id = c;
        for (int f = 0; f < n_floors; ++f)
            for (int k = 0; k < 12; ++k)
                dbs[c].records.push_back(toy_record(f, 0.05 * k + 0.3 * c));
        dbs[c].refresh_hull();
    }
    return dbs;
}

}  // namespace

TEST_CASE("loader maps sentinels, filters buildings and shifts the origin") {
    const std::vector<UjiRecord> rows = {
        raw_record(-7500.0, 4864900.0, 2, 0, -45.0),
        raw_record(-7450.0, 4864920.0, 0, 0, -80.0),
        raw_record(-7400.0, 4865000.0, 1, 1, -55.0),  // other building
    };
    UjiFixture fx(rows);
    const auto recs = load_ujiindoorloc(fx.path);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].rss[0] == -45.0);
    CHECK(recs[0].rss[1] == -105.0);  // sentinel replaced
    CHECK(recs[0].floor == 2);
    CHECK(recs[0].longitude == 0.0);  // min over kept rows
    CHECK(recs[0].latitude == 0.0);
    CHECK(recs[1].longitude == 50.0);
    CHECK(recs[1].latitude == 20.0);

    UjiLoadOptions opts;
    opts.building = 1;
    opts.sentinel_fill = -110.0;
    opts.shift_origin = false;
    const auto other = load_ujiindoorloc(fx.path, opts);
    REQUIRE(other.size() == 1);
    CHECK(other[0].rss[1] == -110.0);
    CHECK(other[0].longitude == -7400.0);
}

TEST_CASE("loader error paths") {
    CHECK_THROWS_WITH(load_ujiindoorloc("no_such_file.csv"),
                      doctest::Contains("cannot open"));

    UjiFixture bad_header({raw_record(0, 0, 0, 0, -40.0)}, true);
    CHECK_THROWS_WITH(load_ujiindoorloc(bad_header.path),
                      doctest::Contains("malformed header"));

    auto rec = raw_record(0, 0, 0, 0, -40.0);
    UjiFixture fx({rec});
    {
        // corrupt one numeric cell in the data row
        std::ifstream in(fx.path);
        std::string header, row;
        std::getline(in, header);
        std::getline(in, row);
        in.close();
        row.replace(row.find("-40"), 3, "abc");
        std::ofstream out(fx.path);
        out << header << "\n" << row << "\n";
    }
    CHECK_THROWS_WITH(load_ujiindoorloc(fx.path),
                      doctest::Contains("row 2"));
}

TEST_CASE("record serialization round trip") {
    std::vector<UjiRecord> rows = {raw_record(12.5, 30.25, 3, 0, -67.5),
                                   raw_record(0.0, 1.0, 0, 0, -90.125)};
    for (auto& r : rows)
        for (double& v : r.rss)
            if (v == kUjiSentinel) v = -105.0;
    std::stringstream ss;
    write_uji_records(ss, rows);
    const auto back = read_uji_records(ss);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].rss == rows[i].rss);
        CHECK(back[i].longitude == rows[i].longitude);
        CHECK(back[i].latitude == rows[i].latitude);
        CHECK(back[i].floor == rows[i].floor);
    }
    std::stringstream bad("header\n1.0,2.0,0,0,-40\n");
    CHECK_THROWS(read_uji_records(bad));
}

TEST_CASE("fingerprint conversion keeps position and floor") {
    auto r = raw_record(3.0, 4.0, 2, 0, -50.0);
    const auto fps = to_fingerprints({r});
    REQUIRE(fps.size() == 1);
    CHECK(fps[0].position.x == 3.0);
    CHECK(fps[0].position.y == 4.0);
    CHECK(fps[0].floor == 2);
    CHECK(fps[0].rss.size() == static_cast<std::size_t>(kUjiWapCount));
}

TEST_CASE("homogeneous partition is balanced, disjoint and complete") {
    Rng rng = make_rng(3);
    const auto records = tagged_records(2000, rng);
    const auto dbs =
        partition_clients(records, 20, PartitionMode::Homogeneous, 5);
    REQUIRE(dbs.size() == 20);
    std::set<int> seen;
    for (const auto& db : dbs) {
        CHECK(db.records.size() == 100);
        for (const auto& r : db.records)
            CHECK(seen.insert(static_cast<int>(r.rss[0])).second);
    }
    CHECK(seen.size() == 2000);

    const auto again =
        partition_clients(records, 20, PartitionMode::Homogeneous, 5);
    for (std::size_t i = 0; i < dbs.size(); ++i)
        for (std::size_t k = 0; k < dbs[i].records.size(); ++k)
            CHECK(dbs[i].records[k].rss[0] == again[i].records[k].rss[0]);

    CHECK_THROWS(partition_clients(records, 1, PartitionMode::Homogeneous, 5));
}

TEST_CASE("heterogeneous partition restricts half the clients") {
    Rng rng = make_rng(4);
    const auto records = tagged_records(2000, rng);
    const auto dbs =
        partition_clients(records, 10, PartitionMode::Heterogeneous, 7);
    REQUIRE(dbs.size() == 10);
    std::set<int> seen;
    std::size_t total = 0;
    for (const auto& db : dbs) {
        total += db.records.size();
        for (const auto& r : db.records)
            CHECK(seen.insert(static_cast<int>(r.rss[0])).second);
    }
    CHECK(total == 2000);
    CHECK(seen.size() == 2000);

    double restricted = 0.0, open = 0.0;
    for (int i = 0; i < 5; ++i) restricted += dbs[i].hull.area;
    for (int i = 5; i < 10; ++i) open += dbs[i].hull.area;
    CHECK(restricted < open);
}

TEST_CASE("input scaler normalizes the dBm range") {
    const RssScaler s;
    const auto out = s.apply({-105.0, 0.0, -52.5});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 1.0);
    CHECK(out[2] == doctest::Approx(0.5));
}

TEST_CASE("training on separable floors recovers the layout") {
    const auto dbs = toy_clients(4);
    MultiFloorConfig cfg;
    cfg.classifier_rounds = 40;
    cfg.classifier_train = {0.5, 4, 16, 0};
    cfg.classifier_hidden = {16};
    cfg.regressor_rounds = 60;
    cfg.regressor_train = {0.05, 6, 16, 0};
    cfg.regressor_hidden = {16};
    cfg.seed = 2;
    const auto model = train_multifloor(dbs, cfg);
    CHECK(model.n_floors == 4);
    CHECK(model.per_floor_regressors.size() == 4);

    std::vector<scenario::FingerprintRecord> test;
    for (int f = 0; f < 4; ++f) test.push_back(toy_record(f, 0.21));
    CHECK(classifier_accuracy(model, test) == 1.0);
    CHECK(end_to_end_mae(model, test) < 3.0);
    for (const auto& r : test) {
        const auto pred = predict(model, r.rss);
        CHECK(pred.floor == r.floor);
    }
}

TEST_CASE("a floor present in no client is rejected") {
    auto dbs = toy_clients(2);
    for (auto& db : dbs)
        for (auto& r : db.records)
            if (r.floor == 1) r.floor = 2;  // leave floor 1 empty
    MultiFloorConfig cfg;
    cfg.classifier_rounds = 1;
    cfg.regressor_rounds = 1;
    CHECK_THROWS_WITH(train_multifloor(dbs, cfg),
                      doctest::Contains("floor 1"));
}

TEST_CASE("prediction dispatches on the classifier argmax") {
    // hand-built model: classifier passes the scaled input straight
    // through, so the strongest AP decides the floor
    MultiFloorModel model;
    model.n_floors = 3;
    model.floor_classifier.layer_sizes = {3, 3};
    model.floor_classifier.head = neural::Head::Softmax;
    model.floor_classifier.weights = {
        {100, 0, 0, 0, 100, 0, 0, 0, 100}};
    model.floor_classifier.biases = {{0, 0, 0}};
    for (int f = 0; f < 3; ++f) {
        neural::MlpModel reg;
        reg.layer_sizes = {3, 2};
        reg.head = neural::Head::Regression;
        reg.weights = {{0, 0, 0, 0, 0, 0}};
        reg.biases = {{1.0 * f, 2.0 * f}};
        model.per_floor_regressors[f] = reg;
    }

    CHECK(classify_floor(model, {-50.0, -90.0, -90.0}) == 0);
    CHECK(classify_floor(model, {-90.0, -90.0, -50.0}) == 2);
    // exact tie between floors 1 and 2 resolves to the lower index
    CHECK(classify_floor(model, {-90.0, -50.0, -50.0}) == 1);
    CHECK(classify_floor(model, {-50.0, -50.0, -50.0}) == 0);

    const auto pred = predict(model, {-90.0, -50.0, -90.0});
    CHECK(pred.floor == 1);
    CHECK(pred.position.x == 1.0);
    CHECK(pred.position.y == 2.0);

    CHECK_THROWS_WITH(predict_on_floor(model, 9, {-50.0, -50.0, -50.0}),
                      doctest::Contains("floor 9"));
}

TEST_CASE("classifier comparison tracks both training modes per round") {
    const auto dbs = toy_clients(3);
    std::vector<scenario::FingerprintRecord> test;
    for (int f = 0; f < 3; ++f)
        for (int k = 0; k < 4; ++k) test.push_back(toy_record(f, 0.11 * k));
    neural::TrainConfig train{0.5, 4, 16, 0};
    const auto cmp =
        compare_floor_classifiers(dbs, test, 3, 20, train, {16}, 3);
    REQUIRE(cmp.federated_accuracy.size() == 20);
    REQUIRE(cmp.centralized_accuracy.size() == 20);
    for (double a : cmp.federated_accuracy) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
    // separable toy: both modes should end at full accuracy
    CHECK(cmp.federated_accuracy.back() == 1.0);
    CHECK(cmp.centralized_accuracy.back() == 1.0);
}
