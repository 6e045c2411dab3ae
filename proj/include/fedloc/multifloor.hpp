#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedloc/federation.hpp"

namespace fedloc::multifloor {

using federation::Strategy;
using geom::Point2;
using neural::MlpModel;
using scenario::FingerprintDatabase;
using scenario::FingerprintRecord;

constexpr int kUjiWapCount = 520;
constexpr double kUjiSentinel = 100.0;  // "AP not detected" in the raw data

struct UjiRecord {
    std::vector<double> rss;  // 520 readings, sentinel already replaced
    double longitude = 0.0;   // meters, shifted to a local origin
    double latitude = 0.0;
    int floor = 0;
    int building = 0;
};

struct UjiLoadOptions {
    int building = 0;
    double sentinel_fill = -105.0;  // dBm substituted for "not detected"
    bool shift_origin = true;
};

// Parses the published trainingData.csv/validationData.csv layout and
// filters to one building. Errors carry the offending row index.
std::vector<UjiRecord> load_ujiindoorloc(const std::string& path,
                                         const UjiLoadOptions& opts = {});

void write_uji_records(std::ostream& out, const std::vector<UjiRecord>& records);
std::vector<UjiRecord> read_uji_records(std::istream& in);

std::vector<FingerprintRecord> to_fingerprints(const std::vector<UjiRecord>& records);

enum class PartitionMode { Homogeneous, Heterogeneous };

// Disjoint client partition covering all records. Heterogeneous mode
// restricts half the clients to a random disc (limited cover area).
std::vector<FingerprintDatabase> partition_clients(
    const std::vector<FingerprintRecord>& records, int n_clients,
    PartitionMode mode, std::uint64_t seed, double disc_fraction = 0.15);

/// Affine input transform applied before both network stages; raw dBm
/// inputs at the paper's learning rates are numerically brittle at 520
/// dimensions.
struct RssScaler {
    double offset = 105.0;
    double scale = 1.0 / 105.0;
    std::vector<double> apply(const std::vector<double>& rss) const;
};

struct MultiFloorModel {
    MlpModel floor_classifier;               // softmax head
    std::map<int, MlpModel> per_floor_regressors;
    RssScaler scaler;
    int n_floors = 0;
};

struct MultiFloorConfig {
    int classifier_rounds = 100;
    neural::TrainConfig classifier_train{1e-6, 20, 32, 0};
    std::vector<int> classifier_hidden = {1024};
    int regressor_rounds = 100;
    neural::TrainConfig regressor_train{1e-5, 40, 32, 0};
    std::vector<int> regressor_hidden = {128, 128};
    Strategy regressor_strategy = Strategy::ConvexHullArea;
    std::uint64_t seed = 0;
};

// Stage 1: floor classifier by federated averaging (uniform weights).
// Stage 2: one federated regressor per floor under the configured
// aggregation strategy.
MultiFloorModel train_multifloor(const std::vector<FingerprintDatabase>& databases,
                                 const MultiFloorConfig& cfg);

struct FloorPrediction {
    int floor = 0;
    Point2 position;
};

// Classifier argmax (ties toward the lower floor index), then the
// matching per-floor regressor.
FloorPrediction predict(const MultiFloorModel& model,
                        const std::vector<double>& rss);

int classify_floor(const MultiFloorModel& model, const std::vector<double>& rss);
Point2 predict_on_floor(const MultiFloorModel& model, int floor,
                        const std::vector<double>& rss);

// Per-round test accuracy of a federated floor classifier (uniform
// weights) against a centralized one trained at equal total steps.
struct ClassifierComparison {
    std::vector<double> federated_accuracy;
    std::vector<double> centralized_accuracy;
};
ClassifierComparison compare_floor_classifiers(
    const std::vector<FingerprintDatabase>& databases,
    const std::vector<FingerprintRecord>& test_set, int n_floors, int rounds,
    const neural::TrainConfig& train, const std::vector<int>& hidden,
    std::uint64_t seed, const RssScaler& scaler = {});

double classifier_accuracy(const MultiFloorModel& model,
                           const std::vector<FingerprintRecord>& test_set);
double end_to_end_mae(const MultiFloorModel& model,
                      const std::vector<FingerprintRecord>& test_set);

}  // namespace fedloc::multifloor
