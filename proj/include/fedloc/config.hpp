#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedloc/analysis.hpp"
#include "fedloc/federation.hpp"

namespace fedloc::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioSection {
    channel::AoiSpec aoi{50.0, 50.0};
    scenario::ScenarioConfig scenario;
    double grid_resolution = 5.0;
    std::vector<std::string> kinds = {"homogeneous", "heterogeneous"};
};

struct TrainingSection {
    int rounds = 300;  // T
    neural::TrainConfig train{1e-5, 40, 32, 0};
    std::vector<int> hidden_layers = {64};
    int eval_stride = 1;
    double init_gain = 5.0;  // first-layer init gain for raw dBm inputs
};

struct VerifySection {
    int n_users = 1800;
    int n_bins = 20;
    analysis::HullRelationConfig hull;
};

struct UjiSection {
    int building = 0;
    int n_clients = 20;
    int regression_floor = 1;
    double sentinel_fill = -105.0;
    double disc_fraction = 0.15;
    int classifier_rounds = 100;
    neural::TrainConfig classifier_train{1e-6, 20, 32, 0};
    std::vector<int> classifier_hidden = {1024};
    int regressor_rounds = 100;
    neural::TrainConfig regressor_train{1e-5, 40, 32, 0};
    std::vector<int> regressor_hidden = {128, 128};
};

struct ExperimentConfig {
    ScenarioSection scenario;
    TrainingSection training;
    std::vector<std::string> strategies = {"uniform", "hullarea"};
    bool centralized = true;
    VerifySection verify;
    UjiSection uji;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    std::vector<std::string> warnings;  // non-fatal validation findings
};

// Defaults encode the full-scale protocol; load_config overlays a JSON
// file on top of them. Unknown keys and out-of-contract values raise
// ConfigError with the offending field path.
ExperimentConfig default_config();
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

// Shrink rounds/counts for CI-speed runs.
void apply_desk_scale(ExperimentConfig& cfg);

// Every resolved parameter plus seeds and a code version tag; rerunning
// from the manifest reproduces the outputs byte for byte.
std::string manifest_json(const ExperimentConfig& cfg,
                          const std::string& command);

extern const char* kVersionTag;

}  // namespace fedloc::config
