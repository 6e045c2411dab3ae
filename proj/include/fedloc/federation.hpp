#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedloc/neural.hpp"
#include "fedloc/scenario.hpp"

namespace fedloc::federation {

using neural::MlpModel;
using scenario::FingerprintDatabase;
using scenario::FingerprintRecord;

enum class Strategy { Uniform, DataSize, ConvexHullArea };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct WeightResult {
    std::vector<double> weights;  // non-negative, sum to 1
    bool hull_fallback = false;   // all hull areas were 0
};

// Uniform -> 1/N; DataSize -> M_i / sum M_j; ConvexHullArea ->
// S_{C_i} / sum S_{C_j}, falling back to DataSize when every area is 0.
WeightResult compute_weights(const std::vector<FingerprintDatabase>& databases,
                             Strategy strategy);

// Parameter-wise weighted sum of structurally identical models.
MlpModel aggregate(const std::vector<MlpModel>& models,
                   const std::vector<double>& weights);

struct FederationConfig {
    int rounds = 300;  // T
    neural::TrainConfig train;
    Strategy strategy = Strategy::ConvexHullArea;
    std::uint64_t seed = 0;
    int eval_stride = 1;  // evaluate test MAE every k rounds
    std::vector<int> hidden_layers = {64};
    // First-layer init gain. The default suits raw dBm inputs, whose
    // small relative spread otherwise stalls training at small eta; set
    // to 1 when the inputs are already scaled to unit order.
    double init_gain = 5.0;
};

struct RoundMetrics {
    int round = 0;
    double test_mae = 0.0;
    double weighted_train_loss = 0.0;
    std::vector<double> weights;
};

struct FederatedResult {
    MlpModel model;
    std::vector<RoundMetrics> metrics;
    bool weight_fallback = false;
};

// The round loop: weights once up front, then T rounds of broadcast,
// parallel local training (E steps each) and weighted aggregation.
// Deterministic in cfg.seed regardless of execution order.
FederatedResult run_federated(const std::vector<FingerprintDatabase>& databases,
                              const std::vector<FingerprintRecord>& test_set,
                              const FederationConfig& cfg);

// Centralized baseline: one model on the union of all records.
FederatedResult run_centralized(const std::vector<FingerprintDatabase>& databases,
                                const std::vector<FingerprintRecord>& test_set,
                                int total_steps,
                                const neural::TrainConfig& train,
                                std::uint64_t seed,
                                const std::vector<int>& hidden_layers = {64},
                                int eval_stride_steps = 40,
                                double init_gain = 5.0);

double evaluate_mae(const MlpModel& model,
                    const std::vector<FingerprintRecord>& test_set);

// CSV: round,strategy,test_mae,weighted_train_loss,p_0..p_{N-1}
void write_metrics_csv(std::ostream& out, const std::string& strategy_label,
                       const std::vector<RoundMetrics>& metrics);

}  // namespace fedloc::federation
