#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fedloc/rng.hpp"
#include "fedloc/scenario.hpp"

namespace fedloc::neural {

enum class Head { Regression, Softmax };

struct TrainSample {
    std::vector<double> x;
    std::vector<double> y;  // target position, or one-hot class vector
};
using TrainSet = std::vector<TrainSample>;

/// Dense feed-forward net. weights[l] maps layer l to l+1 and is stored
/// row-major (layer_sizes[l+1] rows of layer_sizes[l]). Hidden layers
/// use ReLU; the output is identity (Regression) or softmax (Softmax).
struct MlpModel {
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    Head head = Head::Regression;

    std::size_t n_layers() const { return weights.size(); }
    bool same_shape(const MlpModel& other) const;
};

// Glorot-uniform init, deterministic in seed. first_layer_gain scales
// the input layer's weights; a gain > 1 compensates feature scales that
// would otherwise make early training crawl at very small learning rates.
MlpModel init_model(const std::vector<int>& layer_sizes, Head head,
                    std::uint64_t seed, double first_layer_gain = 1.0);

std::vector<double> forward(const MlpModel& model,
                            std::span<const double> x);

// Mean per-sample loss: Euclidean norm of the prediction error for the
// regression head, cross-entropy for the softmax head.
double loss(const MlpModel& model, const TrainSet& batch);
double loss(const MlpModel& model, const TrainSet& data,
            std::span<const std::size_t> indices);

struct Gradient {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

Gradient gradient(const MlpModel& model, const TrainSet& batch);
Gradient gradient(const MlpModel& model, const TrainSet& data,
                  std::span<const std::size_t> indices);

void sgd_step(MlpModel& model, const Gradient& grad, double eta);

struct TrainConfig {
    double eta = 1e-5;
    int local_steps = 40;  // E, counted in mini-batch steps
    int batch_size = 32;
    std::uint64_t seed = 0;
};

// E SGD steps on mini-batches drawn without replacement (reshuffled
// each pass). Functional: the input model is not modified.
MlpModel train_local(const MlpModel& model, const TrainSet& data,
                     const TrainConfig& cfg, std::uint64_t seed);

// Adapters from fingerprint records.
TrainSet regression_set(const std::vector<scenario::FingerprintRecord>& records);
TrainSet classification_set(const std::vector<scenario::FingerprintRecord>& records,
                            int n_classes);

// Versioned textual checkpoint.
void save_model(std::ostream& out, const MlpModel& model);
MlpModel load_model(std::istream& in);

}  // namespace fedloc::neural
