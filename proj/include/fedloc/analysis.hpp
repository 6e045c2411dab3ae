#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedloc/federation.hpp"

namespace fedloc::analysis {

using channel::AoiSpec;
using channel::ChannelParams;
using federation::evaluate_mae;
using neural::MlpModel;
using scenario::FingerprintDatabase;
using scenario::FingerprintRecord;

struct BoundParams {
    double rho = 1.0;    // Lipschitz constant of the local losses
    double beta = 1.0;   // smoothness constant
    double eta = 0.01;   // learning rate, must be < 1/beta
    double delta = 0.0;  // hull-weighted gradient-divergence bound
    double omega = 1.0;  // min over rounds of 1/||w^(t-1) - w*||
    int rounds = 100;    // T
    int local_steps = 40;  // E
};

// h(x) = (delta/beta)((eta*beta + 1)^x - 1) - eta*delta*x
double h_function(int x, double eta, double beta, double delta);

// Right-hand side of the convergence bound; throws "bound inapplicable"
// when eta >= 1/beta.
double convergence_bound(const BoundParams& p);

struct CorrelationReport {
    std::size_t n_points = 0;
    std::vector<double> bin_edges;
    std::vector<double> bin_means;   // NaN for empty bins
    std::vector<std::size_t> bin_counts;
    double correlation = 0.0;  // Pearson over (bin center, bin mean)
    std::string verdict;       // positive | negative | flat | insufficient bins
};

void write_report_csv(std::ostream& out, const CorrelationReport& report);

// Monte-Carlo estimate of the mean min-distance from a uniform AoI
// point to the database's sampling positions.
double coverage_gap(const FingerprintDatabase& db, const AoiSpec& aoi,
                    int n_mc, std::uint64_t seed);

// Per random user point: (min distance to the training positions,
// prediction error of the model); binned means + their correlation.
CorrelationReport verify_min_distance_relation(
    const MlpModel& model, const std::vector<geom::Point2>& training_positions,
    const ChannelParams& params, const AoiSpec& aoi, int n_users, int n_bins,
    int n_avg, std::uint64_t seed);

struct HullRelationConfig {
    int n_dbs = 100;
    int n_samples = 200;
    int n_avg = 10;
    double sample_interval = 3.0;
    double velocity_min = 0.02;  // log-uniform velocity spread drives
    double velocity_max = 1.0;   // the hull-area spread
    int train_steps = 3000;
    double eta = 1e-4;
    int batch_size = 32;
    std::vector<int> hidden_layers = {64};
    int n_bins = 20;
    int test_set_size = 400;
};

// Per random database: train briefly, record (hull area, test MAE);
// negative correlation expected.
CorrelationReport verify_hull_area_relation(const HullRelationConfig& cfg,
                                            const AoiSpec& aoi,
                                            const ChannelParams& params,
                                            std::uint64_t seed);

// Empirical divergence proxy at one w: delta_i = ||grad L_i - grad L||
// with the hull-area weights; returns sum_i p_i delta_i.
double delta_from_gradients(const std::vector<FingerprintDatabase>& databases,
                            const MlpModel& model,
                            const std::vector<double>& weights);

// Pearson correlation; 0 when either side has zero variance.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// Bin ys by xs into n_bins equal-width bins over the observed x range
// and correlate bin centers with bin means.
CorrelationReport binned_correlation(const std::vector<double>& xs,
                                     const std::vector<double>& ys,
                                     int n_bins);

}  // namespace fedloc::analysis
