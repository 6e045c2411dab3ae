#include "fedloc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "fedloc/parallel.hpp"

namespace fedloc::analysis {

double h_function(int x, double eta, double beta, double delta) {
    if (x < 0) throw std::invalid_argument("x must be non-negative");
    if (eta <= 0.0 || beta <= 0.0 || delta < 0.0)
        throw std::invalid_argument("invalid h-function parameters");
    if (x <= 1) return 0.0;  // exact zeros; avoids cancellation noise
    return delta / beta * (std::pow(eta * beta + 1.0, x) - 1.0) -
           eta * delta * x;
}

double convergence_bound(const BoundParams& p) {
    if (p.rho <= 0.0 || p.beta <= 0.0 || p.eta <= 0.0 || p.delta < 0.0 ||
        p.omega <= 0.0 || p.rounds < 1 || p.local_steps < 1)
        throw std::invalid_argument("invalid bound parameters");
    if (p.eta >= 1.0 / p.beta)
        throw std::domain_error("bound inapplicable: eta >= 1/beta");
    const double phi = p.omega * (1.0 - p.beta * p.eta / 2.0);
    const double hE = h_function(p.local_steps, p.eta, p.beta, p.delta);
    const double a = 1.0 / (2.0 * p.eta * phi * p.rounds);
    return a + std::sqrt(a * a + p.rho * hE / (p.eta * phi * p.local_steps)) +
           p.rho * hE;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) return 0.0;
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

CorrelationReport binned_correlation(const std::vector<double>& xs,
                                     const std::vector<double>& ys,
                                     int n_bins) {
    CorrelationReport rep;
    rep.n_points = xs.size();
    if (n_bins < 2) {
        rep.verdict = "insufficient bins";
        return rep;
    }
    const double lo = *std::min_element(xs.begin(), xs.end());
    const double hi = *std::max_element(xs.begin(), xs.end());
    if (!(hi > lo)) {
        rep.verdict = "flat";
        return rep;
    }
    rep.bin_edges.resize(n_bins + 1);
    for (int b = 0; b <= n_bins; ++b)
        rep.bin_edges[b] = lo + (hi - lo) * b / n_bins;
    rep.bin_means.assign(n_bins, std::numeric_limits<double>::quiet_NaN());
    rep.bin_counts.assign(n_bins, 0);
    std::vector<double> sums(n_bins, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        int b = static_cast<int>((xs[i] - lo) / (hi - lo) * n_bins);
        b = std::min(b, n_bins - 1);
        sums[b] += ys[i];
        ++rep.bin_counts[b];
    }
    std::vector<double> centers, means;
    for (int b = 0; b < n_bins; ++b) {
        if (rep.bin_counts[b] == 0) continue;
        rep.bin_means[b] = sums[b] / rep.bin_counts[b];
        centers.push_back(0.5 * (rep.bin_edges[b] + rep.bin_edges[b + 1]));
        means.push_back(rep.bin_means[b]);
    }
    if (centers.size() < 2) {
        rep.verdict = "insufficient bins";
        return rep;
    }
    rep.correlation = pearson(centers, means);
    if (rep.correlation > 0.0)
        rep.verdict = "positive";
    else if (rep.correlation < 0.0)
        rep.verdict = "negative";
    else
        rep.verdict = "flat";
    return rep;
}

void write_report_csv(std::ostream& out, const CorrelationReport& rep) {
    out.precision(17);
    out << "bin_lo,bin_hi,count,mean\n";
    for (std::size_t b = 0; b + 1 < rep.bin_edges.size(); ++b) {
        out << rep.bin_edges[b] << ',' << rep.bin_edges[b + 1] << ','
            << rep.bin_counts[b] << ',' << rep.bin_means[b] << "\n";
    }
    out << "# n_points=" << rep.n_points << " correlation=" << rep.correlation
        << " verdict=" << rep.verdict << "\n";
}

double coverage_gap(const FingerprintDatabase& db, const AoiSpec& aoi,
                    int n_mc, std::uint64_t seed) {
    if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
    const std::vector<geom::Point2> pos = db.positions();
    constexpr int kChunk = 4096;
    const int n_chunks = (n_mc + kChunk - 1) / kChunk;
    std::vector<double> partial(n_chunks, 0.0);
    parallel_for(n_chunks, [&](std::ptrdiff_t c) {
        Rng rng = make_rng(seed, 0x636f76, static_cast<std::uint64_t>(c));
        std::uniform_real_distribution<double> ux(0.0, aoi.width);
        std::uniform_real_distribution<double> uy(0.0, aoi.height);
        const int count = std::min<int>(kChunk, n_mc - static_cast<int>(c) * kChunk);
        double s = 0.0;
        for (int k = 0; k < count; ++k)
            s += geom::min_distance({ux(rng), uy(rng)}, pos);
        partial[c] = s;
    });
    return std::accumulate(partial.begin(), partial.end(), 0.0) / n_mc;
}

CorrelationReport verify_min_distance_relation(
    const MlpModel& model, const std::vector<geom::Point2>& training_positions,
    const ChannelParams& params, const AoiSpec& aoi, int n_users, int n_bins,
    int n_avg, std::uint64_t seed) {
    if (n_users < 1) throw std::invalid_argument("n_users must be >= 1");
    std::vector<double> dists(n_users), errors(n_users);
    parallel_for(n_users, [&](std::ptrdiff_t i) {
        Rng rng = make_rng(seed, 0x757372, static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> ux(0.0, aoi.width);
        std::uniform_real_distribution<double> uy(0.0, aoi.height);
        const geom::Point2 p{ux(rng), uy(rng)};
        const auto rss = channel::measure(p, params, n_avg, rng);
        const auto pred = neural::forward(model, rss);
        dists[i] = geom::min_distance(p, training_positions);
        errors[i] = std::hypot(pred[0] - p.x, pred[1] - p.y);
    });
    return binned_correlation(dists, errors, n_bins);
}

CorrelationReport verify_hull_area_relation(const HullRelationConfig& cfg,
                                            const AoiSpec& aoi,
                                            const ChannelParams& params,
                                            std::uint64_t seed) {
    if (cfg.n_dbs < 10) throw std::invalid_argument("n_dbs must be >= 10");

    // one shared test set for all databases
    std::vector<FingerprintRecord> test_set;
    {
        Rng rng = make_rng(seed, 0x686c7473);
        std::uniform_real_distribution<double> ux(0.0, aoi.width);
        std::uniform_real_distribution<double> uy(0.0, aoi.height);
        for (int k = 0; k < cfg.test_set_size; ++k) {
            const geom::Point2 p{ux(rng), uy(rng)};
            test_set.push_back({channel::measure(p, params, cfg.n_avg, rng), p});
        }
    }

    std::vector<double> areas(cfg.n_dbs), maes(cfg.n_dbs);
    parallel_for(cfg.n_dbs, [&](std::ptrdiff_t i) {
        Rng rng = make_rng(seed, 0x686c6462, static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> ux(0.0, aoi.width);
        std::uniform_real_distribution<double> uy(0.0, aoi.height);
        std::uniform_real_distribution<double> ulogv(std::log(cfg.velocity_min),
                                                     std::log(cfg.velocity_max));
        scenario::ClientMotionConfig motion;
        motion.start = {ux(rng), uy(rng)};
        motion.velocity = std::exp(ulogv(rng));
        motion.sample_interval = cfg.sample_interval;
        motion.n_samples = cfg.n_samples;
        motion.n_avg = cfg.n_avg;
        const auto db = scenario::build_database(static_cast<int>(i), motion,
                                                 params, aoi, rng);
        areas[i] = db.hull.area;

        std::vector<int> layers;
        layers.push_back(static_cast<int>(params.n_aps()));
        layers.insert(layers.end(), cfg.hidden_layers.begin(),
                      cfg.hidden_layers.end());
        layers.push_back(2);
        const std::uint64_t mseed =
            derive_seed(seed, 0x686c6d64, static_cast<std::uint64_t>(i));
        auto model = neural::init_model(layers, neural::Head::Regression, mseed);
        neural::TrainConfig tc;
        tc.eta = cfg.eta;
        tc.local_steps = cfg.train_steps;
        tc.batch_size = cfg.batch_size;
        model = neural::train_local(model,
                                    neural::regression_set(db.records), tc,
                                    derive_seed(mseed, 1));
        maes[i] = evaluate_mae(model, test_set);
    });
    return binned_correlation(areas, maes, cfg.n_bins);
}

double delta_from_gradients(const std::vector<FingerprintDatabase>& databases,
                            const MlpModel& model,
                            const std::vector<double>& weights) {
    if (databases.size() != weights.size())
        throw std::invalid_argument("databases/weights size mismatch");
    const std::size_t n = databases.size();
    std::vector<neural::Gradient> grads(n);
    for (std::size_t i = 0; i < n; ++i)
        grads[i] = neural::gradient(model,
                                    neural::regression_set(databases[i].records));

    neural::Gradient global = grads[0];
    for (std::size_t l = 0; l < global.weights.size(); ++l) {
        for (double& v : global.weights[l]) v = 0.0;
        for (double& v : global.biases[l]) v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < global.weights[l].size(); ++k)
                global.weights[l][k] += weights[i] * grads[i].weights[l][k];
            for (std::size_t k = 0; k < global.biases[l].size(); ++k)
                global.biases[l][k] += weights[i] * grads[i].biases[l][k];
        }
    }

    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t l = 0; l < global.weights.size(); ++l) {
            for (std::size_t k = 0; k < global.weights[l].size(); ++k) {
                const double d = grads[i].weights[l][k] - global.weights[l][k];
                sq += d * d;
            }
            for (std::size_t k = 0; k < global.biases[l].size(); ++k) {
                const double d = grads[i].biases[l][k] - global.biases[l][k];
                sq += d * d;
            }
        }
        delta += weights[i] * std::sqrt(sq);
    }
    return delta;
}

}  // namespace fedloc::analysis
