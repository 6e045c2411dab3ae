#include "fedloc/federation.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "fedloc/parallel.hpp"

namespace fedloc::federation {

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Uniform: return "uniform";
        case Strategy::DataSize: return "datasize";
        case Strategy::ConvexHullArea: return "hullarea";
    }
    throw std::logic_error("unreachable");
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "uniform") return Strategy::Uniform;
    if (name == "datasize") return Strategy::DataSize;
    if (name == "hullarea") return Strategy::ConvexHullArea;
    throw std::invalid_argument("unknown strategy: " + name);
}

WeightResult compute_weights(const std::vector<FingerprintDatabase>& databases,
                             Strategy strategy) {
    if (databases.empty()) throw std::invalid_argument("no databases");
    const std::size_t n = databases.size();
    WeightResult res;
    res.weights.assign(n, 0.0);

    switch (strategy) {
        case Strategy::Uniform: {
            for (double& w : res.weights) w = 1.0 / n;
            return res;
        }
        case Strategy::DataSize: {
            double total = 0.0;
            for (const auto& db : databases) total += db.records.size();
            for (std::size_t i = 0; i < n; ++i)
                res.weights[i] = databases[i].records.size() / total;
            return res;
        }
        case Strategy::ConvexHullArea: {
            double total = 0.0;
            for (const auto& db : databases) total += db.hull.area;
            if (total == 0.0) {
                res = compute_weights(databases, Strategy::DataSize);
                res.hull_fallback = true;
                return res;
            }
            for (std::size_t i = 0; i < n; ++i)
                res.weights[i] = databases[i].hull.area / total;
            return res;
        }
    }
    throw std::logic_error("unreachable");
}

MlpModel aggregate(const std::vector<MlpModel>& models,
                   const std::vector<double>& weights) {
    if (models.empty() || models.size() != weights.size())
        throw std::invalid_argument("models/weights size mismatch");
    for (const auto& m : models)
        if (!m.same_shape(models.front()))
            throw std::invalid_argument("model shape mismatch");

    MlpModel out = models.front();
    for (std::size_t l = 0; l < out.n_layers(); ++l) {
        for (double& v : out.weights[l]) v = 0.0;
        for (double& v : out.biases[l]) v = 0.0;
        for (std::size_t i = 0; i < models.size(); ++i) {
            const double p = weights[i];
            for (std::size_t k = 0; k < out.weights[l].size(); ++k)
                out.weights[l][k] += p * models[i].weights[l][k];
            for (std::size_t k = 0; k < out.biases[l].size(); ++k)
                out.biases[l][k] += p * models[i].biases[l][k];
        }
    }
    return out;
}

double evaluate_mae(const MlpModel& model,
                    const std::vector<FingerprintRecord>& test_set) {
    if (test_set.empty()) throw std::invalid_argument("empty test set");
    std::vector<double> errs(test_set.size());
    parallel_for(static_cast<std::ptrdiff_t>(test_set.size()),
                 [&](std::ptrdiff_t i) {
                     const auto& r = test_set[i];
                     const auto pred = neural::forward(model, r.rss);
                     errs[i] = std::hypot(pred[0] - r.position.x,
                                          pred[1] - r.position.y);
                 });
    return std::accumulate(errs.begin(), errs.end(), 0.0) / errs.size();
}

static std::vector<int> full_layers(std::size_t input,
                                    const std::vector<int>& hidden,
                                    int output) {
    std::vector<int> sizes;
    sizes.push_back(static_cast<int>(input));
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(output);
    return sizes;
}

FederatedResult run_federated(const std::vector<FingerprintDatabase>& databases,
                              const std::vector<FingerprintRecord>& test_set,
                              const FederationConfig& cfg) {
    if (databases.empty()) throw std::invalid_argument("no databases");
    const std::size_t n_aps = databases.front().records.front().rss.size();
    for (const auto& db : databases) {
        if (db.records.empty())
            throw std::invalid_argument("client database is empty");
        if (db.records.front().rss.size() != n_aps)
            throw std::invalid_argument("inconsistent RSS dimension");
    }

    // Preparation: hulls are cached in the databases; weights fixed for
    // the whole run.
    const WeightResult wr = compute_weights(databases, cfg.strategy);

    const std::size_t n = databases.size();
    std::vector<neural::TrainSet> train_sets(n);
    for (std::size_t i = 0; i < n; ++i)
        train_sets[i] = neural::regression_set(databases[i].records);

    FederatedResult res;
    res.weight_fallback = wr.hull_fallback;
    res.model = neural::init_model(full_layers(n_aps, cfg.hidden_layers, 2),
                                   neural::Head::Regression, cfg.seed,
                                   cfg.init_gain);

    std::vector<MlpModel> locals(n, res.model);
    for (int t = 1; t <= cfg.rounds; ++t) {
        const MlpModel snapshot = res.model;  // broadcast
        parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
            locals[i] = neural::train_local(
                snapshot, train_sets[i], cfg.train,
                derive_seed(cfg.seed, 0x726f756e64,
                            static_cast<std::uint64_t>(t),
                            static_cast<std::uint64_t>(i)));
        });
        res.model = aggregate(locals, wr.weights);

        if (t % cfg.eval_stride == 0 || t == cfg.rounds) {
            RoundMetrics m;
            m.round = t;
            m.test_mae = evaluate_mae(res.model, test_set);
            double wl = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                wl += wr.weights[i] * neural::loss(res.model, train_sets[i]);
            m.weighted_train_loss = wl;
            m.weights = wr.weights;
            res.metrics.push_back(std::move(m));
        }
    }
    return res;
}

FederatedResult run_centralized(const std::vector<FingerprintDatabase>& databases,
                                const std::vector<FingerprintRecord>& test_set,
                                int total_steps,
                                const neural::TrainConfig& train,
                                std::uint64_t seed,
                                const std::vector<int>& hidden_layers,
                                int eval_stride_steps,
                                double init_gain) {
    if (databases.empty()) throw std::invalid_argument("no databases");
    std::vector<FingerprintRecord> merged;
    for (const auto& db : databases)
        merged.insert(merged.end(), db.records.begin(), db.records.end());
    const neural::TrainSet data = neural::regression_set(merged);

    FederatedResult res;
    res.model = neural::init_model(
        full_layers(data.front().x.size(), hidden_layers, 2),
        neural::Head::Regression, seed, init_gain);

    neural::TrainConfig block = train;
    int done = 0;
    int round = 0;
    while (done < total_steps) {
        block.local_steps = std::min(eval_stride_steps, total_steps - done);
        res.model = neural::train_local(
            res.model, data, block,
            derive_seed(seed, 0x63656e74, static_cast<std::uint64_t>(round)));
        done += block.local_steps;
        ++round;
        RoundMetrics m;
        m.round = round;
        m.test_mae = evaluate_mae(res.model, test_set);
        m.weighted_train_loss = neural::loss(res.model, data);
        m.weights = {1.0};
        res.metrics.push_back(std::move(m));
    }
    return res;
}

void write_metrics_csv(std::ostream& out, const std::string& strategy_label,
                       const std::vector<RoundMetrics>& metrics) {
    std::size_t n_weights = 0;
    for (const auto& m : metrics) n_weights = m.weights.size();
    out << "round,strategy,test_mae,weighted_train_loss";
    for (std::size_t i = 0; i < n_weights; ++i) out << ",p_" << i;
    out << "\n";
    out.precision(17);
    for (const auto& m : metrics) {
        out << m.round << ',' << strategy_label << ',' << m.test_mae << ','
            << m.weighted_train_loss;
        for (double w : m.weights) out << ',' << w;
        out << "\n";
    }
}

}  // namespace fedloc::federation
