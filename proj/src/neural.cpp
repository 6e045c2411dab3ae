#include "fedloc/neural.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fedloc::neural {

bool MlpModel::same_shape(const MlpModel& other) const {
    return layer_sizes == other.layer_sizes && head == other.head;
}

MlpModel init_model(const std::vector<int>& layer_sizes, Head head,
                    std::uint64_t seed, double first_layer_gain) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("need at least input and output layers");
    for (int s : layer_sizes)
        if (s < 1) throw std::invalid_argument("layer sizes must be positive");
    if (!(first_layer_gain > 0.0))
        throw std::invalid_argument("first_layer_gain must be positive");

    MlpModel m;
    m.layer_sizes = layer_sizes;
    m.head = head;
    Rng rng = make_rng(seed, 0x696e6974);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
        for (double& v : w) v = dist(rng);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    if (first_layer_gain != 1.0)
        for (double& v : m.weights.front()) v *= first_layer_gain;
    return m;
}

namespace {

void affine(const std::vector<double>& w, const std::vector<double>& b,
            std::span<const double> in, std::vector<double>& out) {
    const std::size_t rows = b.size();
    const std::size_t cols = in.size();
    out.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* wr = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * in[c];
        out[r] = acc;
    }
}

void softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

struct ForwardTrace {
    // activations[0] is the input; activations[l+1] is the post-ReLU
    // (or head) output of layer l. preacts[l] is z of layer l.
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> preacts;
};

ForwardTrace forward_trace(const MlpModel& m, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(m.layer_sizes.front()))
        throw std::invalid_argument("input dimension mismatch");
    ForwardTrace t;
    t.activations.emplace_back(x.begin(), x.end());
    t.preacts.resize(m.n_layers());
    for (std::size_t l = 0; l < m.n_layers(); ++l) {
        affine(m.weights[l], m.biases[l], t.activations.back(), t.preacts[l]);
        std::vector<double> a = t.preacts[l];
        if (l + 1 < m.n_layers()) {
            for (double& v : a) v = std::max(v, 0.0);
        } else if (m.head == Head::Softmax) {
            softmax_inplace(a);
        }
        t.activations.push_back(std::move(a));
    }
    return t;
}

double sample_loss(const MlpModel& m, const std::vector<double>& out,
                   const std::vector<double>& y) {
    if (y.size() != out.size())
        throw std::invalid_argument("target dimension mismatch");
    if (m.head == Head::Regression) {
        double s = 0.0;
        for (std::size_t k = 0; k < out.size(); ++k)
            s += (out[k] - y[k]) * (out[k] - y[k]);
        return std::sqrt(s);
    }
    double l = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k)
        if (y[k] != 0.0) l -= y[k] * std::log(std::max(out[k], 1e-300));
    return l;
}

// dl/dz at the output layer.
std::vector<double> output_delta(const MlpModel& m,
                                 const std::vector<double>& out,
                                 const std::vector<double>& y) {
    std::vector<double> d(out.size());
    if (m.head == Head::Regression) {
        double norm = 0.0;
        for (std::size_t k = 0; k < out.size(); ++k)
            norm += (out[k] - y[k]) * (out[k] - y[k]);
        norm = std::sqrt(norm);
        if (norm == 0.0) return d;  // subgradient 0 at the kink
        for (std::size_t k = 0; k < out.size(); ++k)
            d[k] = (out[k] - y[k]) / norm;
        return d;
    }
    for (std::size_t k = 0; k < out.size(); ++k) d[k] = out[k] - y[k];
    return d;
}

Gradient zero_gradient(const MlpModel& m) {
    Gradient g;
    for (std::size_t l = 0; l < m.n_layers(); ++l) {
        g.weights.emplace_back(m.weights[l].size(), 0.0);
        g.biases.emplace_back(m.biases[l].size(), 0.0);
    }
    return g;
}

void accumulate_sample(const MlpModel& m, const TrainSample& s, Gradient& g) {
    const ForwardTrace t = forward_trace(m, s.x);
    std::vector<double> delta = output_delta(m, t.activations.back(), s.y);
    for (std::size_t l = m.n_layers(); l-- > 0;) {
        const std::vector<double>& a_prev = t.activations[l];
        const std::size_t rows = delta.size();
        const std::size_t cols = a_prev.size();
        for (std::size_t r = 0; r < rows; ++r) {
            double* gw = g.weights[l].data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) gw[c] += delta[r] * a_prev[c];
            g.biases[l][r] += delta[r];
        }
        if (l == 0) break;
        std::vector<double> prev(cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* wr = m.weights[l].data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) prev[c] += wr[c] * delta[r];
        }
        for (std::size_t c = 0; c < cols; ++c)
            if (t.preacts[l - 1][c] <= 0.0) prev[c] = 0.0;
        delta = std::move(prev);
    }
}

}  // namespace

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
    return forward_trace(model, x).activations.back();
}

double loss(const MlpModel& model, const TrainSet& data,
            std::span<const std::size_t> indices) {
    if (indices.empty()) throw std::invalid_argument("empty batch");
    double total = 0.0;
    for (std::size_t i : indices) {
        const TrainSample& s = data[i];
        total += sample_loss(model, forward(model, s.x), s.y);
    }
    return total / indices.size();
}

double loss(const MlpModel& model, const TrainSet& batch) {
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return loss(model, batch, idx);
}

Gradient gradient(const MlpModel& model, const TrainSet& data,
                  std::span<const std::size_t> indices) {
    if (indices.empty()) throw std::invalid_argument("empty batch");
    Gradient g = zero_gradient(model);
    for (std::size_t i : indices) accumulate_sample(model, data[i], g);
    const double inv = 1.0 / indices.size();
    for (auto& w : g.weights)
        for (double& v : w) v *= inv;
    for (auto& b : g.biases)
        for (double& v : b) v *= inv;
    return g;
}

Gradient gradient(const MlpModel& model, const TrainSet& batch) {
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return gradient(model, batch, idx);
}

void sgd_step(MlpModel& model, const Gradient& grad, double eta) {
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        for (std::size_t k = 0; k < model.weights[l].size(); ++k)
            model.weights[l][k] -= eta * grad.weights[l][k];
        for (std::size_t k = 0; k < model.biases[l].size(); ++k)
            model.biases[l][k] -= eta * grad.biases[l][k];
    }
}

MlpModel train_local(const MlpModel& model, const TrainSet& data,
                     const TrainConfig& cfg, std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("empty training set");
    if (cfg.local_steps < 1 || cfg.batch_size < 1)
        throw std::invalid_argument("invalid train config");

    MlpModel m = model;
    Rng rng = make_rng(seed, 0x747261696e);
    std::vector<std::size_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const std::size_t batch =
        std::min<std::size_t>(cfg.batch_size, data.size());
    std::size_t cursor = perm.size();  // force an initial shuffle
    for (int step = 0; step < cfg.local_steps; ++step) {
        if (cursor + batch > perm.size()) {
            // a full-set batch is order-invariant; keep it in natural
            // order so full-batch steps match the closed form bitwise
            if (batch < perm.size()) std::shuffle(perm.begin(), perm.end(), rng);
            cursor = 0;
        }
        std::span<const std::size_t> idx(perm.data() + cursor, batch);
        sgd_step(m, gradient(m, data, idx), cfg.eta);
        cursor += batch;
    }
    return m;
}

TrainSet regression_set(const std::vector<scenario::FingerprintRecord>& records) {
    TrainSet out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back({r.rss, {r.position.x, r.position.y}});
    return out;
}

TrainSet classification_set(const std::vector<scenario::FingerprintRecord>& records,
                            int n_classes) {
    TrainSet out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.floor < 0 || r.floor >= n_classes)
            throw std::invalid_argument("floor label out of range");
        std::vector<double> y(n_classes, 0.0);
        y[r.floor] = 1.0;
        out.push_back({r.rss, std::move(y)});
    }
    return out;
}

void save_model(std::ostream& out, const MlpModel& model) {
    out << "fedloc-mlp 1\n";
    out << (model.head == Head::Regression ? "regression" : "softmax") << "\n";
    out << model.layer_sizes.size();
    for (int s : model.layer_sizes) out << ' ' << s;
    out << "\n";
    out.precision(17);
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        for (double v : model.weights[l]) out << v << ' ';
        out << "\n";
        for (double v : model.biases[l]) out << v << ' ';
        out << "\n";
    }
}

MlpModel load_model(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "fedloc-mlp" || version != 1)
        throw std::runtime_error("unrecognized model checkpoint");
    std::string head_tag;
    in >> head_tag;
    MlpModel m;
    if (head_tag == "regression")
        m.head = Head::Regression;
    else if (head_tag == "softmax")
        m.head = Head::Softmax;
    else
        throw std::runtime_error("unknown head tag: " + head_tag);
    std::size_t n = 0;
    in >> n;
    m.layer_sizes.resize(n);
    for (auto& s : m.layer_sizes) in >> s;
    for (std::size_t l = 0; l + 1 < n; ++l) {
        const std::size_t rows = m.layer_sizes[l + 1];
        const std::size_t cols = m.layer_sizes[l];
        std::vector<double> w(rows * cols);
        for (double& v : w) in >> v;
        std::vector<double> b(rows);
        for (double& v : b) in >> v;
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    if (!in) throw std::runtime_error("truncated model checkpoint");
    return m;
}

}  // namespace fedloc::neural
