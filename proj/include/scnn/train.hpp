#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scnn/autograd.hpp"
#include "scnn/error.hpp"
#include "scnn/metrics.hpp"
#include "scnn/model.hpp"
#include "scnn/rng.hpp"
#include "scnn/text.hpp"

namespace scnn {

struct TrainConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 50;
    std::size_t epochs = 25;
    std::uint64_t seed = 1;
    bool shuffle = true;

    void validate() const {
        if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
        if (!(beta1 > 0 && beta1 < 1)) throw ConfigError("beta1 must lie in (0, 1)");
        if (!(beta2 > 0 && beta2 < 1)) throw ConfigError("beta2 must lie in (0, 1)");
        if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
        if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    }
};

/// Cross-entropy of one probability row against its label. A single
/// probability is read as P(class 1) of a sigmoid head.
inline double cross_entropy(std::span<const double> probs, int label) {
    if (probs.size() == 1) {
        if (label != 0 && label != 1) throw InvalidInput("binary label must be 0 or 1");
        const double p = probs[0];
        return -(label * std::log(ad::clamp_prob(p)) + (1 - label) * std::log(ad::clamp_prob(1.0 - p)));
    }
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
        throw InvalidInput("label " + std::to_string(label) + " out of range");
    return -std::log(ad::clamp_prob(probs[static_cast<std::size_t>(label)]));
}

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t t = 0;

    static AdamState for_params(std::span<Tensor* const> params) {
        AdamState s;
        for (auto* p : params) {
            s.m.emplace_back(p->shape());
            s.v.emplace_back(p->shape());
        }
        return s;
    }
};

inline void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
                      const TrainConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw DimensionError("adam_step: parameter, gradient and state counts differ");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i]->shape() != grads[i].shape() || params[i]->shape() != state.m[i].shape())
            throw DimensionError("adam_step: shape mismatch at parameter " + std::to_string(i) + ": " +
                                 shape_str(params[i]->shape()) + " vs gradient " + shape_str(grads[i].shape()));
    ++state.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto theta = params[i]->data();
        auto g = grads[i].data();
        auto m = state.m[i].data();
        auto v = state.v[i].data();
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            theta[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

/// Sequences already mapped to ids, with their labels.
struct EncodedSet {
    std::vector<TokenIds> ids;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }

    EncodedSet subset(std::span<const std::size_t> idx) const {
        EncodedSet s;
        for (auto i : idx) {
            s.ids.push_back(ids[i]);
            s.labels.push_back(labels[i]);
        }
        return s;
    }
};

inline EncodedSet encode_dataset(const Dataset& ds, const Vocabulary& vocab, std::size_t max_len,
                                 std::optional<Split> only = std::nullopt) {
    EncodedSet s;
    for (const auto& e : ds.examples) {
        if (only && e.split != *only) continue;
        s.ids.push_back(encode(e.tokens, vocab, max_len));
        s.labels.push_back(e.label);
    }
    return s;
}

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0;
    std::optional<Metrics> validation;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> history;
};

inline Metrics evaluate(const ModelParams& p, const ModelConfig& c, const EncodedSet& data,
                        std::size_t batch_size = 256) {
    std::vector<int> pred;
    pred.reserve(data.size());
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const std::size_t end = std::min(data.size(), start + batch_size);
        auto batch = IdBatch::from_rows(std::span(data.ids).subspan(start, end - start));
        auto labels = predict(p, c, batch);
        pred.insert(pred.end(), labels.begin(), labels.end());
    }
    return compute_metrics(data.labels, pred, c.num_classes);
}

/// One mini-batch step: forward, loss, backward, Adam. Returns the batch loss.
inline double train_step(ModelParams& params, const ModelConfig& mc, const IdBatch& batch,
                         std::span<const int> labels, AdamState& adam, const TrainConfig& tc, Rng& dropout_rng) {
    auto leaves = make_leaves(params, mc, true);
    auto trace = forward_graph(leaves, mc, batch, true, dropout_rng);
    auto loss = ad::cross_entropy(trace.probs, labels);
    const double value = loss->value[0];
    const auto vars = leaves.trainable(mc);
    auto grads = ad::backward(loss, vars);
    auto targets = params.trainable(mc);
    adam_step(targets, grads, adam, tc);
    return value;
}

/// Mini-batch Adam training. `stream` selects independent RNG streams (one per
/// cross-validation fold) under the master seed.
inline TrainResult train(const TrainConfig& tc, const ModelConfig& mc, const EncodedSet& data,
                         const Tensor& embedding, const EncodedSet* validation = nullptr, std::uint64_t stream = 0) {
    tc.validate();
    mc.validate();
    if (data.size() == 0) throw DataError("training set is empty");
    auto init_rng = make_rng(tc.seed, Stream::init, stream);
    auto shuffle_rng = make_rng(tc.seed, Stream::shuffle, stream);
    auto dropout_rng = make_rng(tc.seed, Stream::dropout, stream);

    TrainResult r{build(mc, embedding, init_rng), {}};
    auto adam = AdamState::for_params(r.params.trainable(mc));
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        if (tc.shuffle) shuffle_range(order.begin(), order.end(), shuffle_rng);
        double total = 0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            std::vector<TokenIds> rows;
            std::vector<int> labels;
            for (std::size_t i = start; i < end; ++i) {
                rows.push_back(data.ids[order[i]]);
                labels.push_back(data.labels[order[i]]);
            }
            double loss;
            try {
                loss = train_step(r.params, mc, IdBatch::from_rows(rows), labels, adam, tc, dropout_rng);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch starting at " +
                                   std::to_string(start) + ")");
            }
            total += loss * static_cast<double>(end - start);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = total / static_cast<double>(order.size());
        if (!std::isfinite(rec.train_loss))
            throw NumericError("non-finite training loss in epoch " + std::to_string(epoch));
        if (validation && validation->size() > 0) rec.validation = evaluate(r.params, mc, *validation);
        r.history.push_back(std::move(rec));
    }
    return r;
}

} // namespace scnn
