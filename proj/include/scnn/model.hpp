#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scnn/autograd.hpp"
#include "scnn/error.hpp"
#include "scnn/layers.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"
#include "scnn/text.hpp"

namespace scnn {

enum class Variant { SCNN, SCNN_SELU, ShortCNN, StaticCNN };

inline const char* to_string(Variant v) {
    switch (v) {
    case Variant::SCNN: return "SCNN";
    case Variant::SCNN_SELU: return "SCNN_SELU";
    case Variant::ShortCNN: return "ShortCNN";
    case Variant::StaticCNN: return "StaticCNN";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "SCNN") return Variant::SCNN;
    if (s == "SCNN_SELU") return Variant::SCNN_SELU;
    if (s == "ShortCNN") return Variant::ShortCNN;
    if (s == "StaticCNN") return Variant::StaticCNN;
    throw ConfigError("unknown model variant '" + s + "' (valid: SCNN, SCNN_SELU, ShortCNN, StaticCNN)");
}

inline constexpr std::size_t static_cnn_filters = 100;

struct ModelConfig {
    Variant variant = Variant::SCNN;
    std::vector<std::size_t> kernel_widths{3, 4, 5};
    std::size_t filters_per_width = 70;
    std::size_t embed_dim = 300;
    std::size_t max_len = 60;
    std::size_t vocab_size = 20000;
    std::size_t num_classes = 2;
    DropoutSpec dropout{DropoutKind::alpha, 0.5};
    Activation activation = Activation::elu;
    Init conv_init = Init::lecun_normal;
    bool trainable_embeddings = false;
    double elu_alpha = 1.0;
    SeluConstants selu{};

    /// Defaults implied by a variant. `filters` is the SCNN/ShortCNN budget per
    /// width; StaticCNN ignores it and uses 100.
    static ModelConfig for_variant(Variant v, std::size_t filters = 70) {
        ModelConfig c;
        c.variant = v;
        switch (v) {
        case Variant::SCNN:
            c.activation = Activation::elu;
            c.conv_init = Init::lecun_normal;
            c.dropout = {DropoutKind::alpha, 0.5};
            c.filters_per_width = filters;
            break;
        case Variant::SCNN_SELU:
            c.activation = Activation::selu;
            c.conv_init = Init::lecun_normal;
            c.dropout = {DropoutKind::alpha, 0.5};
            c.filters_per_width = filters;
            break;
        case Variant::ShortCNN:
            c.activation = Activation::relu;
            c.conv_init = Init::glorot_uniform;
            c.dropout = {DropoutKind::standard, 0.5};
            c.filters_per_width = filters;
            break;
        case Variant::StaticCNN:
            c.activation = Activation::relu;
            c.conv_init = Init::glorot_uniform;
            c.dropout = {DropoutKind::standard, 0.5};
            c.filters_per_width = static_cnn_filters;
            break;
        }
        return c;
    }

    std::size_t max_width() const {
        return kernel_widths.empty() ? 0 : *std::max_element(kernel_widths.begin(), kernel_widths.end());
    }
    std::size_t outputs() const { return num_classes == 2 ? 1 : num_classes; }
    std::size_t features() const { return filters_per_width * kernel_widths.size(); }

    ActivationFn activation_fn() const { return ActivationFn{activation, elu_alpha, selu}; }

    void validate() const {
        if (num_classes < 2) throw ConfigError("num_classes must be at least 2, got " + std::to_string(num_classes));
        if (kernel_widths.empty()) throw ConfigError("kernel_widths must not be empty");
        for (auto w : kernel_widths)
            if (w == 0) throw ConfigError("kernel widths must be positive");
        if (filters_per_width == 0) throw ConfigError("filters_per_width must be positive");
        if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
        if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2");
        if (max_len < max_width())
            throw ConfigError("max_len " + std::to_string(max_len) + " is shorter than the widest kernel " +
                              std::to_string(max_width()));
        if (!(dropout.rate >= 0.0 && dropout.rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
        if (!(elu_alpha > 0)) throw ConfigError("elu_alpha must be positive");
    }
};

/// Count of trainable scalars: conv kernels and biases plus the dense head,
/// and the embedding table only when it is trainable.
inline std::size_t parameter_count(const ModelConfig& c) {
    std::size_t n = 0;
    for (auto h : c.kernel_widths) n += c.filters_per_width * (h * c.embed_dim + 1);
    n += c.features() * c.outputs() + c.outputs();
    if (c.trainable_embeddings) n += c.vocab_size * c.embed_dim;
    return n;
}

inline std::size_t embedding_parameter_count(const ModelConfig& c) { return c.vocab_size * c.embed_dim; }

struct ConvBranch {
    std::size_t width = 0;
    Tensor kernels; // [F x h x d]
    Tensor bias;    // [F]
};

struct ModelParams {
    Tensor embedding; // [V x d]
    std::vector<ConvBranch> branches;
    Tensor dense_w; // [F*|widths| x out]
    Tensor dense_b; // [out]

    /// Tensors updated by the optimizer, in a fixed order.
    std::vector<Tensor*> trainable(const ModelConfig& c) {
        std::vector<Tensor*> out;
        for (auto& b : branches) {
            out.push_back(&b.kernels);
            out.push_back(&b.bias);
        }
        out.push_back(&dense_w);
        out.push_back(&dense_b);
        if (c.trainable_embeddings) out.push_back(&embedding);
        return out;
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        if (!(a.embedding == b.embedding && a.dense_w == b.dense_w && a.dense_b == b.dense_b)) return false;
        if (a.branches.size() != b.branches.size()) return false;
        for (std::size_t i = 0; i < a.branches.size(); ++i)
            if (a.branches[i].width != b.branches[i].width || !(a.branches[i].kernels == b.branches[i].kernels) ||
                !(a.branches[i].bias == b.branches[i].bias))
                return false;
        return true;
    }
};

/// Token ids for B sequences of length N, row-major.
struct IdBatch {
    std::size_t batch = 0;
    std::size_t len = 0;
    std::vector<std::int32_t> ids;

    static IdBatch from_rows(std::span<const TokenIds> rows) {
        IdBatch b;
        b.batch = rows.size();
        b.len = rows.empty() ? 0 : rows.front().size();
        for (const auto& r : rows) {
            if (r.size() != b.len) throw DimensionError("id rows of unequal length");
            b.ids.insert(b.ids.end(), r.begin(), r.end());
        }
        return b;
    }
};

inline ModelParams build(const ModelConfig& c, const Tensor& embedding, Rng& rng) {
    c.validate();
    if (embedding.rank() != 2 || embedding.dim(0) != c.vocab_size || embedding.dim(1) != c.embed_dim)
        throw DimensionError("embedding table " + shape_str(embedding.shape()) + " does not match config [" +
                             std::to_string(c.vocab_size) + "x" + std::to_string(c.embed_dim) + "]");
    ModelParams p;
    p.embedding = embedding;
    const std::size_t f = c.filters_per_width, d = c.embed_dim;
    for (auto h : c.kernel_widths) {
        ConvBranch b;
        b.width = h;
        b.kernels = init_tensor({f, h, d}, c.conv_init, h * d, f, rng);
        b.bias = Tensor({f}); // zero
        p.branches.push_back(std::move(b));
    }
    p.dense_w = init_tensor({c.features(), c.outputs()}, c.conv_init, c.features(), c.outputs(), rng);
    p.dense_b = Tensor({c.outputs()});
    return p;
}

inline ModelParams build(const ModelConfig& c, const EmbeddingTable& table, Rng& rng) {
    return build(c, table.matrix, rng);
}

/// Leaves of one forward pass, in `ModelParams::trainable` order.
struct GraphLeaves {
    ad::Var embedding;               // null when the table is frozen
    const Tensor* frozen = nullptr;  // read directly, never copied
    std::vector<ad::Var> kernels;
    std::vector<ad::Var> biases;
    ad::Var dense_w;
    ad::Var dense_b;

    std::vector<ad::Var> trainable(const ModelConfig& c) const {
        std::vector<ad::Var> out;
        for (std::size_t i = 0; i < kernels.size(); ++i) {
            out.push_back(kernels[i]);
            out.push_back(biases[i]);
        }
        out.push_back(dense_w);
        out.push_back(dense_b);
        if (c.trainable_embeddings) out.push_back(embedding);
        return out;
    }
};

inline GraphLeaves make_leaves(const ModelParams& p, const ModelConfig& c, bool requires_grad) {
    GraphLeaves l;
    if (requires_grad && c.trainable_embeddings)
        l.embedding = ad::leaf(p.embedding, true);
    else
        l.frozen = &p.embedding;
    for (const auto& b : p.branches) {
        l.kernels.push_back(ad::leaf(b.kernels, requires_grad));
        l.biases.push_back(ad::leaf(b.bias, requires_grad));
    }
    l.dense_w = ad::leaf(p.dense_w, requires_grad);
    l.dense_b = ad::leaf(p.dense_b, requires_grad);
    return l;
}

struct ForwardTrace {
    std::vector<ad::Var> activations; // per width, [B x L x F]
    ad::Var pooled;                   // [B x F*|widths|], before dropout
    ad::Var probs;                    // [B x out]
};

inline void check_batch(const ModelConfig& c, const IdBatch& ids) {
    if (ids.len < c.max_width())
        throw ConfigError("sequence length " + std::to_string(ids.len) + " is shorter than the widest kernel");
    if (ids.ids.size() != ids.batch * ids.len || ids.batch == 0) throw DimensionError("malformed id batch");
}

/// Graph-building forward pass. `rng` is only drawn from in train mode with a
/// nonzero dropout rate.
inline ForwardTrace forward_graph(const GraphLeaves& l, const ModelConfig& c, const IdBatch& ids, bool train,
                                  Rng& rng) {
    check_batch(c, ids);
    ForwardTrace t;
    auto emb = l.embedding ? ad::embedding_lookup(l.embedding, ids.ids, ids.batch, ids.len)
                           : ad::embedding_lookup(*l.frozen, ids.ids, ids.batch, ids.len);
    const auto act = c.activation_fn();
    std::vector<ad::Var> pooled;
    for (std::size_t i = 0; i < l.kernels.size(); ++i) {
        auto a = ad::activate(ad::conv_bank(emb, l.kernels[i], l.biases[i]), act);
        t.activations.push_back(a);
        pooled.push_back(ad::max_pool_time(a));
    }
    t.pooled = ad::concat_cols(pooled);
    auto h = t.pooled;
    if (train && c.dropout.rate > 0)
        h = ad::dropout(h, make_dropout_mask(c.dropout, h->value.size(), rng, c.selu));
    auto z = ad::add_bias(ad::matmul(h, l.dense_w), l.dense_b);
    t.probs = c.outputs() == 1 ? ad::sigmoid(z) : ad::softmax_rows(z);
    return t;
}

/// Probabilities [B x out]: sigmoid column for binary tasks, softmax rows otherwise.
inline Tensor forward(const ModelParams& p, const ModelConfig& c, const IdBatch& ids, bool train, Rng& rng) {
    return forward_graph(make_leaves(p, c, false), c, ids, train, rng).probs->value;
}

inline Tensor forward(const ModelParams& p, const ModelConfig& c, const IdBatch& ids) {
    Rng unused(0);
    return forward(p, c, ids, false, unused);
}

/// Binary: p >= 0.5 is class 1. Multiclass: argmax, lowest index on ties.
inline std::vector<int> labels_from_probs(const Tensor& probs) {
    std::vector<int> out;
    const std::size_t rows = probs.dim(0), k = probs.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
        if (k == 1)
            out.push_back(probs.at(r, 0) >= 0.5 ? 1 : 0);
        else
            out.push_back(static_cast<int>(argmax(probs.data().subspan(r * k, k))));
    }
    return out;
}

inline std::vector<int> predict(const ModelParams& p, const ModelConfig& c, const IdBatch& ids) {
    return labels_from_probs(forward(p, c, ids));
}

} // namespace scnn
