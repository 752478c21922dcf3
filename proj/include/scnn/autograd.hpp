#pragma once

// Reverse-mode differentiation over a per-pass graph. Leaves are created by
// the caller; every op returns a fresh node holding its parents and a rule
// that pushes its gradient into them. Dropping the loss node frees the graph.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "scnn/error.hpp"
#include "scnn/layers.hpp"
#include "scnn/tensor.hpp"

namespace scnn::ad {

struct Node {
    Tensor value;
    Tensor grad; // empty until something flows into it
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> propagate;
    const char* op = "leaf";

    Tensor& grad_buffer() {
        if (grad.empty()) grad = Tensor(value.shape());
        return grad;
    }
};

using Var = std::shared_ptr<Node>;

inline Var leaf(Tensor value, bool requires_grad = true) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

inline Var constant(Tensor value) { return leaf(std::move(value), false); }

namespace detail {

inline Var make(const char* op, Tensor value, std::vector<Var> parents, std::function<void(Node&)> rule) {
    require_finite(value, op);
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->op = op;
    for (auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->propagate = std::move(rule);
    }
    return n;
}

inline bool wants(const Var& v) { return v->requires_grad; }

} // namespace detail

// ---- linear algebra -------------------------------------------------------

inline Var matmul(const Var& a, const Var& b) {
    Tensor out = scnn::matmul(a->value, b->value);
    return detail::make("matmul", std::move(out), {a, b}, [a, b](Node& self) {
        const auto& g = self.grad;
        if (a->requires_grad) {
            Tensor ga = scnn::matmul(g, transpose(b->value));
            auto& buf = a->grad_buffer();
            for (std::size_t i = 0; i < ga.size(); ++i) buf[i] += ga[i];
        }
        if (b->requires_grad) {
            Tensor gb = scnn::matmul(transpose(a->value), g);
            auto& buf = b->grad_buffer();
            for (std::size_t i = 0; i < gb.size(); ++i) buf[i] += gb[i];
        }
    });
}

/// x [B x n] + bias [n], broadcast over rows.
inline Var add_bias(const Var& x, const Var& bias) {
    const auto& xv = x->value;
    if (xv.rank() != 2 || bias->value.size() != xv.dim(1))
        throw DimensionError("add_bias shape mismatch: " + shape_str(xv.shape()) + " + " +
                             shape_str(bias->value.shape()));
    Tensor out = xv;
    const std::size_t rows = xv.dim(0), cols = xv.dim(1);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += bias->value[c];
    return detail::make("add_bias", std::move(out), {x, bias}, [x, bias, rows, cols](Node& self) {
        if (x->requires_grad) {
            auto& buf = x->grad_buffer();
            for (std::size_t i = 0; i < self.grad.size(); ++i) buf[i] += self.grad[i];
        }
        if (bias->requires_grad) {
            auto& buf = bias->grad_buffer();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) buf[c] += self.grad.at(r, c);
        }
    });
}

inline Var sum(const Var& x) {
    double s = 0;
    for (double v : x->value.data()) s += v;
    return detail::make("sum", Tensor::scalar(s), {x}, [x](Node& self) {
        const double g = self.grad[0];
        for (double& v : x->grad_buffer().data()) v += g;
    });
}

inline Var mul(const Var& a, const Var& b) {
    if (a->value.shape() != b->value.shape())
        throw DimensionError("mul shape mismatch: " + shape_str(a->value.shape()) + " vs " +
                             shape_str(b->value.shape()));
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
    return detail::make("mul", std::move(out), {a, b}, [a, b](Node& self) {
        // Read both values before writing; a and b may be the same node.
        const auto n = self.grad.size();
        if (a->requires_grad) {
            auto& buf = a->grad_buffer();
            for (std::size_t i = 0; i < n; ++i) buf[i] += self.grad[i] * b->value[i];
        }
        if (b->requires_grad) {
            auto& buf = b->grad_buffer();
            for (std::size_t i = 0; i < n; ++i) buf[i] += self.grad[i] * a->value[i];
        }
    });
}

// ---- convolution and pooling ----------------------------------------------

/// input [N x d], kernel [h x d], bias [1] -> [N - h + 1]
inline Var conv_valid(const Var& input, const Var& kernel, const Var& bias) {
    if (bias->value.size() != 1) throw DimensionError("conv_valid bias must be a scalar");
    Tensor out = scnn::conv_valid(input->value, kernel->value, bias->value[0]);
    const std::size_t d = input->value.dim(1), hd = kernel->value.size();
    return detail::make("conv_valid", std::move(out), {input, kernel, bias}, [=](Node& self) {
        const std::size_t len = self.grad.size();
        const double* in = input->value.data().data();
        const double* k = kernel->value.data().data();
        if (kernel->requires_grad) {
            double* gk = kernel->grad_buffer().data().data();
            for (std::size_t i = 0; i < len; ++i) scnn::detail::axpy(self.grad[i], in + i * d, gk, hd);
        }
        if (input->requires_grad) {
            double* gi = input->grad_buffer().data().data();
            for (std::size_t i = 0; i < len; ++i) scnn::detail::axpy(self.grad[i], k, gi + i * d, hd);
        }
        if (bias->requires_grad) {
            double s = 0;
            for (std::size_t i = 0; i < len; ++i) s += self.grad[i];
            bias->grad_buffer()[0] += s;
        }
    });
}

/// A bank of F kernels over a batch: input [B x N x d], kernels [F x h x d],
/// bias [F] -> [B x (N - h + 1) x F]. Row-major layout makes every window a
/// contiguous run of h*d values.
inline Var conv_bank(const Var& input, const Var& kernels, const Var& bias) {
    const auto& iv = input->value;
    const auto& kv = kernels->value;
    if (iv.rank() != 3 || kv.rank() != 3 || iv.dim(2) != kv.dim(2) || bias->value.size() != kv.dim(0))
        throw DimensionError("conv_bank shape mismatch: input " + shape_str(iv.shape()) + ", kernels " +
                             shape_str(kv.shape()) + ", bias " + shape_str(bias->value.shape()));
    const std::size_t batch = iv.dim(0), n = iv.dim(1), d = iv.dim(2);
    const std::size_t filters = kv.dim(0), h = kv.dim(1), hd = h * d;
    if (h > n)
        throw InvalidInput("conv window " + std::to_string(h) + " exceeds sequence length " + std::to_string(n));
    const std::size_t len = n - h + 1;
    Tensor out({batch, len, filters});
    const double* in = iv.data().data();
    const double* k = kv.data().data();
    double* o = out.data().data();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < len; ++i) {
            const double* win = in + (b * n + i) * d;
            double* row = o + (b * len + i) * filters;
            for (std::size_t f = 0; f < filters; ++f)
                row[f] = scnn::detail::dot(win, k + f * hd, hd) + bias->value[f];
        }
    return detail::make("conv_bank", std::move(out), {input, kernels, bias}, [=](Node& self) {
        const double* g = self.grad.data().data();
        const double* inp = input->value.data().data();
        const double* ker = kernels->value.data().data();
        if (kernels->requires_grad) {
            double* gk = kernels->grad_buffer().data().data();
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t i = 0; i < len; ++i) {
                    const double* win = inp + (b * n + i) * d;
                    const double* grow = g + (b * len + i) * filters;
                    for (std::size_t f = 0; f < filters; ++f)
                        if (grow[f] != 0.0) scnn::detail::axpy(grow[f], win, gk + f * hd, hd);
                }
        }
        if (input->requires_grad) {
            double* gi = input->grad_buffer().data().data();
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t i = 0; i < len; ++i) {
                    double* win = gi + (b * n + i) * d;
                    const double* grow = g + (b * len + i) * filters;
                    for (std::size_t f = 0; f < filters; ++f)
                        if (grow[f] != 0.0) scnn::detail::axpy(grow[f], ker + f * hd, win, hd);
                }
        }
        if (bias->requires_grad) {
            auto& gb = bias->grad_buffer();
            for (std::size_t r = 0; r < batch * len; ++r)
                for (std::size_t f = 0; f < filters; ++f) gb[f] += g[r * filters + f];
        }
    });
}

/// Maximum of a vector; the gradient goes to the lowest winning index.
inline Var max_over_time(const Var& c) {
    const std::size_t idx = argmax(c->value.data());
    return detail::make("max_over_time", Tensor::scalar(c->value[idx]), {c}, [c, idx](Node& self) {
        c->grad_buffer()[idx] += self.grad[0];
    });
}

/// x [B x L x F] -> [B x F], max over the time axis per filter.
inline Var max_pool_time(const Var& x) {
    const auto& xv = x->value;
    if (xv.rank() != 3) throw DimensionError("max_pool_time expects [B x L x F], got " + shape_str(xv.shape()));
    const std::size_t batch = xv.dim(0), len = xv.dim(1), filters = xv.dim(2);
    Tensor out({batch, filters});
    std::vector<std::size_t> winner(batch * filters, 0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t f = 0; f < filters; ++f) {
            std::size_t best = 0;
            double bv = xv.at(b, 0, f);
            for (std::size_t i = 1; i < len; ++i) {
                const double v = xv.at(b, i, f);
                if (v > bv) {
                    bv = v;
                    best = i;
                }
            }
            out.at(b, f) = bv;
            winner[b * filters + f] = best;
        }
    return detail::make("max_pool_time", std::move(out), {x},
                        [x, winner = std::move(winner), batch, filters](Node& self) {
                            auto& buf = x->grad_buffer();
                            for (std::size_t b = 0; b < batch; ++b)
                                for (std::size_t f = 0; f < filters; ++f)
                                    buf.at(b, winner[b * filters + f], f) += self.grad.at(b, f);
                        });
}

/// Concatenate [B x k_i] matrices along columns.
inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw InvalidInput("concat_cols of nothing");
    const std::size_t rows = parts.front()->value.dim(0);
    std::size_t cols = 0;
    for (auto& p : parts) {
        if (p->value.rank() != 2 || p->value.dim(0) != rows)
            throw DimensionError("concat_cols row mismatch at " + shape_str(p->value.shape()));
        cols += p->value.dim(1);
    }
    Tensor out({rows, cols});
    std::size_t off = 0;
    for (auto& p : parts) {
        const std::size_t k = p->value.dim(1);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < k; ++c) out.at(r, off + c) = p->value.at(r, c);
        off += k;
    }
    return detail::make("concat_cols", std::move(out), parts, [parts, rows](Node& self) {
        std::size_t off = 0;
        for (auto& p : parts) {
            const std::size_t k = p->value.dim(1);
            if (p->requires_grad) {
                auto& buf = p->grad_buffer();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < k; ++c) buf.at(r, c) += self.grad.at(r, off + c);
            }
            off += k;
        }
    });
}

// ---- elementwise ----------------------------------------------------------

inline Var activate(const Var& x, const ActivationFn& fn) {
    Tensor out = map(x->value, fn);
    return detail::make(to_string(fn.kind), std::move(out), {x}, [x, fn](Node& self) {
        auto& buf = x->grad_buffer();
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += self.grad[i] * fn.grad(x->value[i]);
    });
}

inline Var selu(const Var& x, const SeluConstants& c = {}) {
    return activate(x, ActivationFn{Activation::selu, 1.0, c});
}
inline Var elu(const Var& x, double alpha = 1.0) { return activate(x, ActivationFn{Activation::elu, alpha, {}}); }
inline Var relu(const Var& x) { return activate(x, ActivationFn{Activation::relu, 1.0, {}}); }

inline Var dropout(const Var& x, DropoutMask mask) {
    if (mask.keep.size() != x->value.size()) throw DimensionError("dropout mask size mismatch");
    Tensor out = apply_mask(x->value, mask);
    return detail::make("dropout", std::move(out), {x}, [x, mask = std::move(mask)](Node& self) {
        auto& buf = x->grad_buffer();
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += self.grad[i] * mask.grad(i);
    });
}

inline Var sigmoid(const Var& x) {
    Tensor out = map(x->value, [](double v) { return scnn::sigmoid(v); });
    return detail::make("sigmoid", std::move(out), {x}, [x](Node& self) {
        auto& buf = x->grad_buffer();
        for (std::size_t i = 0; i < buf.size(); ++i) {
            const double s = self.value[i];
            buf[i] += self.grad[i] * s * (1.0 - s);
        }
    });
}

/// Row-wise softmax of [B x k].
inline Var softmax_rows(const Var& x) {
    const auto& xv = x->value;
    if (xv.rank() != 2) throw DimensionError("softmax_rows expects a matrix, got " + shape_str(xv.shape()));
    const std::size_t rows = xv.dim(0), k = xv.dim(1);
    Tensor out = xv;
    for (std::size_t r = 0; r < rows; ++r) softmax_inplace(out.data().subspan(r * k, k));
    return detail::make("softmax", std::move(out), {x}, [x, rows, k](Node& self) {
        auto& buf = x->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
            double dotgs = 0;
            for (std::size_t c = 0; c < k; ++c) dotgs += self.grad.at(r, c) * self.value.at(r, c);
            for (std::size_t c = 0; c < k; ++c)
                buf.at(r, c) += self.value.at(r, c) * (self.grad.at(r, c) - dotgs);
        }
    });
}

// ---- embedding and losses -------------------------------------------------

namespace detail {

inline Tensor gather_rows(const Tensor& tv, std::span<const std::int32_t> ids, std::size_t batch, std::size_t len) {
    if (tv.rank() != 2) throw DimensionError("embedding table must be [V x d]");
    if (ids.size() != batch * len) throw DimensionError("id batch size does not match B x N");
    const std::size_t vocab = tv.dim(0), d = tv.dim(1);
    Tensor out({batch, len, d});
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const auto id = ids[t];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab)
            throw DataError("token id " + std::to_string(id) + " outside [0, " + std::to_string(vocab) + ")");
        std::copy_n(tv.data().data() + static_cast<std::size_t>(id) * d, d, out.data().data() + t * d);
    }
    return out;
}

} // namespace detail

/// Lookup into a frozen table; the result is a constant.
inline Var embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids, std::size_t batch,
                            std::size_t len) {
    return constant(detail::gather_rows(table, ids, batch, len));
}

/// Gather rows of table [V x d] for ids laid out [B x N] -> [B x N x d].
inline Var embedding_lookup(const Var& table, std::span<const std::int32_t> ids, std::size_t batch,
                            std::size_t len) {
    Tensor out = detail::gather_rows(table->value, ids, batch, len);
    const std::size_t d = table->value.dim(1);
    std::vector<std::int32_t> kept(ids.begin(), ids.end());
    return detail::make("embedding", std::move(out), {table}, [table, kept = std::move(kept), d](Node& self) {
        double* g = table->grad_buffer().data().data();
        const double* s = self.grad.data().data();
        for (std::size_t t = 0; t < kept.size(); ++t)
            scnn::detail::axpy(1.0, s + t * d, g + static_cast<std::size_t>(kept[t]) * d, d);
    });
}

inline constexpr double prob_floor = 1e-12;

inline double clamp_prob(double p) { return std::clamp(p, prob_floor, 1.0 - prob_floor); }

/// Mean negative log-likelihood of the true labels. probs is [B x 1] (sigmoid
/// head, label in {0,1}) or [B x k] (softmax head).
inline Var cross_entropy(const Var& probs, std::span<const int> labels) {
    const auto& pv = probs->value;
    if (pv.rank() != 2 || pv.dim(0) != labels.size())
        throw DimensionError("cross_entropy: probabilities " + shape_str(pv.shape()) + " for " +
                             std::to_string(labels.size()) + " labels");
    const std::size_t rows = pv.dim(0), k = pv.dim(1);
    const bool binary = k == 1;
    const std::size_t classes = binary ? 2 : k;
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw InvalidInput("label " + std::to_string(y) + " out of range for " + std::to_string(classes) +
                               " classes");
    double total = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double p = binary ? (labels[r] == 1 ? pv.at(r, 0) : 1.0 - pv.at(r, 0)) : pv.at(r, labels[r]);
        total -= std::log(clamp_prob(p));
    }
    std::vector<int> ys(labels.begin(), labels.end());
    return detail::make("cross_entropy", Tensor::scalar(total / static_cast<double>(rows)), {probs},
                        [probs, ys = std::move(ys), rows, binary](Node& self) {
                            auto& buf = probs->grad_buffer();
                            const double g = self.grad[0] / static_cast<double>(rows);
                            auto& pv = probs->value;
                            for (std::size_t r = 0; r < rows; ++r) {
                                if (binary) {
                                    const double p1 = pv.at(r, 0);
                                    const double p = ys[r] == 1 ? p1 : 1.0 - p1;
                                    if (p < prob_floor || p > 1.0 - prob_floor) continue;
                                    buf.at(r, 0) += (ys[r] == 1 ? -g / p : g / p);
                                } else {
                                    const double p = pv.at(r, ys[r]);
                                    if (p < prob_floor || p > 1.0 - prob_floor) continue;
                                    buf.at(r, ys[r]) -= g / p;
                                }
                            }
                        });
}

// ---- backward -------------------------------------------------------------

/// Accumulate d(loss)/d(node) into every node reachable from `loss`, then
/// return the gradients of `leaves` in order (zeros for leaves the loss does
/// not depend on).
inline std::vector<Tensor> backward(const Var& loss, std::span<const Var> leaves = {}) {
    if (!loss || loss->value.size() != 1)
        throw ContractError("backward requires a scalar loss, got " +
                            (loss ? shape_str(loss->value.shape()) : std::string("null")));

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    if (loss->requires_grad) {
        stack.emplace_back(loss.get(), 0);
        seen.insert(loss.get());
    }
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    if (loss->requires_grad) {
        loss->grad_buffer()[0] += 1.0;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node* n = *it;
            if (n->propagate && !n->grad.empty()) n->propagate(*n);
        }
    }

    std::vector<Tensor> out;
    out.reserve(leaves.size());
    for (const auto& l : leaves) {
        if (l->grad.empty()) {
            out.emplace_back(l->value.shape());
        } else {
            require_finite(l->grad, "backward");
            out.push_back(l->grad);
        }
    }
    return out;
}

} // namespace scnn::ad
