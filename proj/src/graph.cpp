#include "stylecompat/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stylecompat/kernels.hpp"

namespace stylecompat {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::leaf: return "leaf";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::scale: return "scale";
        case OpKind::relu: return "relu";
        case OpKind::tanh_op: return "tanh";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::softmax: return "softmax";
        case OpKind::log_op: return "log";
        case OpKind::sum: return "sum";
        case OpKind::mean: return "mean";
        case OpKind::square: return "square";
        case OpKind::sqrt_op: return "sqrt";
        case OpKind::concat: return "concat";
        case OpKind::dot: return "dot";
        case OpKind::max_with_zero: return "max_with_zero";
    }
    return "?";
}

void Graph::check_finite(const Tensor& t, OpKind kind) const {
    for (double v : t.values)
        if (!std::isfinite(v))
            throw NumericsError(std::string("non-finite value produced by op '") +
                                op_name(kind) + "'");
}

NodeId Graph::leaf(Tensor t) {
    check_finite(t, OpKind::leaf);
    Node n;
    n.t = std::move(t);
    n.kind = OpKind::leaf;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::leaf(std::vector<std::size_t> shape, std::vector<double> values,
                   bool requires_grad) {
    return leaf(Tensor(std::move(shape), std::move(values), requires_grad));
}

NodeId Graph::constant(double v) { return leaf(Tensor::scalar(v)); }

NodeId Graph::constant_vec(std::vector<double> values) {
    std::size_t n = values.size();
    return leaf(Tensor({n}, std::move(values)));
}

double Graph::value_scalar(NodeId id) const {
    const Tensor& t = nodes_[id].t;
    if (!t.is_scalar()) throw ContractError("scalar value requested from non-scalar node");
    return t.values[0];
}

NodeId Graph::apply(OpKind kind, const std::vector<NodeId>& parents, double attr) {
    auto shape_fail = [&](const char* what) -> ShapeError {
        return ShapeError(std::string(op_name(kind)) + ": " + what);
    };

    for (NodeId p : parents)
        if (p >= nodes_.size()) throw ContractError("parent node index out of range");

    Tensor out;
    switch (kind) {
        case OpKind::leaf:
            throw ContractError("leaf nodes are created via leaf()");

        case OpKind::matmul: {
            if (parents.size() != 2) throw shape_fail("expects two inputs");
            const Tensor& a = nodes_[parents[0]].t;
            const Tensor& b = nodes_[parents[1]].t;
            if (a.rank() == 2 && b.rank() == 2) {
                if (a.shape[1] != b.shape[0]) throw shape_fail("inner dimensions differ");
                out = Tensor::zeros({a.shape[0], b.shape[1]});
                kernels::matmul(a.values.data(), b.values.data(), out.values.data(),
                                a.shape[0], a.shape[1], b.shape[1]);
            } else if (a.rank() == 2 && b.rank() == 1) {
                if (a.shape[1] != b.shape[0]) throw shape_fail("matrix-vector dimensions differ");
                out = Tensor::zeros({a.shape[0]});
                kernels::matvec(a.values.data(), b.values.data(), nullptr, out.values.data(),
                                a.shape[0], a.shape[1]);
            } else if (a.rank() == 1 && b.rank() == 2) {
                if (a.shape[0] != b.shape[0]) throw shape_fail("vector-matrix dimensions differ");
                out = Tensor::zeros({b.shape[1]});
                kernels::matvec_t(b.values.data(), a.values.data(), out.values.data(),
                                  b.shape[0], b.shape[1]);
            } else {
                throw shape_fail("rank combination unsupported");
            }
            break;
        }

        case OpKind::add:
        case OpKind::sub: {
            if (parents.size() != 2) throw shape_fail("expects two inputs");
            const Tensor& a = nodes_[parents[0]].t;
            const Tensor& b = nodes_[parents[1]].t;
            if (!a.same_shape(b)) throw shape_fail("shapes must match exactly");
            out = Tensor::zeros(a.shape);
            if (kind == OpKind::add)
                for (std::size_t i = 0; i < a.values.size(); ++i)
                    out.values[i] = a.values[i] + b.values[i];
            else
                for (std::size_t i = 0; i < a.values.size(); ++i)
                    out.values[i] = a.values[i] - b.values[i];
            break;
        }

        case OpKind::scale: {
            if (parents.size() != 1) throw shape_fail("expects one input");
            const Tensor& a = nodes_[parents[0]].t;
            out = Tensor::zeros(a.shape);
            for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = attr * a.values[i];
            break;
        }

        case OpKind::relu:
        case OpKind::max_with_zero: {
            if (parents.size() != 1) throw shape_fail("expects one input");
            const Tensor& a = nodes_[parents[0]].t;
            out = Tensor::zeros(a.shape);
            for (std::size_t i = 0; i < a.values.size(); ++i) {
                out.values[i] = a.values[i] > 0.0 ? a.values[i] : 0.0;
                kink_distance_ = std::min(kink_distance_, std::abs(a.values[i]));
            }
            break;
        }

        case OpKind::tanh_op: {
            if (parents.size() != 1) throw shape_fail("expects one input");
            const Tensor& a = nodes_[parents[0]].t;
            out = Tensor::zeros(a.shape);
            for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = std::tanh(a.values[i]);
            break;
        }

        case OpKind::sigmoid: {
            if (parents.size() != 1) throw shape_fail("expects one input");
            const Tensor& a = nodes_[parents[0]].t;
            out = Tensor::zeros(a.shape);
            for (std::size_t i = 0; i < a.values.size(); ++i)
                out.values[i] = 1.0 / (1.0 + std::exp(-a.values[i]));
            break;
        }

        case OpKind::softmax: {
            if (parents.size() != 1) throw shape_fail("expects one input");
            const Tensor& a = nodes_[parents[0]].t;
            if (a.rank() != 1) throw shape_fail("defined on 1-D inputs");
            out = Tensor::zeros(a.shape);
            double mx = *std::max_element(a.values.begin(), a.values.end());
            double total = 0.0;
            for (std::size_t i = 0; i < a.values.size(); ++i) {
                out.values[i] = std::exp(a.values[i] - mx);
                total += out.values[i];
            }
            for (double& v : out.values) v /= total;
            break;
        }

        case OpKind::log_op: {
            if (parents.size() != 1) throw shape_fail("expects one input");
            const Tensor& a = nodes_[parents[0]].t;
            out = Tensor::zeros(a.shape);
            for (std::size_t i = 0; i < a.values.size(); ++i) {
                if (a.values[i] <= 0.0) throw DomainError("log of non-positive value");
                out.values[i] = std::log(a.values[i]);
            }
            break;
        }

        case OpKind::sum:
        case OpKind::mean: {
            if (parents.size() != 1) throw shape_fail("expects one input");
            const Tensor& a = nodes_[parents[0]].t;
            double acc = 0.0;
            for (double v : a.values) acc += v;
            if (kind == OpKind::mean) acc /= static_cast<double>(a.values.size());
            out = Tensor::scalar(acc);
            break;
        }

        case OpKind::square: {
            if (parents.size() != 1) throw shape_fail("expects one input");
            const Tensor& a = nodes_[parents[0]].t;
            out = Tensor::zeros(a.shape);
            for (std::size_t i = 0; i < a.values.size(); ++i)
                out.values[i] = a.values[i] * a.values[i];
            break;
        }

        case OpKind::sqrt_op: {
            if (parents.size() != 1) throw shape_fail("expects one input");
            const Tensor& a = nodes_[parents[0]].t;
            out = Tensor::zeros(a.shape);
            for (std::size_t i = 0; i < a.values.size(); ++i) {
                if (a.values[i] < 0.0) throw DomainError("sqrt of negative value");
                out.values[i] = std::sqrt(a.values[i]);
                kink_distance_ = std::min(kink_distance_, a.values[i]);
            }
            break;
        }

        case OpKind::concat: {
            if (parents.empty()) throw shape_fail("expects at least one input");
            std::size_t total = 0;
            for (NodeId p : parents) {
                const Tensor& t = nodes_[p].t;
                if (t.rank() != 1) throw shape_fail("defined on 1-D inputs");
                total += t.values.size();
            }
            out = Tensor::zeros({total});
            std::size_t off = 0;
            for (NodeId p : parents) {
                const Tensor& t = nodes_[p].t;
                std::copy(t.values.begin(), t.values.end(), out.values.begin() + off);
                off += t.values.size();
            }
            break;
        }

        case OpKind::dot: {
            if (parents.size() != 2) throw shape_fail("expects two inputs");
            const Tensor& a = nodes_[parents[0]].t;
            const Tensor& b = nodes_[parents[1]].t;
            if (a.rank() != 1 || b.rank() != 1 || a.shape[0] != b.shape[0])
                throw shape_fail("expects 1-D inputs of equal length");
            double acc = 0.0;
            for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * b.values[i];
            out = Tensor::scalar(acc);
            break;
        }
    }

    check_finite(out, kind);
    for (NodeId p : parents) out.requires_grad |= nodes_[p].t.requires_grad;

    Node n;
    n.t = std::move(out);
    n.kind = kind;
    n.parents = parents;
    n.attr = attr;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Graph::backward(NodeId root) {
    if (root >= nodes_.size()) throw ContractError("backward root out of range");
    if (!nodes_[root].t.is_scalar()) throw ContractError("backward requires a scalar root");

    // Reset and seed. Grad buffers exist only for nodes on a grad path.
    for (Node& n : nodes_) n.t.grad.clear();
    if (!nodes_[root].t.requires_grad) return;
    nodes_[root].t.grad.assign(1, 1.0);

    auto ensure_grad = [&](NodeId id) -> std::vector<double>& {
        Tensor& t = nodes_[id].t;
        if (t.grad.empty()) t.grad.assign(t.numel(), 0.0);
        return t.grad;
    };

    for (std::size_t idx = root + 1; idx-- > 0;) {
        Node& n = nodes_[idx];
        if (n.kind == OpKind::leaf || n.t.grad.empty() || !n.t.requires_grad) continue;
        const std::vector<double>& g = n.t.grad;

        switch (n.kind) {
            case OpKind::leaf:
                break;

            case OpKind::matmul: {
                const Tensor& a = nodes_[n.parents[0]].t;
                const Tensor& b = nodes_[n.parents[1]].t;
                if (a.rank() == 2 && b.rank() == 2) {
                    std::size_t m = a.shape[0], k = a.shape[1], nn = b.shape[1];
                    if (a.requires_grad)
                        kernels::matmul_bt_acc(g.data(), b.values.data(),
                                               ensure_grad(n.parents[0]).data(), m, nn, k);
                    if (b.requires_grad)
                        kernels::matmul_at_acc(a.values.data(), g.data(),
                                               ensure_grad(n.parents[1]).data(), m, k, nn);
                } else if (a.rank() == 2 && b.rank() == 1) {
                    std::size_t m = a.shape[0], k = a.shape[1];
                    if (a.requires_grad)
                        kernels::outer_acc(g.data(), b.values.data(),
                                           ensure_grad(n.parents[0]).data(), m, k);
                    if (b.requires_grad) {
                        std::vector<double> tmp(k);
                        kernels::matvec_t(a.values.data(), g.data(), tmp.data(), m, k);
                        auto& gb = ensure_grad(n.parents[1]);
                        for (std::size_t i = 0; i < k; ++i) gb[i] += tmp[i];
                    }
                } else {  // 1-D times 2-D
                    std::size_t m = b.shape[0], nn = b.shape[1];
                    if (a.requires_grad) {
                        std::vector<double> tmp(m);
                        kernels::matvec(b.values.data(), g.data(), nullptr, tmp.data(), m, nn);
                        auto& ga = ensure_grad(n.parents[0]);
                        for (std::size_t i = 0; i < m; ++i) ga[i] += tmp[i];
                    }
                    if (b.requires_grad)
                        kernels::outer_acc(a.values.data(), g.data(),
                                           ensure_grad(n.parents[1]).data(), m, nn);
                }
                break;
            }

            case OpKind::add:
            case OpKind::sub: {
                double sign = n.kind == OpKind::add ? 1.0 : -1.0;
                if (nodes_[n.parents[0]].t.requires_grad) {
                    auto& ga = ensure_grad(n.parents[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (nodes_[n.parents[1]].t.requires_grad) {
                    auto& gb = ensure_grad(n.parents[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
                }
                break;
            }

            case OpKind::scale: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                auto& gp = ensure_grad(n.parents[0]);
                for (std::size_t i = 0; i < g.size(); ++i) gp[i] += n.attr * g[i];
                break;
            }

            case OpKind::relu:
            case OpKind::max_with_zero: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                const Tensor& a = nodes_[n.parents[0]].t;
                auto& gp = ensure_grad(n.parents[0]);
                // Subgradient 0 at the kink.
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (a.values[i] > 0.0) gp[i] += g[i];
                break;
            }

            case OpKind::tanh_op: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                auto& gp = ensure_grad(n.parents[0]);
                for (std::size_t i = 0; i < g.size(); ++i)
                    gp[i] += g[i] * (1.0 - n.t.values[i] * n.t.values[i]);
                break;
            }

            case OpKind::sigmoid: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                auto& gp = ensure_grad(n.parents[0]);
                for (std::size_t i = 0; i < g.size(); ++i)
                    gp[i] += g[i] * n.t.values[i] * (1.0 - n.t.values[i]);
                break;
            }

            case OpKind::softmax: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                auto& gp = ensure_grad(n.parents[0]);
                double gy = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * n.t.values[i];
                for (std::size_t i = 0; i < g.size(); ++i)
                    gp[i] += n.t.values[i] * (g[i] - gy);
                break;
            }

            case OpKind::log_op: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                const Tensor& a = nodes_[n.parents[0]].t;
                auto& gp = ensure_grad(n.parents[0]);
                for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] / a.values[i];
                break;
            }

            case OpKind::sum: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                auto& gp = ensure_grad(n.parents[0]);
                for (double& v : gp) v += g[0];
                break;
            }

            case OpKind::mean: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                auto& gp = ensure_grad(n.parents[0]);
                double s = g[0] / static_cast<double>(gp.size());
                for (double& v : gp) v += s;
                break;
            }

            case OpKind::square: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                const Tensor& a = nodes_[n.parents[0]].t;
                auto& gp = ensure_grad(n.parents[0]);
                for (std::size_t i = 0; i < g.size(); ++i) gp[i] += 2.0 * a.values[i] * g[i];
                break;
            }

            case OpKind::sqrt_op: {
                if (!nodes_[n.parents[0]].t.requires_grad) break;
                const Tensor& a = nodes_[n.parents[0]].t;
                auto& gp = ensure_grad(n.parents[0]);
                // Subgradient 0 at x == 0, mirroring the max_with_zero rule.
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (a.values[i] > 0.0) gp[i] += g[i] * 0.5 / n.t.values[i];
                break;
            }

            case OpKind::concat: {
                std::size_t off = 0;
                for (NodeId p : n.parents) {
                    Tensor& pt = nodes_[p].t;
                    if (pt.requires_grad) {
                        auto& gp = ensure_grad(p);
                        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
                    }
                    off += pt.numel();
                }
                break;
            }

            case OpKind::dot: {
                const Tensor& a = nodes_[n.parents[0]].t;
                const Tensor& b = nodes_[n.parents[1]].t;
                if (a.requires_grad) {
                    auto& ga = ensure_grad(n.parents[0]);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * b.values[i];
                }
                if (b.requires_grad) {
                    auto& gb = ensure_grad(n.parents[1]);
                    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[0] * a.values[i];
                }
                break;
            }

            default:
                throw ContractError("unhandled op in backward");
        }
    }
}

FdCheckResult finite_difference_check(const LossFn& loss, const ParamMap& params,
                                      double epsilon, std::size_t n_samples, Rng& rng) {
    if (epsilon <= 0.0) throw ContractError("epsilon must be positive");

    LossProbe center = loss(params, true);
    if (!std::isfinite(center.value)) throw NumericsError("loss value is not finite");

    // Flattened view of all parameter entries for uniform sampling.
    struct Entry {
        const std::string* name;
        std::size_t offset;
    };
    std::vector<std::pair<const std::string*, std::size_t>> spans;
    std::size_t total = 0;
    for (const auto& [name, t] : params) {
        spans.emplace_back(&name, t.numel());
        total += t.numel();
    }
    if (total == 0) throw ContractError("no parameters to check");

    FdCheckResult result;
    const std::size_t max_attempts = n_samples * 50 + 100;
    ParamMap work = params;

    for (std::size_t attempt = 0; attempt < max_attempts && result.checked < n_samples;
         ++attempt) {
        std::size_t flat = rng.below(total);
        const std::string* name = nullptr;
        std::size_t offset = 0;
        for (const auto& [nm, count] : spans) {
            if (flat < count) {
                name = nm;
                offset = flat;
                break;
            }
            flat -= count;
        }

        Tensor& t = work.at(*name);
        const double saved = t.values[offset];

        t.values[offset] = saved + epsilon;
        LossProbe up = loss(work, false);
        t.values[offset] = saved - epsilon;
        LossProbe down = loss(work, false);
        t.values[offset] = saved;

        // Discard samples whose forward pass came within epsilon of a kink;
        // the two-sided difference straddles the non-differentiable point.
        double kink = std::min({center.kink_distance, up.kink_distance, down.kink_distance});
        if (kink < 4.0 * epsilon) {
            ++result.skipped;
            continue;
        }

        double numeric = (up.value - down.value) / (2.0 * epsilon);
        double analytic = 0.0;
        auto it = center.grads.find(*name);
        if (it != center.grads.end()) analytic = it->second[offset];

        double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        double rel = std::abs(analytic - numeric) / denom;
        result.max_rel_error = std::max(result.max_rel_error, rel);
        ++result.checked;
    }

    return result;
}

}  // namespace stylecompat
