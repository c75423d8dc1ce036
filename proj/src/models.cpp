#include "stylecompat/models.hpp"

#include <algorithm>
#include <cmath>

#include "stylecompat/errors.hpp"
#include "stylecompat/kernels.hpp"

namespace stylecompat {

namespace {

std::size_t truncated_width(const ModelConfig& c) {
    return c.base_layers[*c.short_truncate_at - 1];
}

std::vector<double> affine(const Tensor& W, const Tensor& b, const std::vector<double>& x) {
    if (W.cols() != x.size()) throw ShapeError("affine input length does not match weight");
    std::vector<double> y(W.rows());
    kernels::matvec(W.values.data(), x.data(), b.values.data(), y.data(), W.rows(), W.cols());
    return y;
}

void tanh_inplace(std::vector<double>& v) {
    for (double& x : v) x = std::tanh(x);
}

std::vector<double> pool_groups(const std::vector<double>& v, std::size_t group) {
    std::vector<double> out(v.size() / group);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < group; ++j) acc += v[i * group + j];
        out[i] = acc / static_cast<double>(group);
    }
    return out;
}

// Base representation through `depth` layers (tanh after each).
std::vector<double> run_base(const std::vector<double>& features, const ParamMap& params,
                             const ModelConfig& config, std::size_t depth) {
    if (features.size() != config.input_dim) throw ShapeError("feature vector length mismatch");
    std::vector<double> h = features;
    for (std::size_t l = 0; l < depth; ++l) {
        const std::string prefix = "base." + std::to_string(l) + ".";
        h = affine(param(params, prefix + "W"), param(params, prefix + "b"), h);
        tanh_inplace(h);
    }
    return h;
}

void init_matrix(ParamMap& params, const std::string& name, std::size_t rows, std::size_t cols,
                 Rng& rng) {
    double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t = Tensor::zeros({rows, cols}, true);
    for (double& v : t.values) v = rng.uniform(-s, s);
    params.emplace(name, std::move(t));
}

void init_bias(ParamMap& params, const std::string& name, std::size_t n, double fill = 0.0) {
    Tensor t = Tensor::zeros({n}, true);
    std::fill(t.values.begin(), t.values.end(), fill);
    params.emplace(name, std::move(t));
}

}  // namespace

const Tensor& param(const ParamMap& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw ContractError("missing parameter '" + name + "'");
    return it->second;
}

void validate(const ModelConfig& c) {
    if (c.input_dim < 1) throw ConfigError("input_dim must be at least 1");
    if (c.base_layers.empty()) throw ConfigError("base_layers must be non-empty");
    for (std::size_t w : c.base_layers)
        if (w < 1) throw ConfigError("base layer widths must be at least 1");
    if (c.embedding_dim < 1 || c.num_styles < 1 || c.num_types < 1 || c.text_vocab_size < 1 ||
        c.token_embed_dim < 1 || c.lstm_hidden < 1 || c.joint_dim < 1)
        throw ConfigError("all model dimensions must be at least 1");
    if (c.short_truncate_at) {
        std::size_t t = *c.short_truncate_at;
        if (t < 1 || t >= c.base_layers.size())
            throw ConfigError("short_truncate_at must lie in [1, number of base layers)");
        if (c.short_pool_group < 1) throw ConfigError("short_pool_group must be at least 1");
        if (truncated_width(c) % c.short_pool_group != 0)
            throw ConfigError("short_pool_group must divide the truncated layer width");
    }
}

bool is_short(const ModelConfig& c) { return c.short_truncate_at.has_value(); }

std::size_t base_output_dim(const ModelConfig& c) {
    if (is_short(c)) return truncated_width(c) / c.short_pool_group;
    return c.base_layers.back();
}

ParamMap init_params(const ModelConfig& c, Rng& rng) {
    validate(c);
    ParamMap params;

    std::size_t depth = is_short(c) ? *c.short_truncate_at : c.base_layers.size();
    std::size_t prev = c.input_dim;
    for (std::size_t l = 0; l < depth; ++l) {
        std::size_t w = c.base_layers[l];
        const std::string prefix = "base." + std::to_string(l) + ".";
        init_matrix(params, prefix + "W", w, prev, rng);
        init_bias(params, prefix + "b", w);
        prev = w;
    }

    std::size_t rep = base_output_dim(c);
    init_matrix(params, "E.W", c.embedding_dim, rep, rng);
    init_bias(params, "E.b", c.embedding_dim);
    init_matrix(params, "C.W", c.num_styles, rep, rng);
    init_bias(params, "C.b", c.num_styles);

    init_matrix(params, "token_table", c.text_vocab_size, c.token_embed_dim, rng);
    for (const char* gate : {"i", "f", "o", "c"}) {
        init_matrix(params, std::string("lstm.W") + gate, c.lstm_hidden, c.token_embed_dim, rng);
        init_matrix(params, std::string("lstm.U") + gate, c.lstm_hidden, c.lstm_hidden, rng);
        init_bias(params, std::string("lstm.b") + gate, c.lstm_hidden,
                  gate[0] == 'f' ? 1.0 : 0.0);
    }
    init_matrix(params, "visual_proj.W", c.joint_dim, c.embedding_dim, rng);
    init_bias(params, "visual_proj.b", c.joint_dim);
    init_matrix(params, "text_proj.W", c.joint_dim, c.lstm_hidden, rng);
    init_bias(params, "text_proj.b", c.joint_dim);
    return params;
}

std::vector<double> embed(const std::vector<double>& features, const ParamMap& params,
                          const ModelConfig& config) {
    std::vector<double> h = run_base(features, params, config, config.base_layers.size());
    return affine(param(params, "E.W"), param(params, "E.b"), h);
}

std::vector<double> embed_short(const std::vector<double>& features, const ParamMap& params,
                                const ModelConfig& config) {
    if (!is_short(config)) throw ConfigError("embed_short requires short_truncate_at");
    std::vector<double> h = run_base(features, params, config, *config.short_truncate_at);
    h = pool_groups(h, config.short_pool_group);
    return affine(param(params, "E.W"), param(params, "E.b"), h);
}

std::vector<double> embed_item(const std::vector<double>& features, const ParamMap& params,
                               const ModelConfig& config) {
    return is_short(config) ? embed_short(features, params, config)
                            : embed(features, params, config);
}

std::vector<double> classify(const std::vector<double>& features, const ParamMap& params,
                             const ModelConfig& config) {
    std::size_t depth = is_short(config) ? *config.short_truncate_at : config.base_layers.size();
    std::vector<double> h = run_base(features, params, config, depth);
    if (is_short(config)) h = pool_groups(h, config.short_pool_group);
    std::vector<double> logits = affine(param(params, "C.W"), param(params, "C.b"), h);

    double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        total += v;
    }
    for (double& v : logits) v /= total;
    return logits;
}

std::vector<double> text_encode(const std::vector<std::uint32_t>& tokens, const ParamMap& params,
                                const ModelConfig& config) {
    if (tokens.empty()) throw InputError("token sequence is empty");
    const Tensor& table = param(params, "token_table");
    const std::size_t d = config.token_embed_dim;
    const std::size_t hdim = config.lstm_hidden;

    std::vector<double> h(hdim, 0.0), cell(hdim, 0.0);
    std::vector<double> gi(hdim), gf(hdim), go(hdim), gc(hdim), scratch(hdim);

    auto gate = [&](const char* g, const std::vector<double>& e, std::vector<double>& out) {
        const Tensor& W = param(params, std::string("lstm.W") + g);
        const Tensor& U = param(params, std::string("lstm.U") + g);
        const Tensor& b = param(params, std::string("lstm.b") + g);
        kernels::matvec(W.values.data(), e.data(), b.values.data(), out.data(), hdim, d);
        kernels::matvec(U.values.data(), h.data(), nullptr, scratch.data(), hdim, hdim);
        for (std::size_t i = 0; i < hdim; ++i) out[i] += scratch[i];
    };

    for (std::uint32_t tok : tokens) {
        if (tok >= config.text_vocab_size) throw InputError("token id outside vocabulary");
        std::vector<double> e(table.values.begin() + static_cast<std::ptrdiff_t>(tok * d),
                              table.values.begin() + static_cast<std::ptrdiff_t>((tok + 1) * d));
        gate("i", e, gi);
        gate("f", e, gf);
        gate("o", e, go);
        gate("c", e, gc);
        for (std::size_t i = 0; i < hdim; ++i) {
            double ig = 1.0 / (1.0 + std::exp(-gi[i]));
            double fg = 1.0 / (1.0 + std::exp(-gf[i]));
            double og = 1.0 / (1.0 + std::exp(-go[i]));
            double cand = std::tanh(gc[i]);
            cell[i] = fg * cell[i] + ig * cand;
            h[i] = og * std::tanh(cell[i]);
        }
    }
    return h;
}

std::vector<double> project_joint(const std::vector<double>& x, JointSide which,
                                  const ParamMap& params) {
    const char* prefix = which == JointSide::visual ? "visual_proj." : "text_proj.";
    return affine(param(params, std::string(prefix) + "W"),
                  param(params, std::string(prefix) + "b"), x);
}

ParamNodes lift_params(Graph& g, const ParamMap& params) {
    ParamNodes nodes;
    for (const auto& [name, t] : params) nodes.emplace(name, g.leaf(t));
    return nodes;
}

GradMap collect_grads(const Graph& g, const ParamNodes& nodes) {
    GradMap grads;
    for (const auto& [name, id] : nodes) {
        const std::vector<double>& grad = g.grad(id);
        if (grad.empty())
            grads.emplace(name, std::vector<double>(g.at(id).numel(), 0.0));
        else
            grads.emplace(name, grad);
    }
    return grads;
}

namespace {

NodeId node(const ParamNodes& nodes, const std::string& name) {
    auto it = nodes.find(name);
    if (it == nodes.end()) throw ContractError("missing parameter node '" + name + "'");
    return it->second;
}

NodeId build_affine(Graph& g, NodeId W, NodeId b, NodeId x) {
    return g.add(g.matmul(W, x), b);
}

}  // namespace

NodeId build_base(Graph& g, NodeId features, const ParamNodes& nodes, const ModelConfig& config) {
    std::size_t depth = is_short(config) ? *config.short_truncate_at : config.base_layers.size();
    NodeId h = features;
    for (std::size_t l = 0; l < depth; ++l) {
        const std::string prefix = "base." + std::to_string(l) + ".";
        h = g.tanh(build_affine(g, node(nodes, prefix + "W"), node(nodes, prefix + "b"), h));
    }
    if (is_short(config)) {
        std::size_t group = config.short_pool_group;
        std::size_t in = truncated_width(config);
        std::size_t out = in / group;
        std::vector<double> pool(out * in, 0.0);
        for (std::size_t i = 0; i < out; ++i)
            for (std::size_t j = 0; j < group; ++j)
                pool[i * in + i * group + j] = 1.0 / static_cast<double>(group);
        h = g.matmul(g.leaf({out, in}, std::move(pool)), h);
    }
    return h;
}

NodeId build_embed(Graph& g, NodeId features, const ParamNodes& nodes, const ModelConfig& config) {
    NodeId h = build_base(g, features, nodes, config);
    return build_affine(g, node(nodes, "E.W"), node(nodes, "E.b"), h);
}

NodeId build_class_logits(Graph& g, NodeId features, const ParamNodes& nodes,
                          const ModelConfig& config) {
    NodeId h = build_base(g, features, nodes, config);
    return build_affine(g, node(nodes, "C.W"), node(nodes, "C.b"), h);
}

NodeId hadamard(Graph& g, NodeId a, NodeId b) {
    NodeId cross = g.square(g.add(a, b));
    return g.scale(0.5, g.sub(g.sub(cross, g.square(a)), g.square(b)));
}

NodeId build_text_encode(Graph& g, const std::vector<std::uint32_t>& tokens,
                         const ParamNodes& nodes, const ModelConfig& config) {
    if (tokens.empty()) throw InputError("token sequence is empty");
    NodeId table = node(nodes, "token_table");

    NodeId h = g.constant_vec(std::vector<double>(config.lstm_hidden, 0.0));
    NodeId cell = h;
    bool first = true;

    for (std::uint32_t tok : tokens) {
        if (tok >= config.text_vocab_size) throw InputError("token id outside vocabulary");
        std::vector<double> onehot(config.text_vocab_size, 0.0);
        onehot[tok] = 1.0;
        NodeId e = g.matmul(g.constant_vec(std::move(onehot)), table);

        auto gate_pre = [&](const char* gn) {
            NodeId pre = build_affine(g, node(nodes, std::string("lstm.W") + gn),
                                      node(nodes, std::string("lstm.b") + gn), e);
            if (!first) pre = g.add(pre, g.matmul(node(nodes, std::string("lstm.U") + gn), h));
            return pre;
        };
        NodeId ig = g.sigmoid(gate_pre("i"));
        NodeId fg = g.sigmoid(gate_pre("f"));
        NodeId og = g.sigmoid(gate_pre("o"));
        NodeId cand = g.tanh(gate_pre("c"));

        cell = first ? hadamard(g, ig, cand)
                     : g.add(hadamard(g, fg, cell), hadamard(g, ig, cand));
        h = hadamard(g, og, g.tanh(cell));
        first = false;
    }
    return h;
}

NodeId build_project_joint(Graph& g, NodeId x, JointSide which, const ParamNodes& nodes) {
    const std::string prefix = which == JointSide::visual ? "visual_proj." : "text_proj.";
    return build_affine(g, node(nodes, prefix + "W"), node(nodes, prefix + "b"), x);
}

}  // namespace stylecompat
