#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stylecompat/graph.hpp"
#include "stylecompat/rng.hpp"
#include "stylecompat/tensor.hpp"

namespace stylecompat {

// One config describes one network variant. When short_truncate_at is set the
// base runs only through that many layers and is mean-pooled over groups of
// short_pool_group before E; otherwise the full stack is used.
struct ModelConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> base_layers;
    std::optional<std::size_t> short_truncate_at;
    std::size_t short_pool_group = 2;
    std::size_t embedding_dim = 256;
    std::size_t num_styles = 1;
    std::size_t num_types = 1;
    std::size_t text_vocab_size = 1;
    std::size_t token_embed_dim = 300;
    std::size_t lstm_hidden = 300;
    std::size_t joint_dim = 64;
};

void validate(const ModelConfig& config);
bool is_short(const ModelConfig& config);
// Width of the representation E consumes: last hidden width, or the pooled
// truncated width for the short variant.
std::size_t base_output_dim(const ModelConfig& config);

// Weights uniform in [-s, s], s = sqrt(6 / (fan_in + fan_out)); biases zero
// except the LSTM forget gate bias, which starts at 1.
ParamMap init_params(const ModelConfig& config, Rng& rng);

std::vector<double> embed(const std::vector<double>& features, const ParamMap& params,
                          const ModelConfig& config);
std::vector<double> embed_short(const std::vector<double>& features, const ParamMap& params,
                                const ModelConfig& config);
// Variant dispatch used by training and evaluation.
std::vector<double> embed_item(const std::vector<double>& features, const ParamMap& params,
                               const ModelConfig& config);
std::vector<double> classify(const std::vector<double>& features, const ParamMap& params,
                             const ModelConfig& config);
std::vector<double> text_encode(const std::vector<std::uint32_t>& tokens, const ParamMap& params,
                                const ModelConfig& config);

enum class JointSide { visual, text };
std::vector<double> project_joint(const std::vector<double>& x, JointSide which,
                                  const ParamMap& params);

// Graph-side builders, mirroring the plain paths on the same kernels so the
// trained network and the inference network are one implementation family.
using ParamNodes = std::map<std::string, NodeId>;

ParamNodes lift_params(Graph& g, const ParamMap& params);
GradMap collect_grads(const Graph& g, const ParamNodes& nodes);

NodeId build_base(Graph& g, NodeId features, const ParamNodes& nodes, const ModelConfig& config);
NodeId build_embed(Graph& g, NodeId features, const ParamNodes& nodes, const ModelConfig& config);
NodeId build_class_logits(Graph& g, NodeId features, const ParamNodes& nodes,
                          const ModelConfig& config);
NodeId build_text_encode(Graph& g, const std::vector<std::uint32_t>& tokens,
                         const ParamNodes& nodes, const ModelConfig& config);
NodeId build_project_joint(Graph& g, NodeId x, JointSide which, const ParamNodes& nodes);

// Elementwise product composed from square/add/sub/scale; exact in exact
// arithmetic via the polarization identity.
NodeId hadamard(Graph& g, NodeId a, NodeId b);

const Tensor& param(const ParamMap& params, const std::string& name);

}  // namespace stylecompat
