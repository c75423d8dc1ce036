#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "stylecompat/graph.hpp"

namespace stylecompat {

struct LossConfig {
    double m_contrastive = 1.0;
    double m_rank = 0.5;
};

void validate(const LossConfig& config);

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b);

// Y=1: half squared distance. Y=0: half squared hinge on the margin.
double contrastive_loss(const std::vector<double>& x_i, const std::vector<double>& x_j, int y,
                        double m_contrastive);

double cross_entropy(const std::vector<double>& probs, std::size_t label);
double cross_entropy(const std::vector<std::pair<std::vector<double>, std::size_t>>& batch);

double categorical_loss(const std::vector<double>& x_i, const std::vector<double>& x_j, int y,
                        const std::vector<double>& probs_i, std::size_t label_i,
                        const std::vector<double>& probs_j, std::size_t label_j,
                        double m_contrastive);

double dot_similarity(const std::vector<double>& a, const std::vector<double>& b);

double hinge_rank_loss(const std::vector<double>& x_img, const std::vector<double>& x_text_correct,
                       const std::vector<std::vector<double>>& x_text_wrong, double m_rank);

// Graph counterparts used by training. The matched (y=1) branch is computed
// as half the squared-norm sum directly, keeping it smooth at zero distance.
NodeId build_pair_distance(Graph& g, NodeId x_i, NodeId x_j);
NodeId build_contrastive(Graph& g, NodeId x_i, NodeId x_j, int y, double m_contrastive);
NodeId build_cross_entropy(Graph& g, NodeId probs, std::size_t label);
NodeId build_hinge_rank(Graph& g, NodeId x_img, NodeId x_text_correct,
                        const std::vector<NodeId>& x_text_wrong, double m_rank);

}  // namespace stylecompat
