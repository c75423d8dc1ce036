#include "stylecompat/losses.hpp"

#include <cmath>

#include "stylecompat/errors.hpp"

namespace stylecompat {

namespace {

constexpr double kProbFloor = 1e-12;

void check_label(int y) {
    if (y != 0 && y != 1) throw ContractError("pair label must be 0 or 1");
}

}  // namespace

void validate(const LossConfig& c) {
    if (!(c.m_contrastive > 0.0)) throw ConfigError("m_contrastive must be positive");
    if (!(c.m_rank > 0.0)) throw ConfigError("m_rank must be positive");
}

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("euclidean_distance: lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double contrastive_loss(const std::vector<double>& x_i, const std::vector<double>& x_j, int y,
                        double m_contrastive) {
    check_label(y);
    double d = euclidean_distance(x_i, x_j);
    if (y == 1) return 0.5 * d * d;
    double gap = m_contrastive - d;
    return gap > 0.0 ? 0.5 * gap * gap : 0.0;
}

double cross_entropy(const std::vector<double>& probs, std::size_t label) {
    if (label >= probs.size()) throw ContractError("class label out of range");
    double p = probs[label];
    if (p < kProbFloor) p = kProbFloor;
    return -std::log(p);
}

double cross_entropy(const std::vector<std::pair<std::vector<double>, std::size_t>>& batch) {
    if (batch.empty()) throw InputError("cross_entropy batch is empty");
    double acc = 0.0;
    for (const auto& [probs, label] : batch) acc += cross_entropy(probs, label);
    return acc / static_cast<double>(batch.size());
}

double categorical_loss(const std::vector<double>& x_i, const std::vector<double>& x_j, int y,
                        const std::vector<double>& probs_i, std::size_t label_i,
                        const std::vector<double>& probs_j, std::size_t label_j,
                        double m_contrastive) {
    return contrastive_loss(x_i, x_j, y, m_contrastive) + cross_entropy(probs_i, label_i) +
           cross_entropy(probs_j, label_j);
}

double dot_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("dot_similarity: lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double hinge_rank_loss(const std::vector<double>& x_img, const std::vector<double>& x_text_correct,
                       const std::vector<std::vector<double>>& x_text_wrong, double m_rank) {
    if (x_text_wrong.empty()) throw InputError("hinge_rank_loss needs at least one wrong text");
    double s_correct = dot_similarity(x_img, x_text_correct);
    double acc = 0.0;
    for (const auto& wrong : x_text_wrong) {
        double term = m_rank - s_correct + dot_similarity(x_img, wrong);
        if (term > 0.0) acc += term;
    }
    return acc;
}

NodeId build_pair_distance(Graph& g, NodeId x_i, NodeId x_j) {
    return g.sqrt(g.sum(g.square(g.sub(x_i, x_j))));
}

NodeId build_contrastive(Graph& g, NodeId x_i, NodeId x_j, int y, double m_contrastive) {
    check_label(y);
    if (y == 1) return g.scale(0.5, g.sum(g.square(g.sub(x_i, x_j))));
    NodeId gap = g.sub(g.constant(m_contrastive), build_pair_distance(g, x_i, x_j));
    return g.scale(0.5, g.square(g.max_with_zero(gap)));
}

NodeId build_cross_entropy(Graph& g, NodeId probs, std::size_t label) {
    const Tensor& t = g.at(probs);
    if (t.rank() != 1 || label >= t.shape[0]) throw ContractError("class label out of range");
    std::vector<double> onehot(t.shape[0], 0.0);
    onehot[label] = 1.0;
    NodeId p = g.dot(probs, g.constant_vec(std::move(onehot)));
    // max(p, floor) via the hinge: max(p - floor, 0) + floor.
    NodeId floor = g.constant(kProbFloor);
    NodeId clamped = g.add(g.max_with_zero(g.sub(p, floor)), floor);
    return g.scale(-1.0, g.log(clamped));
}

NodeId build_hinge_rank(Graph& g, NodeId x_img, NodeId x_text_correct,
                        const std::vector<NodeId>& x_text_wrong, double m_rank) {
    if (x_text_wrong.empty()) throw InputError("hinge_rank_loss needs at least one wrong text");
    NodeId s_correct = g.dot(x_img, x_text_correct);
    std::vector<NodeId> terms;
    terms.reserve(x_text_wrong.size());
    for (NodeId wrong : x_text_wrong) {
        NodeId margin = g.add(g.sub(g.constant(m_rank), s_correct), g.dot(x_img, wrong));
        terms.push_back(g.max_with_zero(margin));
    }
    return g.sum(g.concat(terms));
}

}  // namespace stylecompat
