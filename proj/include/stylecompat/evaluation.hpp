#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stylecompat/dataset.hpp"
#include "stylecompat/models.hpp"

namespace stylecompat {

// Monotone map from embedding distance to a (0, 1] compatibility score.
double compatibility_score(double distance);

// Mann-Whitney AUC with ties counted as one half, computed from average
// ranks held in integer half-units so the result matches the brute-force
// pairwise count bit for bit.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct ScoredPair {
    double score = 0.0;
    int label = 0;
    std::uint32_t style_i = 0;
    std::uint32_t style_j = 0;
};

struct PerStyleAuc {
    std::map<std::uint32_t, double> by_style;
    std::vector<std::uint32_t> omitted;  // styles lacking one of the classes
};

// Positives count toward their shared style; negatives toward the style of
// each endpoint.
PerStyleAuc per_style_auc(const std::vector<ScoredPair>& pairs);

double recall_at_k(const std::vector<std::vector<std::string>>& ranked_ids,
                   const std::vector<std::set<std::string>>& relevant, std::size_t k);

struct KdeCurve {
    std::vector<double> x;
    std::vector<double> density;
};

struct KdePair {
    KdeCurve pos;
    KdeCurve neg;
    double bandwidth_pos = 0.0;
    double bandwidth_neg = 0.0;
};

// Gaussian kernels on a shared 512-point grid spanning both samples plus
// four bandwidths of margin. bandwidth = 0 selects Silverman's rule with a
// floor of 1e-6.
KdePair distance_kde(const std::vector<double>& pos_distances,
                     const std::vector<double>& neg_distances, double bandwidth = 0.0);

struct DistanceSummary {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

struct EvaluationReport {
    double auc_overall = 0.0;
    PerStyleAuc per_style;
    std::map<std::size_t, double> recall_at;
    DistanceSummary pos_distances;
    DistanceSummary neg_distances;
    KdePair kde;
};

// Embeds every item referenced by the pairs once, scores the pairs, and
// assembles the full report.
EvaluationReport evaluate_pairs(const Dataset& ds, const std::vector<PairSample>& pairs,
                                const ParamMap& params, const ModelConfig& config);

// Distances for the given pairs under the model, ordered as the input.
std::vector<double> pair_distances(const Dataset& ds, const std::vector<PairSample>& pairs,
                                   const ParamMap& params, const ModelConfig& config);

// Text report, key=value file, and the two KDE curves as (x, density) tables:
// out_prefix + {".txt", ".kv", ".kde_pos.tsv", ".kde_neg.tsv"}.
void write_report(const EvaluationReport& report, const std::string& out_prefix);

}  // namespace stylecompat
