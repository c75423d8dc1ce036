#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stylecompat/dataset.hpp"
#include "stylecompat/tensor.hpp"

namespace stylecompat {

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;  // row-major intensities
};

struct PHash {
    std::uint64_t bits = 0;
};

// Mean-pool resize to 32x32, 2-D DCT-II, top-left 8x8 block, bits set by
// comparison against the median of the 63 non-DC coefficients (DC bit is 0).
// Invariant under positive scaling of the intensities.
PHash phash(const Image& image);
int hamming(PHash a, PHash b);

struct RemovalRecord {
    std::string id;
    std::string cause;    // duplicate-same-style | duplicate-cross-style | outlier
    std::string partner;  // kept or representative id for duplicates, empty for outliers
    double value = 0.0;   // Hamming distance for duplicates, softmax score for outliers
};

struct CurationResult {
    std::vector<ItemRecord> kept;
    std::vector<RemovalRecord> removals;
};

// Duplicate clusters are the transitive closure of pairs with Hamming
// distance <= threshold. All styles equal: keep the lexicographically
// smallest id. Mixed styles: remove the whole cluster.
CurationResult dedup(const std::vector<ItemRecord>& items, const std::vector<PHash>& hashes,
                     int threshold);

// Furniture-type softmax classifier used for outlier scoring.
struct TypeClassifier {
    Tensor W;  // num_types x feature_dim
    Tensor b;  // num_types
};

TypeClassifier train_type_classifier(const std::vector<ItemRecord>& items,
                                     std::size_t feature_dim, std::size_t num_types,
                                     std::size_t iterations = 200, double lr = 0.5);
std::vector<double> type_probs(const TypeClassifier& clf, const std::vector<double>& features);

// Removes floor(removal_fraction * n) items with the lowest classifier score
// for their labeled furniture type; ties broken by id.
CurationResult outlier_filter(const std::vector<ItemRecord>& items, const TypeClassifier& clf,
                              double removal_fraction);

struct SplitOutcome {
    std::vector<ItemRecord> items;
    std::vector<std::string> warnings;
};

// Stratified by (style, furniture_type) cell with largest-remainder rounding;
// cells smaller than 3 go wholly to train with a warning.
SplitOutcome split(const std::vector<ItemRecord>& items, const std::array<double, 3>& ratios,
                   std::uint64_t seed);

void write_removal_log(const std::vector<RemovalRecord>& removals, const std::string& path);

}  // namespace stylecompat
