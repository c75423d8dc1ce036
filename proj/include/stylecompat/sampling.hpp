#pragma once

#include <cstdint>
#include <vector>

#include "stylecompat/dataset.hpp"

namespace stylecompat {

inline constexpr std::size_t kVteNegatives = 16;

// Splits `total` into one count per weight, proportional with largest-remainder
// rounding; deterministic, ties broken toward the smaller index.
std::vector<std::size_t> allocate_proportionally(const std::vector<double>& weights,
                                                 std::size_t total);

// Positive pairs: same style, different furniture type. Negative pairs:
// different styles, any types. Pairs never cross splits; n_positive is
// distributed over the splits present in `items` proportionally to their item
// counts, and each split contributes exactly neg_ratio negatives per positive.
// Pairs are canonical (i < j by id) and never duplicated.
std::vector<PairSample> strategic_pairs(const std::vector<ItemRecord>& items,
                                        std::size_t n_positive, std::size_t neg_ratio,
                                        std::uint64_t seed);

struct VteBatch {
    std::size_t reference_index = 0;
    std::vector<std::size_t> negative_indices;  // 16 distinct, all styles != reference
};

VteBatch vte_batch(const std::vector<ItemRecord>& items, const std::string& reference_id,
                   std::uint64_t seed);

}  // namespace stylecompat
