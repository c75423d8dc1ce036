#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stylecompat/dataset.hpp"

namespace stylecompat {

enum class Metric { euclidean, dot };

struct EmbeddingIndex {
    Metric metric = Metric::euclidean;
    std::size_t dim = 0;
    std::vector<std::string> ids;
    std::vector<double> vectors;  // n x dim, row-major
    std::vector<std::uint32_t> styles;
    std::vector<std::uint32_t> types;
};

using Embedder = std::function<std::vector<double>(const ItemRecord&)>;

EmbeddingIndex build_index(const std::vector<ItemRecord>& items, const Embedder& embedder,
                           Metric metric);

struct QueryHit {
    std::string id;
    double value = 0.0;  // distance (euclidean) or similarity (dot)
};

struct QueryResult {
    std::vector<QueryHit> hits;
    bool truncated = false;  // fewer than k candidates were available
};

// Exact linear scan: ascending distance or descending similarity, ties by id.
QueryResult query_compatible(const EmbeddingIndex& index, const std::vector<double>& query,
                             std::size_t k,
                             std::optional<std::uint32_t> exclude_type = std::nullopt);

// Joint-space query: ranks by dot similarity against x_img + x_text.
QueryResult query_with_text(const EmbeddingIndex& index, const std::vector<double>& x_img,
                            const std::vector<double>& x_text, std::size_t k);

void save_index(const EmbeddingIndex& index, const std::string& path);
EmbeddingIndex load_index(const std::string& path);

void write_query_results(const QueryResult& result, const std::string& path);

}  // namespace stylecompat
