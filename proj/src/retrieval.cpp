#include "stylecompat/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "stylecompat/checkpoint.hpp"
#include "stylecompat/kernels.hpp"

namespace stylecompat {

EmbeddingIndex build_index(const std::vector<ItemRecord>& items, const Embedder& embedder,
                           Metric metric) {
    if (items.empty()) throw InputError("cannot build an index over no items");
    EmbeddingIndex index;
    index.metric = metric;
    for (const ItemRecord& item : items) {
        std::vector<double> v = embedder(item);
        for (double x : v)
            if (!std::isfinite(x))
                throw NumericsError("non-finite embedding for item '" + item.id + "'");
        if (index.ids.empty())
            index.dim = v.size();
        else if (v.size() != index.dim)
            throw ShapeError("embedding dimension changed between items");
        index.ids.push_back(item.id);
        index.vectors.insert(index.vectors.end(), v.begin(), v.end());
        index.styles.push_back(item.style);
        index.types.push_back(item.furniture_type);
    }
    return index;
}

namespace {

QueryResult rank(const EmbeddingIndex& index, const std::vector<double>& query, std::size_t k,
                 std::optional<std::uint32_t> exclude_type) {
    if (k < 1) throw ContractError("k must be at least 1");
    if (query.size() != index.dim) throw ShapeError("query dimension does not match index");

    std::size_t n = index.ids.size();
    std::vector<double> values(n);
    kernels::query_scores(index.vectors.data(), n, index.dim, query.data(),
                          index.metric == Metric::euclidean, values.data());

    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!exclude_type || index.types[i] != *exclude_type) order.push_back(i);

    bool ascending = index.metric == Metric::euclidean;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return ascending ? values[a] < values[b]
                                                     : values[a] > values[b];
        return index.ids[a] < index.ids[b];
    });

    QueryResult result;
    result.truncated = order.size() < k;
    std::size_t take = std::min(k, order.size());
    for (std::size_t r = 0; r < take; ++r)
        result.hits.push_back({index.ids[order[r]], values[order[r]]});
    return result;
}

}  // namespace

QueryResult query_compatible(const EmbeddingIndex& index, const std::vector<double>& query,
                             std::size_t k, std::optional<std::uint32_t> exclude_type) {
    return rank(index, query, k, exclude_type);
}

QueryResult query_with_text(const EmbeddingIndex& index, const std::vector<double>& x_img,
                            const std::vector<double>& x_text, std::size_t k) {
    if (index.metric != Metric::dot)
        throw ContractError("text-constrained queries need a dot-metric index");
    if (x_img.size() != x_text.size()) throw ShapeError("x_img and x_text dimensions differ");
    std::vector<double> x_sum(x_img.size());
    for (std::size_t i = 0; i < x_sum.size(); ++i) x_sum[i] = x_img[i] + x_text[i];
    return rank(index, x_sum, k, std::nullopt);
}

void save_index(const EmbeddingIndex& index, const std::string& path) {
    BlobWriter w;
    w.add_text("format", "stylecompat-index v1");
    w.add_text("metric", index.metric == Metric::euclidean ? "euclidean" : "dot");
    std::string ids;
    for (const std::string& id : index.ids) {
        ids += id;
        ids += '\n';
    }
    w.add_text("ids", ids);
    w.add_tensor("vectors", Tensor({index.ids.size(), index.dim}, index.vectors));
    std::vector<double> styles(index.styles.begin(), index.styles.end());
    std::vector<double> types(index.types.begin(), index.types.end());
    w.add_tensor("styles", Tensor({styles.size()}, std::move(styles)));
    w.add_tensor("types", Tensor({types.size()}, std::move(types)));
    w.save(path);
}

EmbeddingIndex load_index(const std::string& path) {
    BlobReader r(path);
    if (!r.has("format") || r.text("format") != "stylecompat-index v1")
        throw InputError(path + ": not an index file");
    EmbeddingIndex index;
    index.metric = r.text("metric") == "dot" ? Metric::dot : Metric::euclidean;
    const std::string& ids = r.text("ids");
    std::size_t start = 0;
    while (start < ids.size()) {
        std::size_t pos = ids.find('\n', start);
        index.ids.push_back(ids.substr(start, pos - start));
        start = pos + 1;
    }
    const Tensor& vectors = r.tensor("vectors");
    if (vectors.rank() != 2 || vectors.shape[0] != index.ids.size())
        throw InputError(path + ": vector table shape mismatch");
    index.dim = vectors.shape[1];
    index.vectors = vectors.values;
    for (double s : r.tensor("styles").values)
        index.styles.push_back(static_cast<std::uint32_t>(s));
    for (double t : r.tensor("types").values)
        index.types.push_back(static_cast<std::uint32_t>(t));
    return index;
}

void write_query_results(const QueryResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "#stylecompat-query v1" << (result.truncated ? " truncated" : "") << "\n";
    for (std::size_t r = 0; r < result.hits.size(); ++r)
        out << (r + 1) << '\t' << result.hits[r].id << '\t'
            << format_double(result.hits[r].value) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace stylecompat
