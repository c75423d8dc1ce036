#include "stylecompat/curation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "stylecompat/kernels.hpp"
#include "stylecompat/rng.hpp"
#include "stylecompat/sampling.hpp"

namespace stylecompat {

namespace {

// Every source pixel lands in exactly one target cell; cell sums are divided
// by their own counts, so positive intensity scaling carries through exactly.
std::array<double, kernels::kDctSize * kernels::kDctSize> resize32(const Image& img) {
    constexpr std::size_t n = kernels::kDctSize;
    std::array<double, n * n> sums{};
    std::array<std::size_t, n * n> counts{};
    for (std::size_t y = 0; y < img.height; ++y) {
        std::size_t ty = y * n / img.height;
        for (std::size_t x = 0; x < img.width; ++x) {
            std::size_t tx = x * n / img.width;
            sums[ty * n + tx] += img.pixels[y * img.width + x];
            ++counts[ty * n + tx];
        }
    }
    for (std::size_t i = 0; i < n * n; ++i) sums[i] /= static_cast<double>(counts[i]);
    return sums;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

std::vector<std::pair<std::size_t, std::size_t>> duplicate_pairs(const std::vector<PHash>& hashes,
                                                                 int threshold) {
    std::size_t n = hashes.size();
    std::vector<std::pair<std::size_t, std::size_t>> found;

    if (n <= 2048 || threshold > 16) {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (hamming(hashes[a], hashes[b]) <= threshold) found.emplace_back(a, b);
        return found;
    }

    // Pigeonhole: split the 64 bits into threshold+1 blocks; any pair within
    // the threshold agrees exactly on at least one block.
    std::size_t blocks = static_cast<std::size_t>(threshold) + 1;
    std::set<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        std::size_t lo = blk * 64 / blocks;
        std::size_t hi = (blk + 1) * 64 / blocks;
        std::uint64_t mask = (hi - lo == 64) ? ~0ull : (((1ull << (hi - lo)) - 1) << lo);
        std::map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (std::size_t i = 0; i < n; ++i) buckets[hashes[i].bits & mask].push_back(i);
        for (const auto& [key, members] : buckets)
            for (std::size_t a = 0; a < members.size(); ++a)
                for (std::size_t b = a + 1; b < members.size(); ++b)
                    candidates.insert({members[a], members[b]});
    }
    for (const auto& [a, b] : candidates)
        if (hamming(hashes[a], hashes[b]) <= threshold) found.emplace_back(a, b);
    return found;
}

}  // namespace

PHash phash(const Image& image) {
    if (image.pixels.empty()) throw InputError("empty image");
    if (image.pixels.size() != image.width * image.height)
        throw InputError("image pixel count does not match dimensions");
    if (image.width < 32 || image.height < 32)
        throw InputError("image must be at least 32x32");

    auto grid = resize32(image);
    std::array<double, kernels::kDctSize * kernels::kDctSize> coeffs{};
    kernels::dct32_batch(grid.data(), coeffs.data(), 1);

    std::array<double, 64> block;
    for (std::size_t u = 0; u < 8; ++u)
        for (std::size_t v = 0; v < 8; ++v) block[u * 8 + v] = coeffs[u * kernels::kDctSize + v];

    std::array<double, 63> rest;
    std::copy(block.begin() + 1, block.end(), rest.begin());
    std::nth_element(rest.begin(), rest.begin() + 31, rest.end());
    double median = rest[31];

    PHash h;
    for (std::size_t bit = 1; bit < 64; ++bit)
        if (block[bit] > median) h.bits |= 1ull << bit;
    return h;
}

int hamming(PHash a, PHash b) { return std::popcount(a.bits ^ b.bits); }

CurationResult dedup(const std::vector<ItemRecord>& items, const std::vector<PHash>& hashes,
                     int threshold) {
    if (items.size() != hashes.size())
        throw ContractError("dedup needs one hash per item");
    if (threshold < 0 || threshold > 64) throw ContractError("threshold must be in [0, 64]");

    UnionFind uf(items.size());
    for (const auto& [a, b] : duplicate_pairs(hashes, threshold)) uf.unite(a, b);

    std::map<std::size_t, std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < items.size(); ++i) clusters[uf.find(i)].push_back(i);

    std::vector<char> removed(items.size(), 0);
    std::map<std::size_t, RemovalRecord> pending;  // item index -> record
    for (auto& [root, members] : clusters) {
        if (members.size() < 2) continue;
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return items[a].id < items[b].id;
        });
        bool same_style = true;
        for (std::size_t m : members)
            if (items[m].style != items[members[0]].style) same_style = false;

        if (same_style) {
            std::size_t rep = members[0];
            for (std::size_t m = 1; m < members.size(); ++m) {
                removed[members[m]] = 1;
                pending[members[m]] = {items[members[m]].id, "duplicate-same-style",
                                       items[rep].id,
                                       static_cast<double>(hamming(hashes[members[m]],
                                                                   hashes[rep]))};
            }
        } else {
            for (std::size_t m = 0; m < members.size(); ++m) {
                std::size_t partner = m == 0 ? members[1] : members[0];
                removed[members[m]] = 1;
                pending[members[m]] = {items[members[m]].id, "duplicate-cross-style",
                                       items[partner].id,
                                       static_cast<double>(hamming(hashes[members[m]],
                                                                   hashes[partner]))};
            }
        }
    }

    CurationResult result;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (removed[i])
            result.removals.push_back(pending[i]);
        else
            result.kept.push_back(items[i]);
    }
    return result;
}

TypeClassifier train_type_classifier(const std::vector<ItemRecord>& items,
                                     std::size_t feature_dim, std::size_t num_types,
                                     std::size_t iterations, double lr) {
    if (items.empty()) throw InputError("cannot train a classifier on no items");
    for (const ItemRecord& item : items) {
        if (item.features.size() != feature_dim)
            throw InputError("item '" + item.id + "': feature length mismatch");
        if (item.furniture_type >= num_types)
            throw InputError("item '" + item.id + "': furniture_type out of range");
    }

    TypeClassifier clf{Tensor::zeros({num_types, feature_dim}), Tensor::zeros({num_types})};
    std::vector<double> grad_w(num_types * feature_dim), grad_b(num_types);
    double inv_n = 1.0 / static_cast<double>(items.size());

    for (std::size_t it = 0; it < iterations; ++it) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        for (const ItemRecord& item : items) {
            std::vector<double> p = type_probs(clf, item.features);
            for (std::size_t c = 0; c < num_types; ++c) {
                double g = p[c] - (c == item.furniture_type ? 1.0 : 0.0);
                grad_b[c] += g;
                for (std::size_t d = 0; d < feature_dim; ++d)
                    grad_w[c * feature_dim + d] += g * item.features[d];
            }
        }
        for (std::size_t k = 0; k < grad_w.size(); ++k)
            clf.W.values[k] -= lr * inv_n * grad_w[k];
        for (std::size_t c = 0; c < num_types; ++c) clf.b.values[c] -= lr * inv_n * grad_b[c];
    }
    return clf;
}

std::vector<double> type_probs(const TypeClassifier& clf, const std::vector<double>& features) {
    std::vector<double> logits(clf.W.rows());
    kernels::matvec(clf.W.values.data(), features.data(), clf.b.values.data(), logits.data(),
                    clf.W.rows(), clf.W.cols());
    double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        total += v;
    }
    for (double& v : logits) v /= total;
    return logits;
}

CurationResult outlier_filter(const std::vector<ItemRecord>& items, const TypeClassifier& clf,
                              double removal_fraction) {
    if (!(removal_fraction > 0.0 && removal_fraction < 1.0))
        throw ConfigError("removal_fraction must lie in (0, 1)");

    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < items.size(); ++i)
        scored.emplace_back(type_probs(clf, items[i].features)[items[i].furniture_type], i);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return items[a.second].id < items[b.second].id;
    });

    std::size_t n_remove =
        static_cast<std::size_t>(removal_fraction * static_cast<double>(items.size()));
    std::vector<char> removed(items.size(), 0);
    CurationResult result;
    for (std::size_t r = 0; r < n_remove; ++r) {
        removed[scored[r].second] = 1;
        result.removals.push_back(
            {items[scored[r].second].id, "outlier", "", scored[r].first});
    }
    for (std::size_t i = 0; i < items.size(); ++i)
        if (!removed[i]) result.kept.push_back(items[i]);
    return result;
}

SplitOutcome split(const std::vector<ItemRecord>& items, const std::array<double, 3>& ratios,
                   std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    for (double r : ratios)
        if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < items.size(); ++i)
        cells[{items[i].style, items[i].furniture_type}].push_back(i);

    SplitOutcome outcome;
    outcome.items = items;
    for (auto& [key, members] : cells) {
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return items[a].id < items[b].id;
        });
        if (members.size() < 3) {
            for (std::size_t m : members) outcome.items[m].split = Split::train;
            outcome.warnings.push_back("cell style=" + std::to_string(key.first) +
                                       " type=" + std::to_string(key.second) + " has only " +
                                       std::to_string(members.size()) +
                                       " items; assigned wholly to train");
            continue;
        }
        Rng rng = substream(seed, "split/" + std::to_string(key.first) + "/" +
                                      std::to_string(key.second));
        rng.shuffle(members);
        std::vector<std::size_t> counts =
            allocate_proportionally({ratios[0], ratios[1], ratios[2]}, members.size());
        std::size_t at = 0;
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t c = 0; c < counts[s]; ++c)
                outcome.items[members[at++]].split = static_cast<Split>(s);
    }
    return outcome;
}

void write_removal_log(const std::vector<RemovalRecord>& removals, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "#stylecompat-removals v1\n";
    for (const RemovalRecord& r : removals)
        out << r.id << '\t' << r.cause << '\t' << r.partner << '\t' << format_double(r.value)
            << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace stylecompat
