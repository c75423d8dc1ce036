#include "stylecompat/sampling.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "stylecompat/rng.hpp"

namespace stylecompat {

std::vector<std::size_t> allocate_proportionally(const std::vector<double>& weights,
                                                 std::size_t total) {
    double w_sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ContractError("allocation weights must be non-negative");
        w_sum += w;
    }
    if (total > 0 && w_sum <= 0.0) throw ContractError("allocation weights sum to zero");

    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double exact = total * weights[i] / w_sum;
        counts[i] = static_cast<std::size_t>(exact);
        assigned += counts[i];
        remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < total; ++r, ++assigned)
        ++counts[remainders[r % remainders.size()].second];
    return counts;
}

namespace {

struct SplitPool {
    Split split;
    std::vector<std::size_t> indices;                            // into items
    std::map<std::uint32_t, std::vector<std::size_t>> by_style;  // style -> indices
};

PairSample canonical_pair(const std::vector<ItemRecord>& items, std::size_t a, std::size_t b,
                          int y) {
    const std::string& ia = items[a].id;
    const std::string& ib = items[b].id;
    return ia < ib ? PairSample{ia, ib, y} : PairSample{ib, ia, y};
}

void check_pool(const SplitPool& pool) {
    if (pool.by_style.size() < 2)
        throw SamplingError(std::string("split '") + split_name(pool.split) +
                            "' has fewer than two styles; negatives are impossible");
}

std::size_t check_style_types(const std::vector<ItemRecord>& items, const SplitPool& pool) {
    std::size_t positive_capacity = 0;
    for (const auto& [style, members] : pool.by_style) {
        std::map<std::uint32_t, std::size_t> type_counts;
        for (std::size_t idx : members) ++type_counts[items[idx].furniture_type];
        if (type_counts.size() < 2)
            throw SamplingError("style " + std::to_string(style) + " in split '" +
                                split_name(pool.split) +
                                "' has items of only one furniture type; no positive pairs");
        std::size_t sq = 0;
        for (const auto& [type, count] : type_counts) sq += count * count;
        positive_capacity += (members.size() * members.size() - sq) / 2;
    }
    return positive_capacity;
}

std::vector<PairSample> sample_split(const std::vector<ItemRecord>& items, const SplitPool& pool,
                                     std::size_t n_positive, std::size_t neg_ratio,
                                     std::uint64_t seed, std::uint64_t stream_index) {
    std::vector<PairSample> out;

    // Positives: enumerate every valid same-style cross-type pair, shuffle,
    // take the requested count. No replacement; too few is an error.
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (const auto& [style, members] : pool.by_style)
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b)
                if (items[members[a]].furniture_type != items[members[b]].furniture_type)
                    candidates.emplace_back(members[a], members[b]);

    if (candidates.size() < n_positive)
        throw SamplingError(std::string("split '") + split_name(pool.split) + "' has only " +
                            std::to_string(candidates.size()) + " distinct positive pairs, " +
                            std::to_string(n_positive) + " requested");

    Rng pos_rng = substream(seed, "pairs/pos", stream_index);
    pos_rng.shuffle(candidates);
    for (std::size_t p = 0; p < n_positive; ++p)
        out.push_back(canonical_pair(items, candidates[p].first, candidates[p].second, 1));

    // Negatives: cross-style pairs, uniform over item pairs (furniture types
    // both same and different), deduplicated.
    std::size_t n = pool.indices.size();
    std::size_t same_style_sq = 0;
    for (const auto& [style, members] : pool.by_style)
        same_style_sq += members.size() * members.size();
    std::size_t distinct_negatives = (n * n - same_style_sq) / 2;
    std::size_t n_negative = n_positive * neg_ratio;
    if (n_negative > distinct_negatives)
        throw SamplingError(std::string("split '") + split_name(pool.split) + "' has only " +
                            std::to_string(distinct_negatives) + " distinct negative pairs, " +
                            std::to_string(n_negative) + " requested");

    Rng neg_rng = substream(seed, "pairs/neg", stream_index);
    if (n_negative * 2 > distinct_negatives) {
        // Dense request: enumerate instead of rejection-sampling the tail.
        std::vector<std::pair<std::size_t, std::size_t>> all;
        all.reserve(distinct_negatives);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (items[pool.indices[a]].style != items[pool.indices[b]].style)
                    all.emplace_back(pool.indices[a], pool.indices[b]);
        neg_rng.shuffle(all);
        for (std::size_t p = 0; p < n_negative; ++p)
            out.push_back(canonical_pair(items, all[p].first, all[p].second, 0));
    } else {
        std::set<std::pair<std::size_t, std::size_t>> seen;
        while (seen.size() < n_negative) {
            std::size_t a = pool.indices[neg_rng.below(n)];
            std::size_t b = pool.indices[neg_rng.below(n)];
            if (items[a].style == items[b].style) continue;
            if (a > b) std::swap(a, b);
            if (!seen.insert({a, b}).second) continue;
            out.push_back(canonical_pair(items, a, b, 0));
        }
    }
    return out;
}

}  // namespace

std::vector<PairSample> strategic_pairs(const std::vector<ItemRecord>& items,
                                        std::size_t n_positive, std::size_t neg_ratio,
                                        std::uint64_t seed) {
    std::vector<SplitPool> pools;
    for (Split s : {Split::train, Split::val, Split::test}) {
        SplitPool pool;
        pool.split = s;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (items[i].split == s) {
                pool.indices.push_back(i);
                pool.by_style[items[i].style].push_back(i);
            }
        if (!pool.indices.empty()) pools.push_back(std::move(pool));
    }
    if (pools.empty()) throw SamplingError("no items to sample pairs from");

    std::vector<double> weights;
    for (const SplitPool& pool : pools) {
        check_pool(pool);
        check_style_types(items, pool);
        weights.push_back(static_cast<double>(pool.indices.size()));
    }

    std::vector<std::size_t> quota = allocate_proportionally(weights, n_positive);
    std::vector<PairSample> pairs;
    for (std::size_t p = 0; p < pools.size(); ++p) {
        std::vector<PairSample> chunk = sample_split(items, pools[p], quota[p], neg_ratio, seed,
                                                     static_cast<std::uint64_t>(pools[p].split));
        pairs.insert(pairs.end(), chunk.begin(), chunk.end());
    }
    return pairs;
}

VteBatch vte_batch(const std::vector<ItemRecord>& items, const std::string& reference_id,
                   std::uint64_t seed) {
    std::size_t ref = items.size();
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].id == reference_id) {
            ref = i;
            break;
        }
    if (ref == items.size()) throw SamplingError("reference id '" + reference_id + "' not found");

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].style != items[ref].style) eligible.push_back(i);
    if (eligible.size() < kVteNegatives)
        throw SamplingError("only " + std::to_string(eligible.size()) +
                            " items of differing style for reference '" + reference_id + "'");

    Rng rng = substream(seed, "vte_batch/" + reference_id);
    VteBatch batch;
    batch.reference_index = ref;
    for (std::size_t k = 0; k < kVteNegatives; ++k) {
        std::size_t pick = k + rng.below(eligible.size() - k);
        std::swap(eligible[k], eligible[pick]);
        batch.negative_indices.push_back(eligible[k]);
    }
    return batch;
}

}  // namespace stylecompat
