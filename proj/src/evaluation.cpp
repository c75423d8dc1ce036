#include "stylecompat/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "stylecompat/kernels.hpp"

namespace stylecompat {

double compatibility_score(double distance) {
    if (distance < 0.0) throw ContractError("distance must be non-negative");
    return 1.0 / (1.0 + distance);
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ShapeError("scores/labels length mismatch");
    std::int64_t n_pos = 0, n_neg = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw ContractError("labels must be 0 or 1");
        (l == 1 ? n_pos : n_neg)++;
    }
    if (n_pos == 0 || n_neg == 0) throw MetricError("roc_auc needs both classes present");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks of ties kept as doubled integers (rank sums in half
    // units), so the final division is the only floating-point step.
    std::int64_t doubled_pos_rank_sum = 0;
    std::size_t a = 0;
    while (a < order.size()) {
        std::size_t b = a;
        while (b + 1 < order.size() && scores[order[b + 1]] == scores[order[a]]) ++b;
        std::int64_t doubled_avg_rank = static_cast<std::int64_t>(a + b) + 2;  // ranks 1-based
        for (std::size_t k = a; k <= b; ++k)
            if (labels[order[k]] == 1) doubled_pos_rank_sum += doubled_avg_rank;
        a = b + 1;
    }

    std::int64_t numerator = doubled_pos_rank_sum - n_pos * (n_pos + 1);
    std::int64_t denominator = 2 * n_pos * n_neg;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

PerStyleAuc per_style_auc(const std::vector<ScoredPair>& pairs) {
    std::map<std::uint32_t, std::pair<std::vector<double>, std::vector<int>>> pools;
    auto put = [&](std::uint32_t style, const ScoredPair& p) {
        pools[style].first.push_back(p.score);
        pools[style].second.push_back(p.label);
    };
    for (const ScoredPair& p : pairs) {
        if (p.label == 1) {
            if (p.style_i != p.style_j)
                throw ContractError("positive pair with differing styles");
            put(p.style_i, p);
        } else {
            put(p.style_i, p);
            if (p.style_j != p.style_i) put(p.style_j, p);
        }
    }

    PerStyleAuc out;
    for (const auto& [style, pool] : pools) {
        bool has_pos = std::find(pool.second.begin(), pool.second.end(), 1) != pool.second.end();
        bool has_neg = std::find(pool.second.begin(), pool.second.end(), 0) != pool.second.end();
        if (has_pos && has_neg)
            out.by_style.emplace(style, roc_auc(pool.first, pool.second));
        else
            out.omitted.push_back(style);
    }
    return out;
}

double recall_at_k(const std::vector<std::vector<std::string>>& ranked_ids,
                   const std::vector<std::set<std::string>>& relevant, std::size_t k) {
    if (k < 1) throw ContractError("k must be at least 1");
    if (ranked_ids.size() != relevant.size())
        throw ShapeError("one relevant set per ranked list required");
    if (ranked_ids.empty()) throw MetricError("recall_at_k needs at least one query");

    std::size_t hits = 0;
    for (std::size_t q = 0; q < ranked_ids.size(); ++q) {
        std::size_t top = std::min(k, ranked_ids[q].size());
        for (std::size_t r = 0; r < top; ++r)
            if (relevant[q].count(ranked_ids[q][r])) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(ranked_ids.size());
}

namespace {

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> sorted, double p) {
    double pos = p * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

double silverman_bandwidth(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double sd = sample_std(v, mean);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    double h = 0.9 * spread * std::pow(static_cast<double>(v.size()), -0.2);
    return std::max(h, 1e-6);
}

KdeCurve kde_curve(const std::vector<double>& samples, double h, double lo, double dx,
                   std::size_t points) {
    KdeCurve curve;
    curve.x.resize(points);
    curve.density.resize(points);
    double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * M_PI));
    for (std::size_t i = 0; i < points; ++i) {
        double x = lo + dx * static_cast<double>(i);
        double acc = 0.0;
        for (double s : samples) {
            double z = (x - s) / h;
            acc += std::exp(-0.5 * z * z);
        }
        curve.x[i] = x;
        curve.density[i] = acc * norm;
    }
    return curve;
}

DistanceSummary summarize(const std::vector<double>& v) {
    DistanceSummary s;
    s.count = v.size();
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    s.stddev = sample_std(v, s.mean);
    return s;
}

}  // namespace

KdePair distance_kde(const std::vector<double>& pos_distances,
                     const std::vector<double>& neg_distances, double bandwidth) {
    if (pos_distances.size() < 2 || neg_distances.size() < 2)
        throw MetricError("distance_kde needs at least two samples per class");
    if (bandwidth < 0.0) throw ContractError("bandwidth must be non-negative");

    KdePair out;
    out.bandwidth_pos = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(pos_distances);
    out.bandwidth_neg = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(neg_distances);

    double lo = std::min(*std::min_element(pos_distances.begin(), pos_distances.end()),
                         *std::min_element(neg_distances.begin(), neg_distances.end()));
    double hi = std::max(*std::max_element(pos_distances.begin(), pos_distances.end()),
                         *std::max_element(neg_distances.begin(), neg_distances.end()));
    double pad = 4.0 * std::max(out.bandwidth_pos, out.bandwidth_neg);
    lo -= pad;
    hi += pad;

    constexpr std::size_t kPoints = 512;
    double dx = (hi - lo) / static_cast<double>(kPoints - 1);
    out.pos = kde_curve(pos_distances, out.bandwidth_pos, lo, dx, kPoints);
    out.neg = kde_curve(neg_distances, out.bandwidth_neg, lo, dx, kPoints);
    return out;
}

std::vector<double> pair_distances(const Dataset& ds, const std::vector<PairSample>& pairs,
                                   const ParamMap& params, const ModelConfig& config) {
    std::map<std::string, std::size_t> ids = index_by_id(ds);
    std::map<std::string, std::uint32_t> row_of;
    std::vector<double> rows;
    std::size_t dim = config.embedding_dim;

    auto row_for = [&](const std::string& id) -> std::uint32_t {
        auto it = row_of.find(id);
        if (it != row_of.end()) return it->second;
        auto item_it = ids.find(id);
        if (item_it == ids.end()) throw InputError("pair references unknown id '" + id + "'");
        std::vector<double> e =
            embed_item(ds.items[item_it->second].features, params, config);
        std::uint32_t row = static_cast<std::uint32_t>(row_of.size());
        rows.insert(rows.end(), e.begin(), e.end());
        row_of.emplace(id, row);
        return row;
    };

    std::vector<std::pair<std::uint32_t, std::uint32_t>> index_pairs;
    index_pairs.reserve(pairs.size());
    for (const PairSample& p : pairs) index_pairs.emplace_back(row_for(p.i), row_for(p.j));

    std::vector<double> out(pairs.size());
    kernels::pair_distances(rows.data(), dim, index_pairs.data(), index_pairs.size(), out.data());
    return out;
}

EvaluationReport evaluate_pairs(const Dataset& ds, const std::vector<PairSample>& pairs,
                                const ParamMap& params, const ModelConfig& config) {
    if (pairs.empty()) throw MetricError("no pairs to evaluate");
    std::map<std::string, std::size_t> ids = index_by_id(ds);
    std::vector<double> distances = pair_distances(ds, pairs, params, config);

    EvaluationReport report;
    std::vector<double> scores(pairs.size());
    std::vector<int> labels(pairs.size());
    std::vector<ScoredPair> scored(pairs.size());
    std::vector<double> pos_d, neg_d;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        scores[p] = compatibility_score(distances[p]);
        labels[p] = pairs[p].y;
        scored[p] = {scores[p], pairs[p].y, ds.items[ids.at(pairs[p].i)].style,
                     ds.items[ids.at(pairs[p].j)].style};
        (pairs[p].y == 1 ? pos_d : neg_d).push_back(distances[p]);
    }

    report.auc_overall = roc_auc(scores, labels);
    report.per_style = per_style_auc(scored);
    report.pos_distances = summarize(pos_d);
    report.neg_distances = summarize(neg_d);
    if (pos_d.size() >= 2 && neg_d.size() >= 2) report.kde = distance_kde(pos_d, neg_d);
    return report;
}

namespace {

void write_kde_table(const KdeCurve& curve, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "#stylecompat-kde v1\n";
    for (std::size_t i = 0; i < curve.x.size(); ++i)
        out << format_double(curve.x[i]) << '\t' << format_double(curve.density[i]) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

void write_report(const EvaluationReport& report, const std::string& out_prefix) {
    {
        std::ofstream out(out_prefix + ".txt", std::ios::trunc);
        if (!out) throw IoError("cannot open '" + out_prefix + ".txt' for writing");
        out << "overall AUC: " << format_double(report.auc_overall) << "\n";
        out << "per-style AUC:\n";
        for (const auto& [style, auc] : report.per_style.by_style)
            out << "  style " << style << ": " << format_double(auc) << "\n";
        for (std::uint32_t style : report.per_style.omitted)
            out << "  style " << style << ": omitted (single-class pool)\n";
        if (!report.recall_at.empty()) {
            out << "recall:\n";
            for (const auto& [k, r] : report.recall_at)
                out << "  recall@" << k << ": " << format_double(r) << "\n";
        }
        out << "positive distances: mean " << format_double(report.pos_distances.mean)
            << ", std " << format_double(report.pos_distances.stddev) << ", n "
            << report.pos_distances.count << "\n";
        out << "negative distances: mean " << format_double(report.neg_distances.mean)
            << ", std " << format_double(report.neg_distances.stddev) << ", n "
            << report.neg_distances.count << "\n";
        if (!out) throw IoError("write failed for '" + out_prefix + ".txt'");
    }
    {
        std::ofstream out(out_prefix + ".kv", std::ios::trunc);
        if (!out) throw IoError("cannot open '" + out_prefix + ".kv' for writing");
        out << "auc_overall=" << format_double(report.auc_overall) << "\n";
        for (const auto& [style, auc] : report.per_style.by_style)
            out << "auc_style_" << style << "=" << format_double(auc) << "\n";
        for (const auto& [k, r] : report.recall_at)
            out << "recall_at_" << k << "=" << format_double(r) << "\n";
        out << "pos_mean=" << format_double(report.pos_distances.mean) << "\n";
        out << "pos_std=" << format_double(report.pos_distances.stddev) << "\n";
        out << "pos_count=" << report.pos_distances.count << "\n";
        out << "neg_mean=" << format_double(report.neg_distances.mean) << "\n";
        out << "neg_std=" << format_double(report.neg_distances.stddev) << "\n";
        out << "neg_count=" << report.neg_distances.count << "\n";
        if (!out) throw IoError("write failed for '" + out_prefix + ".kv'");
    }
    if (!report.kde.pos.x.empty()) {
        write_kde_table(report.kde.pos, out_prefix + ".kde_pos.tsv");
        write_kde_table(report.kde.neg, out_prefix + ".kde_neg.tsv");
    }
}

}  // namespace stylecompat
