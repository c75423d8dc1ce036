#include "stylecompat/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "stylecompat/evaluation.hpp"
#include "stylecompat/rng.hpp"
#include "stylecompat/sampling.hpp"

namespace stylecompat {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::canonical: return "canonical";
        case Variant::short_siamese: return "short";
        case Variant::categorical: return "categorical";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    if (name == "canonical") return Variant::canonical;
    if (name == "short") return Variant::short_siamese;
    if (name == "categorical") return Variant::categorical;
    throw ConfigError("unknown variant '" + name + "'");
}

void validate(const TrainingConfig& c) {
    if (c.stage1_lr < 0.0 || c.stage2_lr < 0.0 || c.vte_lr < 0.0)
        throw ConfigError("learning rates must be non-negative");
    if (c.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (c.momentum < 0.0 || c.momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
    if (c.batch_size < 1) throw ConfigError("batch_size must be at least 1");
}

PairPartition partition_pairs(const Dataset& ds, const std::vector<PairSample>& pairs) {
    std::map<std::string, std::size_t> ids = index_by_id(ds);
    PairPartition part;
    for (const PairSample& p : pairs) {
        auto it = ids.find(p.i);
        if (it == ids.end()) throw InputError("pair references unknown id '" + p.i + "'");
        switch (ds.items[it->second].split) {
            case Split::train: part.train.push_back(p); break;
            case Split::val: part.val.push_back(p); break;
            case Split::test: part.test.push_back(p); break;
        }
    }
    return part;
}

void sgd_momentum_step(ParamMap& params, const GradMap& grads, BufferMap& velocity, double lr,
                       double momentum, const std::vector<std::string>& trainable) {
    for (const std::string& name : trainable) {
        Tensor& t = params.at(name);
        const std::vector<double>& g = grads.at(name);
        std::vector<double>& v = velocity[name];
        if (v.empty()) v.assign(t.numel(), 0.0);
        for (std::size_t k = 0; k < t.numel(); ++k) {
            v[k] = momentum * v[k] - lr * g[k];
            t.values[k] += v[k];
        }
    }
}

void rmsprop_step(ParamMap& params, const GradMap& grads, BufferMap& acc, double lr,
                  const std::vector<std::string>& trainable) {
    for (const std::string& name : trainable) {
        Tensor& t = params.at(name);
        const std::vector<double>& g = grads.at(name);
        std::vector<double>& a = acc[name];
        if (a.empty()) a.assign(t.numel(), 0.0);
        for (std::size_t k = 0; k < t.numel(); ++k) {
            a[k] = kRmspropDecay * a[k] + (1.0 - kRmspropDecay) * g[k] * g[k];
            t.values[k] -= lr * g[k] / (std::sqrt(a[k]) + kRmspropEpsilon);
        }
    }
}

double validation_auc(const Dataset& ds, const std::vector<PairSample>& val_pairs,
                      const ParamMap& params, const ModelConfig& model) {
    if (val_pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> distances = pair_distances(ds, val_pairs, params, model);
    std::vector<double> scores(distances.size());
    std::vector<int> labels(distances.size());
    for (std::size_t p = 0; p < distances.size(); ++p) {
        scores[p] = compatibility_score(distances[p]);
        labels[p] = val_pairs[p].y;
    }
    try {
        return roc_auc(scores, labels);
    } catch (const MetricError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

namespace {

std::vector<std::string> siamese_param_names(const ModelConfig& model, bool with_classifier) {
    std::vector<std::string> names;
    std::size_t depth = is_short(model) ? *model.short_truncate_at : model.base_layers.size();
    for (std::size_t l = 0; l < depth; ++l) {
        names.push_back("base." + std::to_string(l) + ".W");
        names.push_back("base." + std::to_string(l) + ".b");
    }
    names.push_back("E.W");
    names.push_back("E.b");
    if (with_classifier) {
        names.push_back("C.W");
        names.push_back("C.b");
    }
    return names;
}

std::vector<std::string> head_param_names(bool with_classifier) {
    std::vector<std::string> names = {"E.W", "E.b"};
    if (with_classifier) {
        names.push_back("C.W");
        names.push_back("C.b");
    }
    return names;
}

struct PairRefs {
    const ItemRecord* a;
    const ItemRecord* b;
    int y;
};

// One minibatch: mean over pair losses; returns the loss value and fills
// grads for the lifted parameters.
double minibatch_step(const std::vector<PairRefs>& batch, ParamMap& work,
                      const std::vector<std::string>& used,
                      const std::set<std::string>& trainable, Variant variant,
                      const ModelConfig& model, const LossConfig& loss, GradMap& grads) {
    ParamMap view;
    for (const std::string& name : used) {
        Tensor t = work.at(name);
        t.requires_grad = trainable.count(name) > 0;
        view.emplace(name, std::move(t));
    }

    Graph g;
    ParamNodes nodes = lift_params(g, view);
    std::vector<NodeId> terms;
    terms.reserve(batch.size());
    for (const PairRefs& pair : batch) {
        NodeId fa = g.leaf({pair.a->features.size()}, pair.a->features);
        NodeId fb = g.leaf({pair.b->features.size()}, pair.b->features);
        NodeId xa = build_embed(g, fa, nodes, model);
        NodeId xb = build_embed(g, fb, nodes, model);
        NodeId term = build_contrastive(g, xa, xb, pair.y, loss.m_contrastive);
        if (variant == Variant::categorical) {
            NodeId pa = g.softmax(build_class_logits(g, fa, nodes, model));
            NodeId pb = g.softmax(build_class_logits(g, fb, nodes, model));
            term = g.add(term, g.add(build_cross_entropy(g, pa, pair.a->style),
                                     build_cross_entropy(g, pb, pair.b->style)));
        }
        terms.push_back(term);
    }
    NodeId total = g.mean(g.concat(terms));
    g.backward(total);
    grads = collect_grads(g, nodes);
    return g.value_scalar(total);
}

std::vector<PairRefs> resolve_pairs(const Dataset& ds,
                                    const std::map<std::string, std::size_t>& ids,
                                    const std::vector<PairSample>& pairs) {
    std::vector<PairRefs> refs;
    refs.reserve(pairs.size());
    for (const PairSample& p : pairs)
        refs.push_back({&ds.items[ids.at(p.i)], &ds.items[ids.at(p.j)], p.y});
    return refs;
}

}  // namespace

TrainResult train_siamese(Variant variant, const Dataset& ds,
                          const std::vector<PairSample>& pairs, const ModelConfig& model,
                          const LossConfig& loss, const TrainingConfig& training) {
    validate(model);
    stylecompat::validate(loss);
    validate(training);
    if ((variant == Variant::short_siamese) != is_short(model))
        throw ConfigError(std::string("variant '") + variant_name(variant) +
                          "' does not match short_truncate_at in the model config");

    Rng init_rng = substream(training.seed, "init");
    TrainResult result;
    result.config = model;
    result.params = init_params(model, init_rng);

    std::map<std::string, std::size_t> ids = index_by_id(ds);
    PairPartition part = partition_pairs(ds, pairs);
    if (part.train.empty()) throw SamplingError("no training pairs after split partition");
    std::vector<PairSample> val_pairs = part.val;
    if (val_pairs.size() > training.val_pair_cap) {
        Rng cap_rng = substream(training.seed, "valcap");
        cap_rng.shuffle(val_pairs);
        val_pairs.resize(training.val_pair_cap);
    }
    std::vector<PairRefs> train_refs = resolve_pairs(ds, ids, part.train);

    bool with_classifier = variant == Variant::categorical;
    std::vector<std::string> used = siamese_param_names(model, with_classifier);

    result.log.push_back(
        {"init", 0, 0.0, validation_auc(ds, val_pairs, result.params, model)});

    std::size_t global_batch = 0;
    auto step_on = [&](const std::vector<std::size_t>& batch_idx,
                       const std::vector<std::string>& trainable_names,
                       const std::set<std::string>& trainable, BufferMap& velocity,
                       double lr) -> double {
        std::vector<PairRefs> batch;
        batch.reserve(batch_idx.size());
        for (std::size_t idx : batch_idx) batch.push_back(train_refs[idx]);
        GradMap grads;
        double value = 0.0;
        try {
            value = minibatch_step(batch, result.params, used, trainable, variant, model,
                                   loss, grads);
        } catch (const NumericsError& e) {
            throw NumericsError("minibatch " + std::to_string(global_batch) + ": " + e.what());
        }
        sgd_momentum_step(result.params, grads, velocity, lr, training.momentum,
                          trainable_names);
        ++global_batch;
        return value;
    };

    // Stage 1: freshly added head only, cycling through the shuffled pairs.
    {
        std::vector<std::string> head = head_param_names(with_classifier);
        std::set<std::string> trainable(head.begin(), head.end());
        std::vector<std::size_t> order(train_refs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng order_rng = substream(training.seed, "order/stage1");
        order_rng.shuffle(order);
        BufferMap velocity;
        double loss_sum = 0.0;
        std::size_t width = std::min<std::size_t>(training.batch_size, order.size());
        for (std::size_t it = 0; it < training.stage1_iterations; ++it) {
            std::vector<std::size_t> batch_idx(width);
            std::size_t begin = (it * training.batch_size) % order.size();
            for (std::size_t k = 0; k < width; ++k)
                batch_idx[k] = order[(begin + k) % order.size()];
            loss_sum += step_on(batch_idx, head, trainable, velocity, training.stage1_lr);
        }
        double mean_loss = training.stage1_iterations == 0
                               ? 0.0
                               : loss_sum / static_cast<double>(training.stage1_iterations);
        result.log.push_back(
            {"stage1", 0, mean_loss, validation_auc(ds, val_pairs, result.params, model)});
    }

    // Stage 2: fine-tune everything, one pass per epoch with a partial tail
    // batch when the pair count is not a multiple of batch_size.
    {
        std::set<std::string> trainable(used.begin(), used.end());
        BufferMap velocity;
        for (std::size_t epoch = 0; epoch < training.epochs; ++epoch) {
            std::vector<std::size_t> order(train_refs.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            Rng order_rng = substream(training.seed, "order/epoch", epoch);
            order_rng.shuffle(order);
            double loss_sum = 0.0;
            std::size_t batches = 0;
            for (std::size_t begin = 0; begin < order.size();
                 begin += training.batch_size) {
                std::size_t end = std::min(begin + training.batch_size, order.size());
                std::vector<std::size_t> batch_idx(order.begin() + begin,
                                                   order.begin() + end);
                loss_sum += step_on(batch_idx, used, trainable, velocity, training.stage2_lr);
                ++batches;
            }
            result.log.push_back({"stage2", epoch + 1,
                                  loss_sum / static_cast<double>(batches),
                                  validation_auc(ds, val_pairs, result.params, model)});
        }
    }

    for (const auto& [name, t] : result.params)
        for (double v : t.values)
            if (!std::isfinite(v))
                throw NumericsError("parameter '" + name + "' became non-finite");
    return result;
}

namespace {

std::vector<std::string> vte_param_names() {
    std::vector<std::string> names = {"token_table", "visual_proj.W", "visual_proj.b",
                                      "text_proj.W", "text_proj.b"};
    for (const char* gate : {"i", "f", "o", "c"}) {
        names.push_back(std::string("lstm.W") + gate);
        names.push_back(std::string("lstm.U") + gate);
        names.push_back(std::string("lstm.b") + gate);
    }
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

double vte_recall_at_1(const std::vector<ItemRecord>& items, const ParamMap& params,
                       const ModelConfig& model, std::uint64_t seed) {
    if (items.empty()) throw MetricError("recall needs at least one reference item");
    std::size_t hits = 0;
    for (const ItemRecord& ref : items) {
        VteBatch batch = vte_batch(items, ref.id, seed);
        std::vector<double> x_img = project_joint(
            embed_item(ref.features, params, model), JointSide::visual, params);
        double s_ref = dot_similarity(
            x_img,
            project_joint(text_encode(ref.tokens, params, model), JointSide::text, params));
        bool top = true;
        for (std::size_t neg : batch.negative_indices) {
            double s = dot_similarity(
                x_img, project_joint(text_encode(items[neg].tokens, params, model),
                                     JointSide::text, params));
            if (s >= s_ref) {
                top = false;
                break;
            }
        }
        if (top) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(items.size());
}

TrainResult train_vte(const Dataset& ds, const ModelConfig& model, const LossConfig& loss,
                      const TrainingConfig& training, const ParamMap& base_params) {
    validate(model);
    stylecompat::validate(loss);
    validate(training);

    TrainResult result;
    result.config = model;
    result.params = base_params;

    std::vector<ItemRecord> train_items, val_items;
    for (const ItemRecord& item : ds.items) {
        if (item.split == Split::train) train_items.push_back(item);
        if (item.split == Split::val) val_items.push_back(item);
    }
    if (train_items.empty()) throw SamplingError("no training items for the joint embedding");

    // The visual path is frozen: embeddings are computed once, outside the
    // graph, so its parameters cannot drift by construction.
    std::vector<std::vector<double>> visual(train_items.size());
    for (std::size_t i = 0; i < train_items.size(); ++i)
        visual[i] = embed_item(train_items[i].features, base_params, model);

    std::vector<std::string> trainable_names = vte_param_names();
    std::set<std::string> trainable(trainable_names.begin(), trainable_names.end());

    std::vector<std::size_t> refs(train_items.size());
    for (std::size_t i = 0; i < refs.size(); ++i) refs[i] = i;
    Rng ref_rng = substream(training.seed, "vte_refs");
    ref_rng.shuffle(refs);

    BufferMap acc;
    double chunk_loss = 0.0;
    std::size_t chunk_size = std::max<std::size_t>(1, training.vte_iterations / 4);
    for (std::size_t t = 0; t < training.vte_iterations; ++t) {
        std::size_t ref = refs[t % refs.size()];
        VteBatch batch = vte_batch(train_items, train_items[ref].id, training.seed + t);

        ParamMap view;
        for (const std::string& name : trainable_names) {
            Tensor tt = result.params.at(name);
            tt.requires_grad = true;
            view.emplace(name, std::move(tt));
        }

        Graph g;
        ParamNodes nodes = lift_params(g, view);
        NodeId vis = g.leaf({visual[ref].size()}, visual[ref]);
        NodeId x_img = build_project_joint(g, vis, JointSide::visual, nodes);
        NodeId x_text = build_project_joint(
            g, build_text_encode(g, train_items[ref].tokens, nodes, model), JointSide::text,
            nodes);
        std::vector<NodeId> wrongs;
        for (std::size_t neg : batch.negative_indices)
            wrongs.push_back(build_project_joint(
                g, build_text_encode(g, train_items[neg].tokens, nodes, model),
                JointSide::text, nodes));
        NodeId total = build_hinge_rank(g, x_img, x_text, wrongs, loss.m_rank);

        try {
            g.backward(total);
        } catch (const NumericsError& e) {
            throw NumericsError("vte iteration " + std::to_string(t) + ": " + e.what());
        }
        GradMap grads = collect_grads(g, nodes);
        rmsprop_step(result.params, grads, acc, training.vte_lr, trainable_names);
        chunk_loss += g.value_scalar(total);

        if ((t + 1) % chunk_size == 0 || t + 1 == training.vte_iterations) {
            std::size_t chunk = (t + 1 + chunk_size - 1) / chunk_size;
            double recall = val_items.size() > kVteNegatives
                                ? vte_recall_at_1(val_items, result.params, model,
                                                  training.seed)
                                : std::numeric_limits<double>::quiet_NaN();
            std::size_t denom = std::min(chunk_size, t + 1 - (chunk - 1) * chunk_size);
            result.log.push_back(
                {"vte", chunk, chunk_loss / static_cast<double>(denom), recall});
            chunk_loss = 0.0;
        }
    }
    return result;
}

MarginSweepResult cross_validate_margin(Variant variant, const Dataset& ds,
                                        const std::vector<PairSample>& pairs,
                                        const std::vector<double>& candidates,
                                        const ModelConfig& model, const LossConfig& loss,
                                        const TrainingConfig& training) {
    if (candidates.empty()) throw ConfigError("margin sweep needs at least one candidate");

    PairPartition part = partition_pairs(ds, pairs);
    MarginSweepResult sweep;
    bool first = true;
    for (double margin : candidates) {
        if (!(margin > 0.0)) throw ConfigError("margin candidates must be positive");
        LossConfig candidate_loss = loss;
        candidate_loss.m_contrastive = margin;
        TrainResult run = train_siamese(variant, ds, pairs, model, candidate_loss, training);
        double auc = validation_auc(ds, part.val, run.params, model);
        sweep.auc_by_margin.emplace_back(margin, auc);
        if (first) {
            sweep.best_margin = margin;
            first = false;
            continue;
        }
        double best_auc = 0.0;
        for (const auto& [m, a] : sweep.auc_by_margin)
            if (m == sweep.best_margin) best_auc = a;
        bool better = std::isnan(best_auc) ? !std::isnan(auc) : auc > best_auc;
        if (better || (auc == best_auc && margin < sweep.best_margin))
            sweep.best_margin = margin;
    }
    return sweep;
}

void write_training_log(const std::vector<TrainLogEntry>& log, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "#stylecompat-train-log v1\n";
    out << "stage\tepoch\tloss\tval\n";
    for (const TrainLogEntry& e : log)
        out << e.stage << '\t' << e.epoch << '\t' << format_double(e.loss) << '\t'
            << format_double(e.val_metric) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace stylecompat
