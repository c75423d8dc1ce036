#include "stylecompat/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "stylecompat/checkpoint.hpp"
#include "stylecompat/curation.hpp"
#include "stylecompat/errors.hpp"
#include "stylecompat/evaluation.hpp"
#include "stylecompat/retrieval.hpp"
#include "stylecompat/rng.hpp"
#include "stylecompat/sampling.hpp"

namespace stylecompat::commands {

namespace {

using nlohmann::json;

constexpr const char* kImagesFormat = "stylecompat-images v1";

double num_field(const json& v, const std::string& where) {
    if (!v.is_number())
        throw ConfigError("config field '" + where + "' must be a number");
    return v.get<double>();
}

std::size_t count_field(const json& v, const std::string& where) {
    if (!v.is_number_unsigned())
        throw ConfigError("config field '" + where + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

std::array<double, 3> ratios_field(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3)
        throw ConfigError("config field '" + where + "' must be an array of three numbers");
    std::array<double, 3> r{};
    for (std::size_t i = 0; i < 3; ++i) r[i] = num_field(v[i], where);
    return r;
}

void parse_model(const json& j, ModelConfig& m) {
    if (!j.is_object()) throw ConfigError("'model' must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "input_dim") {
            m.input_dim = count_field(v, "model.input_dim");
        } else if (key == "base_layers") {
            if (!v.is_array()) throw ConfigError("model.base_layers must be an array");
            m.base_layers.clear();
            for (const auto& e : v) m.base_layers.push_back(count_field(e, "model.base_layers"));
        } else if (key == "short_truncate_at") {
            if (v.is_null())
                m.short_truncate_at.reset();
            else
                m.short_truncate_at = count_field(v, "model.short_truncate_at");
        } else if (key == "short_pool_group") {
            m.short_pool_group = count_field(v, "model.short_pool_group");
        } else if (key == "embedding_dim") {
            m.embedding_dim = count_field(v, "model.embedding_dim");
        } else if (key == "num_styles") {
            m.num_styles = count_field(v, "model.num_styles");
        } else if (key == "num_types") {
            m.num_types = count_field(v, "model.num_types");
        } else if (key == "text_vocab_size") {
            m.text_vocab_size = count_field(v, "model.text_vocab_size");
        } else if (key == "token_embed_dim") {
            m.token_embed_dim = count_field(v, "model.token_embed_dim");
        } else if (key == "lstm_hidden") {
            m.lstm_hidden = count_field(v, "model.lstm_hidden");
        } else if (key == "joint_dim") {
            m.joint_dim = count_field(v, "model.joint_dim");
        } else {
            throw ConfigError("unknown config key 'model." + key + "'");
        }
    }
}

void parse_loss(const json& j, LossConfig& l) {
    if (!j.is_object()) throw ConfigError("'loss' must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "m_contrastive")
            l.m_contrastive = num_field(v, "loss.m_contrastive");
        else if (key == "m_rank")
            l.m_rank = num_field(v, "loss.m_rank");
        else
            throw ConfigError("unknown config key 'loss." + key + "'");
    }
}

void parse_training(const json& j, TrainingConfig& t) {
    if (!j.is_object()) throw ConfigError("'training' must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "stage1_lr") {
            t.stage1_lr = num_field(v, "training.stage1_lr");
        } else if (key == "stage1_iterations") {
            t.stage1_iterations = count_field(v, "training.stage1_iterations");
        } else if (key == "stage2_lr") {
            t.stage2_lr = num_field(v, "training.stage2_lr");
        } else if (key == "epochs") {
            t.epochs = count_field(v, "training.epochs");
        } else if (key == "momentum") {
            t.momentum = num_field(v, "training.momentum");
        } else if (key == "vte_lr") {
            t.vte_lr = num_field(v, "training.vte_lr");
        } else if (key == "vte_iterations") {
            t.vte_iterations = count_field(v, "training.vte_iterations");
        } else if (key == "batch_size") {
            t.batch_size = count_field(v, "training.batch_size");
        } else if (key == "margin_candidates") {
            if (!v.is_array()) throw ConfigError("training.margin_candidates must be an array");
            t.margin_candidates.clear();
            for (const auto& e : v)
                t.margin_candidates.push_back(num_field(e, "training.margin_candidates"));
        } else if (key == "val_pair_cap") {
            t.val_pair_cap = count_field(v, "training.val_pair_cap");
        } else {
            throw ConfigError("unknown config key 'training." + key + "'");
        }
    }
}

void parse_synth(const json& j, ExperimentConfig& cfg) {
    if (!j.is_object()) throw ConfigError("'synth' must be an object");
    SynthSpec& s = cfg.synth;
    for (const auto& [key, v] : j.items()) {
        if (key == "num_styles") {
            s.num_styles = count_field(v, "synth.num_styles");
        } else if (key == "num_types") {
            s.num_types = count_field(v, "synth.num_types");
        } else if (key == "items_per_cell") {
            s.items_per_cell = count_field(v, "synth.items_per_cell");
        } else if (key == "feature_dim") {
            s.feature_dim = count_field(v, "synth.feature_dim");
        } else if (key == "style_signal") {
            s.style_signal = num_field(v, "synth.style_signal");
        } else if (key == "type_signal") {
            s.type_signal = num_field(v, "synth.type_signal");
        } else if (key == "noise_sigma") {
            s.noise_sigma = num_field(v, "synth.noise_sigma");
        } else if (key == "words_per_style") {
            s.words_per_style = count_field(v, "synth.words_per_style");
        } else if (key == "num_colors") {
            s.num_colors = count_field(v, "synth.num_colors");
        } else if (key == "num_materials") {
            s.num_materials = count_field(v, "synth.num_materials");
        } else if (key == "planted_outlier_fraction") {
            s.planted_outlier_fraction = num_field(v, "synth.planted_outlier_fraction");
        } else if (key == "split_ratios") {
            s.split_ratios = ratios_field(v, "synth.split_ratios");
        } else if (key == "duplicate_exact") {
            cfg.duplicate_exact = count_field(v, "synth.duplicate_exact");
        } else if (key == "duplicate_scaled") {
            cfg.duplicate_scaled = count_field(v, "synth.duplicate_scaled");
        } else {
            throw ConfigError("unknown config key 'synth." + key + "'");
        }
    }
}

void parse_curation(const json& j, CurationConfig& c) {
    if (!j.is_object()) throw ConfigError("'curation' must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "hamming_threshold") {
            if (!v.is_number_integer())
                throw ConfigError("config field 'curation.hamming_threshold' must be an integer");
            c.hamming_threshold = v.get<int>();
        } else if (key == "outlier_fraction") {
            c.outlier_fraction = num_field(v, "curation.outlier_fraction");
        } else if (key == "split_ratios") {
            c.split_ratios = ratios_field(v, "curation.split_ratios");
        } else {
            throw ConfigError("unknown config key 'curation." + key + "'");
        }
    }
}

void parse_sampling(const json& j, SamplingConfig& s) {
    if (!j.is_object()) throw ConfigError("'sampling' must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "n_positive")
            s.n_positive = count_field(v, "sampling.n_positive");
        else if (key == "neg_ratio")
            s.neg_ratio = count_field(v, "sampling.neg_ratio");
        else
            throw ConfigError("unknown config key 'sampling." + key + "'");
    }
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }

    ExperimentConfig cfg;
    // Zeros mean "take it from the dataset" and are resolved per command.
    cfg.model.input_dim = 0;
    cfg.model.num_styles = 0;
    cfg.model.num_types = 0;
    cfg.model.text_vocab_size = 0;

    bool have_seed = false;
    try {
        if (!j.is_object()) throw ConfigError("config root must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") {
                if (!value.is_number_unsigned())
                    throw ConfigError("config field 'seed' must be a non-negative integer");
                cfg.seed = value.get<std::uint64_t>();
                have_seed = true;
            } else if (key == "model") {
                parse_model(value, cfg.model);
            } else if (key == "loss") {
                parse_loss(value, cfg.loss);
            } else if (key == "training") {
                parse_training(value, cfg.training);
            } else if (key == "synth") {
                parse_synth(value, cfg);
            } else if (key == "curation") {
                parse_curation(value, cfg.curation);
            } else if (key == "sampling") {
                parse_sampling(value, cfg.sampling);
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    if (!have_seed) throw ConfigError("config is missing the mandatory 'seed'");

    cfg.training.seed = cfg.seed;
    cfg.synth.seed = cfg.seed;

    validate(cfg.loss);
    validate(cfg.training);
    validate(cfg.synth);
    if (cfg.curation.hamming_threshold < 0 || cfg.curation.hamming_threshold > 64)
        throw ConfigError("curation.hamming_threshold must lie in [0, 64]");
    if (cfg.curation.outlier_fraction < 0.0 || cfg.curation.outlier_fraction >= 1.0)
        throw ConfigError("curation.outlier_fraction must lie in [0, 1)");
    double ratio_sum = 0.0;
    for (double r : cfg.curation.split_ratios) {
        if (!(r > 0.0)) throw ConfigError("curation.split_ratios must be positive");
        ratio_sum += r;
    }
    if (std::abs(ratio_sum - 1.0) > 1e-9)
        throw ConfigError("curation.split_ratios must sum to 1");
    if (cfg.sampling.n_positive < 1) throw ConfigError("sampling.n_positive must be at least 1");
    if (cfg.sampling.neg_ratio < 1) throw ConfigError("sampling.neg_ratio must be at least 1");
    return cfg;
}

void resolve_model(ModelConfig& model, const Dataset& ds) {
    if (model.input_dim == 0) model.input_dim = ds.feature_dim;
    if (model.num_styles == 0) model.num_styles = ds.num_styles;
    if (model.num_types == 0) model.num_types = ds.num_types;
    if (model.text_vocab_size == 0) model.text_vocab_size = ds.vocab_size;
    if (model.base_layers.empty()) model.base_layers = {64, 32};

    if (model.input_dim != ds.feature_dim)
        throw ConfigError("model.input_dim " + std::to_string(model.input_dim) +
                          " does not match dataset feature_dim " +
                          std::to_string(ds.feature_dim));
    if (model.num_styles != ds.num_styles)
        throw ConfigError("model.num_styles " + std::to_string(model.num_styles) +
                          " does not match dataset num_styles " +
                          std::to_string(ds.num_styles));
    if (model.num_types != ds.num_types)
        throw ConfigError("model.num_types " + std::to_string(model.num_types) +
                          " does not match dataset num_types " + std::to_string(ds.num_types));
    if (model.text_vocab_size != ds.vocab_size)
        throw ConfigError("model.text_vocab_size " + std::to_string(model.text_vocab_size) +
                          " does not match dataset vocab_size " +
                          std::to_string(ds.vocab_size));
    validate(model);
}

namespace {

std::vector<DuplicateInjection> plan_duplicates(const ExperimentConfig& cfg, std::size_t n) {
    std::size_t want = cfg.duplicate_exact + cfg.duplicate_scaled;
    if (want == 0) return {};
    if (n < 2 * want)
        throw ConfigError("not enough items for the requested duplicate injections");
    Rng rng = substream(cfg.seed, "image_dups");
    std::set<std::size_t> used;
    auto pick = [&]() {
        std::size_t v;
        do {
            v = rng.below(n);
        } while (used.count(v) > 0);
        used.insert(v);
        return v;
    };
    std::vector<DuplicateInjection> out;
    for (std::size_t k = 0; k < cfg.duplicate_exact; ++k) {
        std::size_t src = pick();
        out.push_back({src, pick(), 1.0});
    }
    for (std::size_t k = 0; k < cfg.duplicate_scaled; ++k) {
        std::size_t src = pick();
        out.push_back({src, pick(), 2.0});
    }
    return out;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

void cmd_synth(const ExperimentConfig& cfg, const std::string& out_dir) {
    SynthResult res = generate(cfg.synth);
    std::vector<DuplicateInjection> inject = plan_duplicates(cfg, res.dataset.items.size());
    std::vector<Image> images = generate_images(cfg.synth, res.dataset.items.size(), inject);

    std::filesystem::create_directories(out_dir);
    write_dataset(res.dataset, out_dir + "/dataset.tsv");
    BlobWriter blob;
    blob.add_text("format", kImagesFormat);
    for (std::size_t i = 0; i < res.dataset.items.size(); ++i) {
        const Image& img = images[i];
        blob.add_tensor("img/" + res.dataset.items[i].id,
                        Tensor({img.height, img.width}, img.pixels));
    }
    blob.save(out_dir + "/images.blob");
    print_warnings(res.warnings);
    std::cout << "items\t" << res.dataset.items.size() << "\n";
}

void cmd_curate(const ExperimentConfig& cfg, const std::string& dataset_path,
                const std::string& images_path, const std::string& out_dir) {
    Dataset ds = read_dataset(dataset_path);
    BlobReader images(images_path);
    if (!images.has("format") || images.text("format") != kImagesFormat)
        throw InputError("'" + images_path + "' is not an image container");

    std::vector<PHash> hashes;
    hashes.reserve(ds.items.size());
    for (const ItemRecord& item : ds.items) {
        std::string name = "img/" + item.id;
        if (!images.has(name)) throw InputError("no image stored for item '" + item.id + "'");
        const Tensor& t = images.tensor(name);
        if (t.shape.size() != 2)
            throw InputError("image entry '" + name + "' is not a 2-D intensity grid");
        hashes.push_back(phash(Image{t.shape[1], t.shape[0], t.values}));
    }

    CurationResult deduped = dedup(ds.items, hashes, cfg.curation.hamming_threshold);
    std::vector<RemovalRecord> removals = deduped.removals;
    std::vector<ItemRecord> items = deduped.kept;
    if (cfg.curation.outlier_fraction > 0.0) {
        TypeClassifier clf = train_type_classifier(items, ds.feature_dim, ds.num_types);
        CurationResult filtered = outlier_filter(items, clf, cfg.curation.outlier_fraction);
        removals.insert(removals.end(), filtered.removals.begin(), filtered.removals.end());
        items = filtered.kept;
    }
    SplitOutcome outcome = split(items, cfg.curation.split_ratios, cfg.seed);

    Dataset cleaned = ds;
    cleaned.items = outcome.items;
    validate(cleaned);

    std::filesystem::create_directories(out_dir);
    write_dataset(cleaned, out_dir + "/dataset.tsv");
    write_removal_log(removals, out_dir + "/removals.tsv");
    print_warnings(outcome.warnings);
    std::cout << "kept\t" << cleaned.items.size() << "\nremoved\t" << removals.size() << "\n";
}

void cmd_train(const ExperimentConfig& cfg, const std::string& variant,
               const std::string& dataset_path, const std::string& base_checkpoint,
               const std::string& out_dir) {
    Dataset ds = read_dataset(dataset_path);
    if (variant == "vte") {
        if (base_checkpoint.empty())
            throw ConfigError("vte training requires --base CHECKPOINT");
        Checkpoint base = load_checkpoint(base_checkpoint);
        if (base.config.text_vocab_size != ds.vocab_size)
            throw InputError("checkpoint vocabulary size " +
                             std::to_string(base.config.text_vocab_size) +
                             " does not match dataset vocab_size " +
                             std::to_string(ds.vocab_size));
        TrainResult result = train_vte(ds, base.config, cfg.loss, cfg.training, base.params);
        std::filesystem::create_directories(out_dir);
        save_checkpoint(out_dir + "/checkpoint.blob", {"vte", base.config, result.params});
        write_training_log(result.log, out_dir + "/train_log.tsv");
        std::cout << "checkpoint\t" << out_dir << "/checkpoint.blob\n";
        return;
    }

    Variant v = parse_variant(variant);
    ModelConfig model = cfg.model;
    resolve_model(model, ds);
    std::vector<PairSample> pairs =
        strategic_pairs(ds.items, cfg.sampling.n_positive, cfg.sampling.neg_ratio, cfg.seed);
    TrainResult result = train_siamese(v, ds, pairs, model, cfg.loss, cfg.training);

    std::filesystem::create_directories(out_dir);
    save_checkpoint(out_dir + "/checkpoint.blob", {variant_name(v), model, result.params});
    write_pairs(pairs, out_dir + "/pairs.tsv");
    write_training_log(result.log, out_dir + "/train_log.tsv");
    std::cout << "checkpoint\t" << out_dir << "/checkpoint.blob\n";
}

void cmd_eval(const ExperimentConfig&, const std::string& checkpoint_path,
              const std::string& dataset_path, const std::string& pairs_path,
              const std::string& out_dir) {
    Checkpoint ck = load_checkpoint(checkpoint_path);
    Dataset ds = read_dataset(dataset_path);
    std::vector<PairSample> pairs = read_pairs(pairs_path);
    EvaluationReport report = evaluate_pairs(ds, pairs, ck.params, ck.config);

    std::filesystem::create_directories(out_dir);
    write_report(report, out_dir + "/report");
    std::cout << "auc\t" << format_double(report.auc_overall) << "\n";
}

void cmd_margin_sweep(const ExperimentConfig& cfg, const std::string& dataset_path,
                      const std::vector<double>& candidates_override,
                      const std::string& out_dir) {
    std::vector<double> candidates =
        candidates_override.empty() ? cfg.training.margin_candidates : candidates_override;
    if (candidates.empty())
        throw ConfigError(
            "no margin candidates (set training.margin_candidates or pass --candidates)");

    Dataset ds = read_dataset(dataset_path);
    ModelConfig model = cfg.model;
    resolve_model(model, ds);
    std::vector<PairSample> pairs =
        strategic_pairs(ds.items, cfg.sampling.n_positive, cfg.sampling.neg_ratio, cfg.seed);
    MarginSweepResult sweep = cross_validate_margin(Variant::canonical, ds, pairs, candidates,
                                                    model, cfg.loss, cfg.training);

    std::filesystem::create_directories(out_dir);
    std::string path = out_dir + "/margins.tsv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "#stylecompat-margins v1\n#margin\tval_auc\n";
    for (const auto& [margin, auc] : sweep.auc_by_margin)
        out << format_double(margin) << '\t' << format_double(auc) << '\n';
    out << "#best\t" << format_double(sweep.best_margin) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
    std::cout << "best_margin\t" << format_double(sweep.best_margin) << "\n";
}

void cmd_retrieve(const ExperimentConfig&, const std::string& checkpoint_path,
                  const std::string& dataset_path, const std::string& query_id, std::size_t k,
                  const std::vector<std::uint32_t>& tokens, bool exclude_same_type,
                  const std::string& out_dir) {
    Checkpoint ck = load_checkpoint(checkpoint_path);
    Dataset ds = read_dataset(dataset_path);
    std::map<std::string, std::size_t> ids = index_by_id(ds);
    auto it = ids.find(query_id);
    if (it == ids.end()) throw InputError("unknown query id '" + query_id + "'");
    const ItemRecord& query = ds.items[it->second];

    QueryResult result;
    if (!tokens.empty()) {
        EmbeddingIndex index = build_index(
            ds.items,
            [&](const ItemRecord& item) {
                return project_joint(embed_item(item.features, ck.params, ck.config),
                                     JointSide::visual, ck.params);
            },
            Metric::dot);
        std::vector<double> x_img = project_joint(
            embed_item(query.features, ck.params, ck.config), JointSide::visual, ck.params);
        std::vector<double> x_text = project_joint(text_encode(tokens, ck.params, ck.config),
                                                   JointSide::text, ck.params);
        result = query_with_text(index, x_img, x_text, k);
    } else {
        EmbeddingIndex index = build_index(
            ds.items,
            [&](const ItemRecord& item) {
                return embed_item(item.features, ck.params, ck.config);
            },
            Metric::euclidean);
        std::vector<double> embedded = embed_item(query.features, ck.params, ck.config);
        std::optional<std::uint32_t> exclude;
        if (exclude_same_type) exclude = query.furniture_type;
        result = query_compatible(index, embedded, k, exclude);
    }

    std::filesystem::create_directories(out_dir);
    write_query_results(result, out_dir + "/results.tsv");
    for (std::size_t r = 0; r < result.hits.size(); ++r)
        std::cout << (r + 1) << '\t' << result.hits[r].id << '\t'
                  << format_double(result.hits[r].value) << '\n';
    if (result.truncated) std::cerr << "warning: fewer than k items were available\n";
}

namespace {

ParamMap param_subset(const ParamMap& params, const std::vector<std::string>& prefixes) {
    ParamMap out;
    for (const auto& [name, t] : params)
        for (const std::string& p : prefixes)
            if (name.rfind(p, 0) == 0) {
                out.emplace(name, t);
                break;
            }
    return out;
}

LossProbe probe_of(Graph& g, NodeId total, const ParamNodes& nodes, bool want_grads) {
    // The exact power-of-two factor shrinks round-off noise together with the
    // signal, so coordinates whose true gradient is zero stay far below the
    // relative-error floor. It adds no rounding of its own and rescales the
    // analytic and numeric sides identically.
    NodeId scaled = g.scale(1.0 / 64.0, total);
    LossProbe probe;
    probe.value = g.value_scalar(scaled);
    probe.kink_distance = g.kink_distance();
    if (want_grads) {
        g.backward(scaled);
        probe.grads = collect_grads(g, nodes);
    }
    return probe;
}

}  // namespace

std::vector<GradCheckLine> gradcheck_losses(std::uint64_t seed, std::size_t samples_per_loss) {
    ModelConfig small;
    small.input_dim = 6;
    small.base_layers = {7, 5};
    small.embedding_dim = 4;
    small.num_styles = 3;
    small.num_types = 2;
    small.text_vocab_size = 6;
    small.token_embed_dim = 4;
    small.lstm_hidden = 4;
    small.joint_dim = 3;

    Rng feature_rng = substream(seed, "gradcheck/features");
    auto rand_vec = [&](std::size_t n) {
        std::vector<double> v(n);
        for (double& x : v) x = feature_rng.gaussian();
        return v;
    };
    std::vector<std::vector<double>> f;
    for (int i = 0; i < 4; ++i) f.push_back(rand_vec(small.input_dim));
    std::vector<double> visual = rand_vec(small.embedding_dim);

    Rng param_rng = substream(seed, "gradcheck/params");
    ParamMap full = init_params(small, param_rng);

    LossFn contrastive = [f, small](const ParamMap& p, bool want_grads) {
        Graph g;
        ParamNodes nodes = lift_params(g, p);
        NodeId t1 = build_contrastive(
            g, build_embed(g, g.leaf({f[0].size()}, f[0]), nodes, small),
            build_embed(g, g.leaf({f[1].size()}, f[1]), nodes, small), 1, 1.0);
        NodeId t2 = build_contrastive(
            g, build_embed(g, g.leaf({f[2].size()}, f[2]), nodes, small),
            build_embed(g, g.leaf({f[3].size()}, f[3]), nodes, small), 0, 2.0);
        return probe_of(g, g.add(t1, t2), nodes, want_grads);
    };

    LossFn categorical = [f, small](const ParamMap& p, bool want_grads) {
        Graph g;
        ParamNodes nodes = lift_params(g, p);
        NodeId fa = g.leaf({f[0].size()}, f[0]);
        NodeId fb = g.leaf({f[1].size()}, f[1]);
        NodeId term = build_contrastive(g, build_embed(g, fa, nodes, small),
                                        build_embed(g, fb, nodes, small), 0, 2.0);
        term = g.add(term, build_cross_entropy(
                             g, g.softmax(build_class_logits(g, fa, nodes, small)), 0));
        term = g.add(term, build_cross_entropy(
                             g, g.softmax(build_class_logits(g, fb, nodes, small)), 2));
        return probe_of(g, term, nodes, want_grads);
    };

    LossFn hinge = [visual, small](const ParamMap& p, bool want_grads) {
        Graph g;
        ParamNodes nodes = lift_params(g, p);
        NodeId x_img = build_project_joint(g, g.leaf({visual.size()}, visual),
                                           JointSide::visual, nodes);
        NodeId correct = build_project_joint(
            g, build_text_encode(g, {1, 2, 3}, nodes, small), JointSide::text, nodes);
        std::vector<NodeId> wrongs;
        for (const std::vector<std::uint32_t>& toks :
             std::vector<std::vector<std::uint32_t>>{{2, 4}, {0, 5, 3}, {4}})
            wrongs.push_back(build_project_joint(g, build_text_encode(g, toks, nodes, small),
                                                 JointSide::text, nodes));
        return probe_of(g, build_hinge_rank(g, x_img, correct, wrongs, 0.7), nodes,
                        want_grads);
    };

    const double epsilon = 1e-4;
    std::vector<GradCheckLine> lines;
    {
        Rng fd = substream(seed, "gradcheck/fd/contrastive");
        lines.push_back({"contrastive",
                         finite_difference_check(contrastive, param_subset(full, {"base.", "E."}),
                                                 epsilon, samples_per_loss, fd)});
    }
    {
        Rng fd = substream(seed, "gradcheck/fd/categorical");
        lines.push_back(
            {"categorical",
             finite_difference_check(categorical, param_subset(full, {"base.", "E.", "C."}),
                                     epsilon, samples_per_loss, fd)});
    }
    {
        Rng fd = substream(seed, "gradcheck/fd/hinge_rank");
        lines.push_back(
            {"hinge_rank",
             finite_difference_check(
                 hinge,
                 param_subset(full, {"token_table", "lstm.", "visual_proj.", "text_proj."}),
                 epsilon, samples_per_loss, fd)});
    }
    return lines;
}

void cmd_gradcheck(const ExperimentConfig& cfg) {
    std::vector<GradCheckLine> lines = gradcheck_losses(cfg.seed);
    std::string failed;
    for (const GradCheckLine& line : lines) {
        std::cout << line.name << '\t' << format_double(line.result.max_rel_error) << '\t'
                  << line.result.checked << " checked\t" << line.result.skipped
                  << " skipped\n";
        if (!(line.result.max_rel_error < kGradTolerance)) failed = line.name;
    }
    if (!failed.empty())
        throw NumericsError("gradient check failed for loss '" + failed + "'");
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"style compatibility toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed_override = 0;
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    CLI::Option* seed_opt =
        app.add_option("--seed", seed_override, "override the config seed");
    app.add_option("--out", out_dir, "output directory (default .)");

    std::string dataset_path, images_path, checkpoint_path, pairs_path, variant, base_ckpt,
        query_id;
    std::vector<double> candidates;
    std::vector<std::uint32_t> tokens;
    std::size_t k = 5;
    bool exclude_same_type = false;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset and images");
    CLI::App* curate =
        app.add_subcommand("curate", "deduplicate, drop outliers, and re-split a dataset");
    curate->add_option("dataset", dataset_path, "dataset file")->required();
    curate->add_option("images", images_path, "image container")->required();
    CLI::App* train = app.add_subcommand("train", "train a model variant");
    train->add_option("variant", variant, "canonical|short|categorical|vte")->required();
    train->add_option("dataset", dataset_path, "dataset file")->required();
    train->add_option("--base", base_ckpt, "visual checkpoint (vte only)");
    CLI::App* eval = app.add_subcommand("eval", "score pairs and write a report");
    eval->add_option("checkpoint", checkpoint_path, "model checkpoint")->required();
    eval->add_option("dataset", dataset_path, "dataset file")->required();
    eval->add_option("pairs", pairs_path, "pair file")->required();
    CLI::App* sweep =
        app.add_subcommand("margin-sweep", "cross-validate contrastive margin candidates");
    sweep->add_option("dataset", dataset_path, "dataset file")->required();
    sweep->add_option("--candidates", candidates, "margin candidates")->delimiter(',');
    CLI::App* retrieve = app.add_subcommand("retrieve", "rank compatible items for a query");
    retrieve->add_option("checkpoint", checkpoint_path, "model checkpoint")->required();
    retrieve->add_option("dataset", dataset_path, "dataset file")->required();
    retrieve->add_option("query", query_id, "query item id")->required();
    retrieve->add_option("-k,--k", k, "number of results (default 5)");
    retrieve->add_option("--tokens", tokens, "token ids for a joint-space text query")
        ->delimiter(',');
    retrieve->add_flag("--exclude-same-type", exclude_same_type,
                       "drop hits sharing the query's furniture type");
    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "finite-difference audit of loss gradients");

    std::vector<const char*> argv;
    argv.push_back("stylecompat");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        ExperimentConfig cfg = load_experiment_config(config_path);
        if (seed_opt->count() > 0) {
            cfg.seed = seed_override;
            cfg.training.seed = seed_override;
            cfg.synth.seed = seed_override;
        }
        if (app.got_subcommand(synth)) {
            cmd_synth(cfg, out_dir);
        } else if (app.got_subcommand(curate)) {
            cmd_curate(cfg, dataset_path, images_path, out_dir);
        } else if (app.got_subcommand(train)) {
            cmd_train(cfg, variant, dataset_path, base_ckpt, out_dir);
        } else if (app.got_subcommand(eval)) {
            cmd_eval(cfg, checkpoint_path, dataset_path, pairs_path, out_dir);
        } else if (app.got_subcommand(sweep)) {
            cmd_margin_sweep(cfg, dataset_path, candidates, out_dir);
        } else if (app.got_subcommand(retrieve)) {
            cmd_retrieve(cfg, checkpoint_path, dataset_path, query_id, k, tokens,
                         exclude_same_type, out_dir);
        } else if (app.got_subcommand(gradcheck)) {
            cmd_gradcheck(cfg);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericsError& e) {
        std::cerr << "numerics error: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "numerics error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace stylecompat::commands
