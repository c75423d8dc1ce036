#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stylecompat/dataset.hpp"
#include "stylecompat/losses.hpp"
#include "stylecompat/models.hpp"

namespace stylecompat {

enum class Variant { canonical, short_siamese, categorical };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct TrainingConfig {
    double stage1_lr = 0.01;
    std::size_t stage1_iterations = 50;
    double stage2_lr = 0.0001;
    std::size_t epochs = 8;
    double momentum = 0.9;
    double vte_lr = 0.001;
    std::size_t vte_iterations = 400;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    std::vector<double> margin_candidates;
    std::size_t val_pair_cap = 20000;
};

void validate(const TrainingConfig& config);

struct TrainLogEntry {
    std::string stage;
    std::size_t epoch = 0;
    double loss = 0.0;
    double val_metric = 0.0;  // validation AUC, or recall@1 for VTE
};

struct TrainResult {
    ModelConfig config;
    ParamMap params;
    std::vector<TrainLogEntry> log;
};

struct PairPartition {
    std::vector<PairSample> train;
    std::vector<PairSample> val;
    std::vector<PairSample> test;
};

PairPartition partition_pairs(const Dataset& ds, const std::vector<PairSample>& pairs);

// Stage 1 updates only the new head (E, plus C for the categorical variant)
// with stage1_lr; stage 2 fine-tunes every network parameter with stage2_lr.
TrainResult train_siamese(Variant variant, const Dataset& ds,
                          const std::vector<PairSample>& pairs, const ModelConfig& model,
                          const LossConfig& loss, const TrainingConfig& training);

// Trains token table, LSTM, and the two joint projections with RMSProp while
// the visual network stays frozen (bit-identical before and after).
TrainResult train_vte(const Dataset& ds, const ModelConfig& model, const LossConfig& loss,
                      const TrainingConfig& training, const ParamMap& base_params);

struct MarginSweepResult {
    double best_margin = 0.0;
    std::vector<std::pair<double, double>> auc_by_margin;  // (margin, validation AUC)
};

// One training run per candidate, identical seed; ties go to the smaller
// margin.
MarginSweepResult cross_validate_margin(Variant variant, const Dataset& ds,
                                        const std::vector<PairSample>& pairs,
                                        const std::vector<double>& candidates,
                                        const ModelConfig& model, const LossConfig& loss,
                                        const TrainingConfig& training);

double validation_auc(const Dataset& ds, const std::vector<PairSample>& val_pairs,
                      const ParamMap& params, const ModelConfig& model);

// Fraction of reference items whose own text outranks the 16 wrong texts.
double vte_recall_at_1(const std::vector<ItemRecord>& items, const ParamMap& params,
                       const ModelConfig& model, std::uint64_t seed);

using BufferMap = std::map<std::string, std::vector<double>>;

inline constexpr double kRmspropDecay = 0.9;
inline constexpr double kRmspropEpsilon = 1e-8;

// v <- momentum * v - lr * g; w <- w + v
void sgd_momentum_step(ParamMap& params, const GradMap& grads, BufferMap& velocity, double lr,
                       double momentum, const std::vector<std::string>& trainable);
// acc <- decay * acc + (1 - decay) * g^2; w <- w - lr * g / (sqrt(acc) + eps)
void rmsprop_step(ParamMap& params, const GradMap& grads, BufferMap& acc, double lr,
                  const std::vector<std::string>& trainable);

void write_training_log(const std::vector<TrainLogEntry>& log, const std::string& path);

}  // namespace stylecompat
