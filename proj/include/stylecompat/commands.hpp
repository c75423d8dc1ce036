#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stylecompat/graph.hpp"
#include "stylecompat/losses.hpp"
#include "stylecompat/models.hpp"
#include "stylecompat/synthetic.hpp"
#include "stylecompat/training.hpp"

namespace stylecompat::commands {

struct CurationConfig {
    int hamming_threshold = 4;
    double outlier_fraction = 0.05;  // 0 disables outlier removal
    std::array<double, 3> split_ratios = {0.68, 0.12, 0.20};
};

struct SamplingConfig {
    std::size_t n_positive = 2000;
    std::size_t neg_ratio = 16;
};

// One JSON file configures a whole experiment. The top-level seed is the only
// seed; every module draws from it through named sub-streams.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    ModelConfig model;
    LossConfig loss;
    TrainingConfig training;
    SynthSpec synth;
    std::size_t duplicate_exact = 0;   // image pairs overwritten as exact copies
    std::size_t duplicate_scaled = 0;  // image pairs overwritten at double intensity
    CurationConfig curation;
    SamplingConfig sampling;
};

// Rejects unknown keys and validates every section; "seed" is mandatory.
ExperimentConfig load_experiment_config(const std::string& path);

// Fills dataset-dependent zeros: input_dim, num_styles, num_types,
// text_vocab_size, and an empty base_layers list.
void resolve_model(ModelConfig& model, const Dataset& ds);

void cmd_synth(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_curate(const ExperimentConfig& cfg, const std::string& dataset_path,
                const std::string& images_path, const std::string& out_dir);
void cmd_train(const ExperimentConfig& cfg, const std::string& variant,
               const std::string& dataset_path, const std::string& base_checkpoint,
               const std::string& out_dir);
void cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
              const std::string& dataset_path, const std::string& pairs_path,
              const std::string& out_dir);
void cmd_margin_sweep(const ExperimentConfig& cfg, const std::string& dataset_path,
                      const std::vector<double>& candidates_override,
                      const std::string& out_dir);
void cmd_retrieve(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                  const std::string& dataset_path, const std::string& query_id, std::size_t k,
                  const std::vector<std::uint32_t>& tokens, bool exclude_same_type,
                  const std::string& out_dir);

struct GradCheckLine {
    std::string name;
    FdCheckResult result;
};

inline constexpr double kGradTolerance = 1e-4;

// Finite-difference audit of the three loss gradients on small random models.
std::vector<GradCheckLine> gradcheck_losses(std::uint64_t seed,
                                            std::size_t samples_per_loss = 100);
void cmd_gradcheck(const ExperimentConfig& cfg);

// Full command-line entry point; returns the process exit code.
// 0 success, 1 usage or config error, 2 data error, 3 numerics error.
int run(const std::vector<std::string>& args);

}  // namespace stylecompat::commands
