#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stylecompat/curation.hpp"
#include "stylecompat/dataset.hpp"

namespace stylecompat {

// Desk-scale generator with planted style structure. Features are style and
// type prototypes plus Gaussian noise; tokens come from a style-conditioned
// vocabulary so the text genuinely carries style information.
struct SynthSpec {
    std::size_t num_styles = 17;
    std::size_t num_types = 6;
    std::size_t items_per_cell = 10;
    std::size_t feature_dim = 32;
    double style_signal = 3.0;
    double type_signal = 1.5;
    double noise_sigma = 1.0;
    std::size_t words_per_style = 4;  // style-specific vocabulary block size
    std::size_t num_colors = 6;
    std::size_t num_materials = 5;
    double planted_outlier_fraction = 0.0;
    std::array<double, 3> split_ratios = {0.68, 0.12, 0.20};
    std::uint64_t seed = 1;
};

void validate(const SynthSpec& spec);

std::size_t synth_vocab_size(const SynthSpec& spec);

struct SynthResult {
    Dataset dataset;
    std::vector<std::vector<double>> style_prototypes;
    std::vector<std::vector<double>> type_prototypes;
    std::vector<std::string> outlier_ids;  // items whose features were replaced
    std::vector<std::string> warnings;     // from split assignment
};

SynthResult generate(const SynthSpec& spec);

// Per-item intensity grids for curation tests. Injections overwrite dst with
// scale * image(src) after the independent patterns are drawn.
struct DuplicateInjection {
    std::size_t src = 0;
    std::size_t dst = 0;
    double scale = 1.0;
};

std::vector<Image> generate_images(const SynthSpec& spec, std::size_t count,
                                   const std::vector<DuplicateInjection>& injections = {});

}  // namespace stylecompat
