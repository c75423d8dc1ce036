#include "stylecompat/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "stylecompat/rng.hpp"

namespace stylecompat {

namespace {

constexpr std::size_t kImageSize = 64;

std::vector<std::vector<double>> draw_prototypes(std::size_t count, std::size_t dim, Rng& rng) {
    std::vector<std::vector<double>> protos(count, std::vector<double>(dim));
    for (auto& p : protos)
        for (double& v : p) v = rng.gaussian();
    return protos;
}

std::string item_id(std::size_t index) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "item-%06zu", index);
    return buf;
}

}  // namespace

void validate(const SynthSpec& spec) {
    if (spec.num_styles < 2) throw ConfigError("num_styles must be at least 2");
    if (spec.num_types < 2) throw ConfigError("num_types must be at least 2");
    if (spec.items_per_cell < 1) throw ConfigError("items_per_cell must be at least 1");
    if (spec.feature_dim < 1) throw ConfigError("feature_dim must be at least 1");
    if (spec.noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
    if (spec.words_per_style < 1) throw ConfigError("words_per_style must be at least 1");
    if (spec.num_colors < 1 || spec.num_materials < 1)
        throw ConfigError("color and material vocabularies must be non-empty");
    if (spec.planted_outlier_fraction < 0.0 || spec.planted_outlier_fraction >= 1.0)
        throw ConfigError("planted_outlier_fraction must lie in [0, 1)");
}

std::size_t synth_vocab_size(const SynthSpec& spec) {
    return spec.num_styles * spec.words_per_style + spec.num_types + spec.num_colors +
           spec.num_materials;
}

SynthResult generate(const SynthSpec& spec) {
    validate(spec);

    SynthResult result;
    Rng proto_rng = substream(spec.seed, "prototypes");
    result.style_prototypes = draw_prototypes(spec.num_styles, spec.feature_dim, proto_rng);
    result.type_prototypes = draw_prototypes(spec.num_types, spec.feature_dim, proto_rng);

    Dataset& ds = result.dataset;
    ds.feature_dim = spec.feature_dim;
    ds.num_styles = spec.num_styles;
    ds.num_types = spec.num_types;
    ds.vocab_size = synth_vocab_size(spec);

    auto make_features = [&](std::size_t style, std::size_t type, Rng& rng) {
        std::vector<double> f(spec.feature_dim);
        for (std::size_t d = 0; d < spec.feature_dim; ++d)
            f[d] = spec.style_signal * result.style_prototypes[style][d] +
                   spec.type_signal * result.type_prototypes[type][d] +
                   rng.gaussian(0.0, spec.noise_sigma);
        return f;
    };

    Rng feature_rng = substream(spec.seed, "features");
    Rng token_rng = substream(spec.seed, "tokens");
    std::size_t index = 0;
    const std::uint32_t type_base = static_cast<std::uint32_t>(spec.num_styles *
                                                               spec.words_per_style);
    const std::uint32_t color_base = type_base + static_cast<std::uint32_t>(spec.num_types);
    const std::uint32_t material_base = color_base + static_cast<std::uint32_t>(spec.num_colors);

    for (std::uint32_t style = 0; style < spec.num_styles; ++style)
        for (std::uint32_t type = 0; type < spec.num_types; ++type)
            for (std::size_t k = 0; k < spec.items_per_cell; ++k) {
                ItemRecord item;
                item.id = item_id(index++);
                item.style = style;
                item.furniture_type = type;
                item.features = make_features(style, type, feature_rng);
                std::uint32_t style_word_base =
                    style * static_cast<std::uint32_t>(spec.words_per_style);
                item.tokens = {
                    style_word_base +
                        static_cast<std::uint32_t>(token_rng.below(spec.words_per_style)),
                    style_word_base +
                        static_cast<std::uint32_t>(token_rng.below(spec.words_per_style)),
                    type_base + type,
                    color_base + static_cast<std::uint32_t>(token_rng.below(spec.num_colors)),
                    material_base +
                        static_cast<std::uint32_t>(token_rng.below(spec.num_materials)),
                };
                ds.items.push_back(std::move(item));
            }

    if (spec.planted_outlier_fraction > 0.0) {
        std::size_t n = ds.items.size();
        std::size_t n_outliers =
            static_cast<std::size_t>(spec.planted_outlier_fraction * static_cast<double>(n));
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng outlier_rng = substream(spec.seed, "outliers");
        outlier_rng.shuffle(order);
        for (std::size_t o = 0; o < n_outliers; ++o) {
            ItemRecord& item = ds.items[order[o]];
            // Mislabeled on purpose: features drawn from a different cell.
            std::size_t wrong_style =
                (item.style + 1 + outlier_rng.below(spec.num_styles - 1)) % spec.num_styles;
            std::size_t wrong_type =
                (item.furniture_type + 1 + outlier_rng.below(spec.num_types - 1)) %
                spec.num_types;
            item.features = make_features(wrong_style, wrong_type, outlier_rng);
            result.outlier_ids.push_back(item.id);
        }
    }

    SplitOutcome outcome = split(ds.items, spec.split_ratios, spec.seed);
    ds.items = std::move(outcome.items);
    result.warnings = std::move(outcome.warnings);
    validate(ds);
    return result;
}

std::vector<Image> generate_images(const SynthSpec& spec, std::size_t count,
                                   const std::vector<DuplicateInjection>& injections) {
    std::vector<Image> images(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = substream(spec.seed, "image", i);
        Image& img = images[i];
        img.width = kImageSize;
        img.height = kImageSize;
        img.pixels.assign(kImageSize * kImageSize, 0.0);
        for (int wave = 0; wave < 4; ++wave) {
            double amp = rng.uniform(0.5, 1.5);
            double fx = rng.uniform(1.0, 8.0);
            double fy = rng.uniform(1.0, 8.0);
            double phase = rng.uniform(0.0, 2.0 * M_PI);
            for (std::size_t y = 0; y < kImageSize; ++y)
                for (std::size_t x = 0; x < kImageSize; ++x)
                    img.pixels[y * kImageSize + x] +=
                        amp * std::sin(2.0 * M_PI *
                                           (fx * static_cast<double>(x) +
                                            fy * static_cast<double>(y)) /
                                           static_cast<double>(kImageSize) +
                                       phase);
        }
    }
    for (const DuplicateInjection& inj : injections) {
        if (inj.src >= count || inj.dst >= count)
            throw ContractError("duplicate injection index out of range");
        images[inj.dst] = images[inj.src];
        for (double& p : images[inj.dst].pixels) p *= inj.scale;
    }
    return images;
}

}  // namespace stylecompat
