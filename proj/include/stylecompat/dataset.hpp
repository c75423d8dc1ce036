#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stylecompat/errors.hpp"

namespace stylecompat {

enum class Split : std::uint8_t { train, val, test };

const char* split_name(Split s);
Split parse_split(const std::string& name);

struct ItemRecord {
    std::string id;
    std::uint32_t style = 0;
    std::uint32_t furniture_type = 0;
    std::vector<double> features;
    std::vector<std::uint32_t> tokens;
    Split split = Split::train;
};

struct Dataset {
    std::size_t feature_dim = 0;
    std::size_t num_styles = 0;
    std::size_t num_types = 0;
    std::size_t vocab_size = 0;
    std::vector<ItemRecord> items;
};

// Checks id uniqueness, label ranges, feature lengths, and token ranges.
void validate(const Dataset& ds);

std::map<std::string, std::size_t> index_by_id(const Dataset& ds);
std::vector<std::size_t> split_indices(const Dataset& ds, Split split);

// Line-delimited text format. Header carries the format version and the
// dimensions; each record line holds id, style, furniture_type,
// comma-separated features, comma-separated token ids, and split.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

struct PairSample {
    std::string i;
    std::string j;
    int y = 0;
};

void write_pairs(const std::vector<PairSample>& pairs, const std::string& path);
std::vector<PairSample> read_pairs(const std::string& path);

// Shared formatting helpers: doubles are written with enough digits to
// round-trip exactly, so re-serialization is byte-stable.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& where);
std::uint32_t parse_u32(const std::string& text, const std::string& where);

}  // namespace stylecompat
