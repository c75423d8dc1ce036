#include "stylecompat/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace stylecompat {

namespace {

constexpr const char* kDatasetMagic = "#stylecompat-dataset v1";
constexpr const char* kPairsMagic = "#stylecompat-pairs v1";

std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::vector<double> parse_csv_doubles(const std::string& text, const std::string& where) {
    std::vector<double> out;
    if (text.empty()) return out;
    for (const std::string& f : split_on(text, ',')) out.push_back(parse_double(f, where));
    return out;
}

std::vector<std::uint32_t> parse_csv_u32(const std::string& text, const std::string& where) {
    std::vector<std::uint32_t> out;
    if (text.empty()) return out;
    for (const std::string& f : split_on(text, ',')) out.push_back(parse_u32(f, where));
    return out;
}

std::string join_csv_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

std::string join_csv_u32(const std::vector<std::uint32_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

std::size_t header_field(const std::string& header, const std::string& key,
                         const std::string& path) {
    std::string needle = key + "=";
    std::size_t pos = header.find(needle);
    if (pos == std::string::npos)
        throw InputError(path + ": header is missing field '" + key + "'");
    return parse_u32(split_on(header.substr(pos + needle.size()), ' ')[0], path + " header " + key);
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& text, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
        throw InputError(where + ": malformed number '" + text + "'");
    return v;
}

std::uint32_t parse_u32(const std::string& text, const std::string& where) {
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw InputError(where + ": malformed integer '" + text + "'");
    return v;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw InputError("unknown split '" + name + "'");
}

void validate(const Dataset& ds) {
    std::set<std::string> seen;
    for (const ItemRecord& item : ds.items) {
        if (item.id.empty()) throw InputError("item with empty id");
        if (!seen.insert(item.id).second) throw InputError("duplicate item id '" + item.id + "'");
        if (item.style >= ds.num_styles)
            throw InputError("item '" + item.id + "': style index out of range");
        if (item.furniture_type >= ds.num_types)
            throw InputError("item '" + item.id + "': furniture_type index out of range");
        if (item.features.size() != ds.feature_dim)
            throw InputError("item '" + item.id + "': feature length mismatch");
        for (std::uint32_t t : item.tokens)
            if (t >= ds.vocab_size)
                throw InputError("item '" + item.id + "': token id out of range");
    }
}

std::map<std::string, std::size_t> index_by_id(const Dataset& ds) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ds.items.size(); ++i) index.emplace(ds.items[i].id, i);
    return index;
}

std::vector<std::size_t> split_indices(const Dataset& ds, Split split) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.items.size(); ++i)
        if (ds.items[i].split == split) out.push_back(i);
    return out;
}

void write_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out = open_out(path);
    out << kDatasetMagic << " feature_dim=" << ds.feature_dim << " num_styles=" << ds.num_styles
        << " num_types=" << ds.num_types << " vocab_size=" << ds.vocab_size << "\n";
    for (const ItemRecord& item : ds.items) {
        out << item.id << '\t' << item.style << '\t' << item.furniture_type << '\t'
            << join_csv_doubles(item.features) << '\t' << join_csv_u32(item.tokens) << '\t'
            << split_name(item.split) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind(kDatasetMagic, 0) != 0)
        throw InputError(path + ": missing dataset header");

    Dataset ds;
    ds.feature_dim = header_field(line, "feature_dim", path);
    ds.num_styles = header_field(line, "num_styles", path);
    ds.num_types = header_field(line, "num_types", path);
    ds.vocab_size = header_field(line, "vocab_size", path);

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string where = path + ":" + std::to_string(lineno);
        std::vector<std::string> fields = split_on(line, '\t');
        if (fields.size() != 6) throw InputError(where + ": expected 6 tab-separated fields");
        ItemRecord item;
        item.id = fields[0];
        item.style = parse_u32(fields[1], where);
        item.furniture_type = parse_u32(fields[2], where);
        item.features = parse_csv_doubles(fields[3], where);
        item.tokens = parse_csv_u32(fields[4], where);
        item.split = parse_split(fields[5]);
        ds.items.push_back(std::move(item));
    }
    validate(ds);
    return ds;
}

void write_pairs(const std::vector<PairSample>& pairs, const std::string& path) {
    std::ofstream out = open_out(path);
    out << kPairsMagic << "\n";
    for (const PairSample& p : pairs) out << p.i << '\t' << p.j << '\t' << p.y << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<PairSample> read_pairs(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind(kPairsMagic, 0) != 0)
        throw InputError(path + ": missing pair-file header");
    std::vector<PairSample> pairs;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string where = path + ":" + std::to_string(lineno);
        std::vector<std::string> fields = split_on(line, '\t');
        if (fields.size() != 3) throw InputError(where + ": expected 3 tab-separated fields");
        std::uint32_t y = parse_u32(fields[2], where);
        if (y > 1) throw InputError(where + ": pair label must be 0 or 1");
        pairs.push_back({fields[0], fields[1], static_cast<int>(y)});
    }
    return pairs;
}

}  // namespace stylecompat
