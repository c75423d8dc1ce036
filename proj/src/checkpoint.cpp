#include "stylecompat/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "stylecompat/dataset.hpp"
#include "stylecompat/errors.hpp"

namespace stylecompat {

namespace {

constexpr char kMagic[8] = {'S', 'C', 'B', 'L', 'O', 'B', '1', '\n'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
    char buf[8];
    if (!in.read(buf, 8)) throw InputError(path + ": truncated container");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const std::string& path) {
    std::uint64_t len = get_u64(in, path);
    std::string s(len, '\0');
    if (len && !in.read(s.data(), static_cast<std::streamsize>(len)))
        throw InputError(path + ": truncated string entry");
    return s;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * 8));
}

}  // namespace

void BlobWriter::add_text(const std::string& name, const std::string& text) {
    entries_.push_back({0, name, text, Tensor{}});
}

void BlobWriter::add_tensor(const std::string& name, const Tensor& t) {
    entries_.push_back({1, name, {}, t});
}

void BlobWriter::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 8);
    put_u64(out, entries_.size());
    for (const Entry& e : entries_) {
        out.put(static_cast<char>(e.kind));
        put_string(out, e.name);
        if (e.kind == 0) {
            put_string(out, e.text);
        } else {
            put_u64(out, e.tensor.shape.size());
            for (std::size_t d : e.tensor.shape) put_u64(out, d);
            out.put(e.tensor.requires_grad ? 1 : 0);
            put_doubles(out, e.tensor.values);
        }
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

BlobReader::BlobReader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw InputError(path + ": not a stylecompat container");
    std::uint64_t count = get_u64(in, path);
    for (std::uint64_t e = 0; e < count; ++e) {
        int kind = in.get();
        if (kind != 0 && kind != 1) throw InputError(path + ": corrupt entry kind");
        std::string name = get_string(in, path);
        order_.push_back(name);
        if (kind == 0) {
            texts_.emplace(name, get_string(in, path));
        } else {
            std::uint64_t rank = get_u64(in, path);
            std::vector<std::size_t> shape;
            std::size_t numel = 1;
            for (std::uint64_t d = 0; d < rank; ++d) {
                shape.push_back(get_u64(in, path));
                numel *= shape.back();
            }
            int rg = in.get();
            if (rg != 0 && rg != 1) throw InputError(path + ": corrupt tensor flags");
            std::vector<double> values(numel);
            if (numel && !in.read(reinterpret_cast<char*>(values.data()),
                                  static_cast<std::streamsize>(numel * 8)))
                throw InputError(path + ": truncated tensor entry");
            tensors_.emplace(name, Tensor(std::move(shape), std::move(values), rg == 1));
        }
    }
}

bool BlobReader::has(const std::string& name) const {
    return texts_.count(name) > 0 || tensors_.count(name) > 0;
}

const std::string& BlobReader::text(const std::string& name) const {
    auto it = texts_.find(name);
    if (it == texts_.end()) throw InputError("container has no text entry '" + name + "'");
    return it->second;
}

const Tensor& BlobReader::tensor(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw InputError("container has no tensor entry '" + name + "'");
    return it->second;
}

std::vector<std::string> BlobReader::names() const { return order_; }

std::string encode_model_config(const ModelConfig& c) {
    std::ostringstream out;
    out << "input_dim=" << c.input_dim << "\n";
    out << "base_layers=";
    for (std::size_t i = 0; i < c.base_layers.size(); ++i)
        out << (i ? "," : "") << c.base_layers[i];
    out << "\n";
    out << "short_truncate_at=";
    if (c.short_truncate_at)
        out << *c.short_truncate_at;
    else
        out << "none";
    out << "\n";
    out << "short_pool_group=" << c.short_pool_group << "\n";
    out << "embedding_dim=" << c.embedding_dim << "\n";
    out << "num_styles=" << c.num_styles << "\n";
    out << "num_types=" << c.num_types << "\n";
    out << "text_vocab_size=" << c.text_vocab_size << "\n";
    out << "token_embed_dim=" << c.token_embed_dim << "\n";
    out << "lstm_hidden=" << c.lstm_hidden << "\n";
    out << "joint_dim=" << c.joint_dim << "\n";
    return out.str();
}

ModelConfig decode_model_config(const std::string& text) {
    ModelConfig c;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw InputError("malformed config line '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto as_size = [&]() -> std::size_t { return parse_u32(value, "config " + key); };
        if (key == "input_dim") c.input_dim = as_size();
        else if (key == "base_layers") {
            c.base_layers.clear();
            std::size_t start = 0;
            while (start <= value.size() && !value.empty()) {
                std::size_t pos = value.find(',', start);
                std::string tok = value.substr(start, pos == std::string::npos ? pos : pos - start);
                c.base_layers.push_back(parse_u32(tok, "config base_layers"));
                if (pos == std::string::npos) break;
                start = pos + 1;
            }
        } else if (key == "short_truncate_at") {
            if (value == "none")
                c.short_truncate_at.reset();
            else
                c.short_truncate_at = as_size();
        } else if (key == "short_pool_group") c.short_pool_group = as_size();
        else if (key == "embedding_dim") c.embedding_dim = as_size();
        else if (key == "num_styles") c.num_styles = as_size();
        else if (key == "num_types") c.num_types = as_size();
        else if (key == "text_vocab_size") c.text_vocab_size = as_size();
        else if (key == "token_embed_dim") c.token_embed_dim = as_size();
        else if (key == "lstm_hidden") c.lstm_hidden = as_size();
        else if (key == "joint_dim") c.joint_dim = as_size();
        else throw InputError("unknown config key '" + key + "'");
    }
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    BlobWriter w;
    w.add_text("format", "stylecompat-checkpoint v1");
    w.add_text("kind", ckpt.kind);
    w.add_text("model_config", encode_model_config(ckpt.config));
    for (const auto& [name, t] : ckpt.params) w.add_tensor("param/" + name, t);
    w.save(path);
}

Checkpoint load_checkpoint(const std::string& path) {
    BlobReader r(path);
    if (!r.has("format") || r.text("format") != "stylecompat-checkpoint v1")
        throw InputError(path + ": not a checkpoint file");
    Checkpoint ckpt;
    ckpt.kind = r.text("kind");
    ckpt.config = decode_model_config(r.text("model_config"));
    for (const std::string& name : r.names())
        if (name.rfind("param/", 0) == 0) ckpt.params.emplace(name.substr(6), r.tensor(name));
    return ckpt;
}

std::uint64_t params_hash(const ParamMap& params) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& [name, t] : params) {
        mix(name.data(), name.size());
        mix(t.values.data(), t.values.size() * sizeof(double));
    }
    return h;
}

}  // namespace stylecompat
