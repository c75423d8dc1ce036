#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stylecompat/models.hpp"
#include "stylecompat/tensor.hpp"

namespace stylecompat {

// Minimal self-describing binary container: named text and tensor entries,
// written in insertion order with native little-endian doubles. Round trips
// are bit-exact, which the determinism and freeze checks rely on.
class BlobWriter {
public:
    void add_text(const std::string& name, const std::string& text);
    void add_tensor(const std::string& name, const Tensor& t);
    void save(const std::string& path) const;

private:
    struct Entry {
        std::uint8_t kind;  // 0 text, 1 tensor
        std::string name;
        std::string text;
        Tensor tensor;
    };
    std::vector<Entry> entries_;
};

class BlobReader {
public:
    explicit BlobReader(const std::string& path);
    bool has(const std::string& name) const;
    const std::string& text(const std::string& name) const;
    const Tensor& tensor(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, std::string> texts_;
    std::map<std::string, Tensor> tensors_;
    std::vector<std::string> order_;
};

struct Checkpoint {
    std::string kind;  // model variant tag, free-form
    ModelConfig config;
    ParamMap params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string encode_model_config(const ModelConfig& config);
ModelConfig decode_model_config(const std::string& text);

// FNV-1a over the raw bytes of every tensor, in name order. Used by the
// freeze contracts to show parameter sets are bit-identical.
std::uint64_t params_hash(const ParamMap& params);

}  // namespace stylecompat
