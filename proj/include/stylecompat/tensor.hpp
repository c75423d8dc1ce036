#pragma once

#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "stylecompat/errors.hpp"

namespace stylecompat {

// Dense row-major tensor of doubles. Rank is 1 or 2 in practice; scalars are
// shape {1}. The grad buffer stays empty until backward fills it.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> v, bool rg = false)
        : shape(std::move(s)), values(std::move(v)), requires_grad(rg) {
        if (numel() != values.size())
            throw ShapeError("tensor shape does not match value count");
    }

    static Tensor scalar(double v, bool rg = false) { return Tensor({1}, {v}, rg); }

    static Tensor zeros(std::vector<std::size_t> s, bool rg = false) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return Tensor(std::move(s), std::vector<double>(n, 0.0), rg);
    }

    std::size_t numel() const {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }

    bool is_scalar() const { return numel() == 1; }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// Named parameter store. std::map keeps iteration order deterministic, which
// the checkpoint format and optimizer updates rely on.
using ParamMap = std::map<std::string, Tensor>;
using GradMap = std::map<std::string, std::vector<double>>;

inline std::size_t param_count(const ParamMap& params) {
    std::size_t n = 0;
    for (const auto& [name, t] : params) n += t.numel();
    return n;
}

}  // namespace stylecompat
