#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "spikeprune/errors.hpp"

namespace spikeprune {

// Dense row-major tensor of doubles. Shapes are small (4-D at most), so the
// representation stays a flat vector plus a dims list.
struct TensorND {
    std::vector<int> shape;
    std::vector<double> data;

    TensorND() = default;
    TensorND(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        require(numel() == static_cast<std::int64_t>(data.size()),
                "TensorND: shape/data size mismatch");
    }

    static TensorND zeros(std::vector<int> s) {
        std::int64_t n = 1;
        for (int d : s) {
            require(d >= 0, "TensorND: negative dimension");
            n *= d;
        }
        TensorND t;
        t.shape = std::move(s);
        t.data.assign(static_cast<std::size_t>(n), 0.0);
        return t;
    }

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }
    std::span<double> span() { return {data.data(), data.size()}; }
    std::span<const double> span() const { return {data.data(), data.size()}; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace spikeprune
