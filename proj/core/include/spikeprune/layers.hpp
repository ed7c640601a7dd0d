#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "spikeprune/tensor.hpp"

namespace spikeprune {

struct Shape3 {
    int c = 0, h = 0, w = 0;
    std::int64_t numel() const { return static_cast<std::int64_t>(c) * h * w; }
    bool operator==(const Shape3&) const = default;
};

enum class LayerKind { Conv2D, Dense };

// Static description of one synaptic layer. For Dense layers c_in is the
// flattened input length and kernel == stride == 1, padding == 0.
struct LayerSpec {
    LayerKind kind = LayerKind::Conv2D;
    int c_in = 0;
    int c_out = 0;
    int kernel = 1;
    int stride = 1;
    int padding = 0;
    bool has_lif = true;

    std::int64_t param_count() const {
        return static_cast<std::int64_t>(c_out) * c_in * kernel * kernel;
    }
    void validate() const;
    // Output geometry for a given input; throws on mismatch.
    Shape3 out_shape(const Shape3& in) const;
};

struct LifParams {
    double v_threshold = 1.0;
    double tau = 2.0;
    double v_reset = 0.0;
    bool decay_input = false;  // fixed: input currents are not decayed

    void validate() const;
};

// Hard-reset LIF membrane update for one timestep:
//   H = V - (V - v_reset)/tau + X ; spike = H >= v_threshold ;
//   V' = v_reset where spiked, H elsewhere.
// Raw span form used by the inner loops.
void lif_step_inplace(double* v, const double* input, std::int64_t n, const LifParams& p,
                      double* spikes);

// Tensor form with shape checking.
std::pair<TensorND, TensorND> lif_step(const TensorND& state, const TensorND& input,
                                       const LifParams& p);

// Smoothed spike g(x) = (1/pi) * atan((pi/2) * alpha * x) + 1/2 and its
// derivative; x is the margin H - v_threshold.
inline double surrogate_spike(double x, double alpha) {
    return std::atan(0.5 * std::numbers::pi * alpha * x) / std::numbers::pi + 0.5;
}

inline double surrogate_grad(double x, double alpha) {
    double t = 0.5 * std::numbers::pi * alpha * x;
    return (alpha / 2.0) / (1.0 + t * t);
}

TensorND surrogate_grad(const TensorND& h_minus_vth, double alpha);

// Direct convolution / dense kernels. Weights are row-major
// (c_out, c_in, k, k) and (c_out, c_in).
void conv2d_forward(const LayerSpec& spec, const Shape3& in, const double* w, const double* x,
                    double* z);
void conv2d_backward_input(const LayerSpec& spec, const Shape3& in, const double* w,
                           const double* dz, double* dx);
void conv2d_backward_weight(const LayerSpec& spec, const Shape3& in, const double* x,
                            const double* dz, double* dw);

void dense_forward(const LayerSpec& spec, const double* w, const double* x, double* z);
void dense_backward_input(const LayerSpec& spec, const double* w, const double* dz, double* dx);
void dense_backward_weight(const LayerSpec& spec, const double* x, const double* dz, double* dw);

// Dispatch on spec.kind; `in` is ignored for Dense.
void layer_forward(const LayerSpec& spec, const Shape3& in, const double* w, const double* x,
                   double* z);
void layer_backward_input(const LayerSpec& spec, const Shape3& in, const double* w,
                          const double* dz, double* dx);
void layer_backward_weight(const LayerSpec& spec, const Shape3& in, const double* x,
                           const double* dz, double* dw);

std::string layer_kind_name(LayerKind kind);

}  // namespace spikeprune
