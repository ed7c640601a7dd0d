#include "spikeprune/layers.hpp"

#include <algorithm>

namespace spikeprune {

void LayerSpec::validate() const {
    require(c_in >= 1 && c_out >= 1, "layer needs c_in >= 1 and c_out >= 1");
    require(kernel >= 1 && stride >= 1 && padding >= 0, "bad kernel/stride/padding");
    if (kind == LayerKind::Dense)
        require(kernel == 1 && stride == 1 && padding == 0, "Dense layer must have k=s=1, pad=0");
}

Shape3 LayerSpec::out_shape(const Shape3& in) const {
    validate();
    if (kind == LayerKind::Dense) {
        require(in.numel() == c_in, "Dense input length mismatch");
        return {c_out, 1, 1};
    }
    require(in.c == c_in, "Conv2D input channel mismatch");
    int oh = (in.h + 2 * padding - kernel) / stride + 1;
    int ow = (in.w + 2 * padding - kernel) / stride + 1;
    require(in.h + 2 * padding >= kernel && in.w + 2 * padding >= kernel,
            "kernel larger than padded input");
    return {c_out, oh, ow};
}

void LifParams::validate() const {
    require(v_threshold > 0.0, "v_threshold must be positive");
    require(tau > 1.0, "tau must be > 1");
    require(v_reset < v_threshold, "v_reset must be below v_threshold");
}

void lif_step_inplace(double* v, const double* input, std::int64_t n, const LifParams& p,
                      double* spikes) {
    const double keep = 1.0 - 1.0 / p.tau;
    const double leak = p.v_reset / p.tau;
    for (std::int64_t i = 0; i < n; ++i) {
        double h = v[i] * keep + leak + input[i];
        if (h >= p.v_threshold) {
            spikes[i] = 1.0;
            v[i] = p.v_reset;
        } else {
            spikes[i] = 0.0;
            v[i] = h;
        }
    }
}

std::pair<TensorND, TensorND> lif_step(const TensorND& state, const TensorND& input,
                                       const LifParams& p) {
    p.validate();
    require(state.shape == input.shape, "lif_step: state/input shape mismatch");
    require(state.all_finite(), "lif_step: non-finite state");
    TensorND new_state = state;
    TensorND spikes = TensorND::zeros(state.shape);
    lif_step_inplace(new_state.ptr(), input.ptr(), state.numel(), p, spikes.ptr());
    return {std::move(spikes), std::move(new_state)};
}

TensorND surrogate_grad(const TensorND& h_minus_vth, double alpha) {
    require(alpha > 0.0, "surrogate alpha must be positive");
    TensorND g = TensorND::zeros(h_minus_vth.shape);
    for (std::size_t i = 0; i < g.data.size(); ++i)
        g.data[i] = surrogate_grad(h_minus_vth.data[i], alpha);
    return g;
}

namespace {

// Output index range [lo, hi) whose tap `kq` lands inside the input, i.e.
// 0 <= o*s - pad + kq < len.
inline std::pair<int, int> tap_range(int kq, int out_len, int in_len, int s, int pad) {
    int num = pad - kq;
    int lo = num <= 0 ? 0 : (num + s - 1) / s;
    int hi = (in_len - 1 - kq + pad) / s + 1;
    return {lo, std::min(hi, out_len)};
}

}  // namespace

namespace {

// Output positions receiving input coordinate q: oh in [lo, hi), with the
// kernel tap recovered as kq = q + pad - oh*s.
inline std::pair<int, int> cover_range(int q, int out_len, int kernel, int s, int pad) {
    int hi = (q + pad) / s + 1;
    int num = q + pad - kernel + 1;
    int lo = num <= 0 ? 0 : (num + s - 1) / s;
    return {std::max(lo, 0), std::min(hi, out_len)};
}

}  // namespace

void conv2d_forward(const LayerSpec& spec, const Shape3& in, const double* w, const double* x,
                    double* z) {
    const Shape3 out = spec.out_shape(in);
    const int k = spec.kernel, s = spec.stride, pad = spec.padding;
    const std::int64_t in_hw = static_cast<std::int64_t>(in.h) * in.w;
    const std::int64_t out_hw = static_cast<std::int64_t>(out.h) * out.w;
    const std::int64_t w_ic_stride = static_cast<std::int64_t>(in.c) * k * k;
    std::fill(z, z + out.numel(), 0.0);
    // Scatter from nonzero inputs; spike maps upstream are mostly zeros.
    for (int ic = 0; ic < in.c; ++ic) {
        const double* xc = x + ic * in_hw;
        const double* wic = w + static_cast<std::int64_t>(ic) * k * k;
        for (int ih = 0; ih < in.h; ++ih) {
            const auto [oh_lo, oh_hi] = cover_range(ih, out.h, k, s, pad);
            const double* xrow = xc + static_cast<std::int64_t>(ih) * in.w;
            for (int iw = 0; iw < in.w; ++iw) {
                const double xv = xrow[iw];
                if (xv == 0.0) continue;
                const auto [ow_lo, ow_hi] = cover_range(iw, out.w, k, s, pad);
                for (int oc = 0; oc < out.c; ++oc) {
                    const double* wk = wic + oc * w_ic_stride;
                    double* zc = z + oc * out_hw;
                    for (int oh = oh_lo; oh < oh_hi; ++oh) {
                        const int kh = ih + pad - oh * s;
                        const double* wrow = wk + kh * k;
                        double* zrow = zc + static_cast<std::int64_t>(oh) * out.w;
                        for (int ow = ow_lo; ow < ow_hi; ++ow)
                            zrow[ow] += xv * wrow[iw + pad - ow * s];
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const LayerSpec& spec, const Shape3& in, const double* w,
                           const double* dz, double* dx) {
    const Shape3 out = spec.out_shape(in);
    const int k = spec.kernel, s = spec.stride, pad = spec.padding;
    const std::int64_t in_hw = static_cast<std::int64_t>(in.h) * in.w;
    const std::int64_t out_hw = static_cast<std::int64_t>(out.h) * out.w;
    std::fill(dx, dx + in.numel(), 0.0);
    for (int oc = 0; oc < out.c; ++oc) {
        const double* dzc = dz + oc * out_hw;
        const double* wc = w + static_cast<std::int64_t>(oc) * in.c * k * k;
        for (int ic = 0; ic < in.c; ++ic) {
            double* dxc = dx + ic * in_hw;
            const double* wk = wc + static_cast<std::int64_t>(ic) * k * k;
            for (int kh = 0; kh < k; ++kh) {
                const auto [oh_lo, oh_hi] = tap_range(kh, out.h, in.h, s, pad);
                for (int kw = 0; kw < k; ++kw) {
                    const double wv = wk[kh * k + kw];
                    if (wv == 0.0) continue;
                    const auto [ow_lo, ow_hi] = tap_range(kw, out.w, in.w, s, pad);
                    for (int oh = oh_lo; oh < oh_hi; ++oh) {
                        double* dxrow = dxc + static_cast<std::int64_t>(oh * s - pad + kh) * in.w;
                        const double* dzrow = dzc + static_cast<std::int64_t>(oh) * out.w;
                        double* dxp = dxrow + (ow_lo * s - pad + kw);
                        for (int ow = ow_lo; ow < ow_hi; ++ow, dxp += s) *dxp += wv * dzrow[ow];
                    }
                }
            }
        }
    }
}

void conv2d_backward_weight(const LayerSpec& spec, const Shape3& in, const double* x,
                            const double* dz, double* dw) {
    const Shape3 out = spec.out_shape(in);
    const int k = spec.kernel, s = spec.stride, pad = spec.padding;
    const std::int64_t in_hw = static_cast<std::int64_t>(in.h) * in.w;
    const std::int64_t out_hw = static_cast<std::int64_t>(out.h) * out.w;
    const std::int64_t w_ic_stride = static_cast<std::int64_t>(in.c) * k * k;
    // Same nonzero-input scatter as the forward pass.
    for (int ic = 0; ic < in.c; ++ic) {
        const double* xc = x + ic * in_hw;
        double* wic = dw + static_cast<std::int64_t>(ic) * k * k;
        for (int ih = 0; ih < in.h; ++ih) {
            const auto [oh_lo, oh_hi] = cover_range(ih, out.h, k, s, pad);
            const double* xrow = xc + static_cast<std::int64_t>(ih) * in.w;
            for (int iw = 0; iw < in.w; ++iw) {
                const double xv = xrow[iw];
                if (xv == 0.0) continue;
                const auto [ow_lo, ow_hi] = cover_range(iw, out.w, k, s, pad);
                for (int oc = 0; oc < out.c; ++oc) {
                    double* wk = wic + oc * w_ic_stride;
                    const double* dzc = dz + oc * out_hw;
                    for (int oh = oh_lo; oh < oh_hi; ++oh) {
                        const int kh = ih + pad - oh * s;
                        double* wrow = wk + kh * k;
                        const double* dzrow = dzc + static_cast<std::int64_t>(oh) * out.w;
                        for (int ow = ow_lo; ow < ow_hi; ++ow)
                            wrow[iw + pad - ow * s] += xv * dzrow[ow];
                    }
                }
            }
        }
    }
}

void dense_forward(const LayerSpec& spec, const double* w, const double* x, double* z) {
    for (int o = 0; o < spec.c_out; ++o) {
        const double* wrow = w + static_cast<std::int64_t>(o) * spec.c_in;
        double acc = 0.0;
        for (int i = 0; i < spec.c_in; ++i) acc += wrow[i] * x[i];
        z[o] = acc;
    }
}

void dense_backward_input(const LayerSpec& spec, const double* w, const double* dz, double* dx) {
    std::fill(dx, dx + spec.c_in, 0.0);
    for (int o = 0; o < spec.c_out; ++o) {
        const double g = dz[o];
        if (g == 0.0) continue;
        const double* wrow = w + static_cast<std::int64_t>(o) * spec.c_in;
        for (int i = 0; i < spec.c_in; ++i) dx[i] += wrow[i] * g;
    }
}

void dense_backward_weight(const LayerSpec& spec, const double* x, const double* dz, double* dw) {
    for (int o = 0; o < spec.c_out; ++o) {
        const double g = dz[o];
        if (g == 0.0) continue;
        double* wrow = dw + static_cast<std::int64_t>(o) * spec.c_in;
        for (int i = 0; i < spec.c_in; ++i) wrow[i] += x[i] * g;
    }
}

void layer_forward(const LayerSpec& spec, const Shape3& in, const double* w, const double* x,
                   double* z) {
    if (spec.kind == LayerKind::Conv2D)
        conv2d_forward(spec, in, w, x, z);
    else
        dense_forward(spec, w, x, z);
}

void layer_backward_input(const LayerSpec& spec, const Shape3& in, const double* w,
                          const double* dz, double* dx) {
    if (spec.kind == LayerKind::Conv2D)
        conv2d_backward_input(spec, in, w, dz, dx);
    else
        dense_backward_input(spec, w, dz, dx);
}

void layer_backward_weight(const LayerSpec& spec, const Shape3& in, const double* x,
                           const double* dz, double* dw) {
    if (spec.kind == LayerKind::Conv2D)
        conv2d_backward_weight(spec, in, x, dz, dw);
    else
        dense_backward_weight(spec, x, dz, dw);
}

std::string layer_kind_name(LayerKind kind) {
    return kind == LayerKind::Conv2D ? "conv" : "dense";
}

}  // namespace spikeprune
