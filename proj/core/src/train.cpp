#include "spikeprune/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spikeprune {

void TrainConfig::validate() const {
    require(epochs >= 0, "train.epochs must be >= 0");
    if (epochs > 0)
        require(warmup_epochs >= 0 && warmup_epochs < epochs,
                "train.warmup_epochs must be < train.epochs");
    require(max_lr > 0.0, "train.max_lr must be positive");
    require(momentum >= 0.0 && momentum < 1.0, "train.momentum must be in [0,1)");
    require(weight_decay >= 0.0, "train.weight_decay must be >= 0");
    require(batch_size >= 1, "train.batch_size must be >= 1");
    require(surrogate_alpha > 0.0, "train.surrogate_alpha must be positive");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    if (cfg.epochs == 0) return 0.0;
    if (epoch < cfg.warmup_epochs) return cfg.max_lr * (epoch + 1) / cfg.warmup_epochs;
    int span = cfg.epochs - cfg.warmup_epochs;
    if (span <= 0) return cfg.max_lr;
    double progress = static_cast<double>(epoch - cfg.warmup_epochs) / span;
    return cfg.max_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

// CE of one timestep with a stable log-sum-exp; optionally writes the
// softmax gradient scaled by `grad_scale` into dlogits.
double cross_entropy(const std::vector<double>& logits, int label, double grad_scale,
                     std::vector<double>* dlogits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    double lse = mx + std::log(sum);
    if (dlogits) {
        for (std::size_t c = 0; c < logits.size(); ++c) {
            double p = std::exp(logits[c] - lse);
            (*dlogits)[c] = grad_scale * (p - (static_cast<int>(c) == label ? 1.0 : 0.0));
        }
    }
    return lse - logits[label];
}

}  // namespace

double tet_loss(const std::vector<std::vector<double>>& logits, int label) {
    require(!logits.empty(), "tet_loss: need at least one timestep");
    require(label >= 0 && label < static_cast<int>(logits[0].size()), "tet_loss: label out of range");
    double total = 0.0;
    for (const auto& lt : logits) total += cross_entropy(lt, label, 0.0, nullptr);
    return total / logits.size();
}

GradBuffers GradBuffers::like(const SpikingNetwork& net) {
    GradBuffers g;
    for (const Layer& l : net.layers) g.dw.push_back(TensorND::zeros(l.weight.shape));
    return g;
}

void GradBuffers::zero() {
    for (TensorND& t : dw) t.fill(0.0);
}

BpttContext::BpttContext(const SpikingNetwork& net, double surrogate_alpha, SpikeMode mode)
    : net_(&net), alpha_(surrogate_alpha), mode_(mode) {
    net.validate();
    require(surrogate_alpha > 0.0, "surrogate alpha must be positive");
    shapes_ = net.output_shapes();
    const int L = net.n_layers();
    const int T = net.timesteps;
    outs_.resize(L - 1);
    membrane_pre_.resize(L - 1);
    gates_.resize(L - 1);
    dv_.resize(L - 1);
    for (int l = 0; l + 1 < L; ++l) {
        std::size_t n = static_cast<std::size_t>(shapes_[l].numel());
        outs_[l].assign(T, std::vector<double>(n, 0.0));
        membrane_pre_[l].assign(T, std::vector<double>(n, 0.0));
        gates_[l].assign(T, std::vector<std::uint8_t>(n, 0));
        dv_[l].assign(n, 0.0);
    }
    logits_.assign(T, std::vector<double>(net.n_classes(), 0.0));
    dlogits_.assign(T, std::vector<double>(net.n_classes(), 0.0));
    scratch_.resize(L);
    dx_.resize(L);
    v_offset_.resize(L - 1);
    std::size_t total = 0;
    for (int l = 0; l < L; ++l) {
        scratch_[l].assign(shapes_[l].numel(), 0.0);
        std::size_t in_n = l == 0 ? net.input_shape.numel() : shapes_[l - 1].numel();
        dx_[l].assign(in_n, 0.0);
        if (l + 1 < L) {
            v_offset_[l] = total;
            total += static_cast<std::size_t>(shapes_[l].numel());
        }
    }
    v_.assign(total, 0.0);
}

double BpttContext::loss_and_grad(std::span<const double> sample, int label, GradBuffers& grads) {
    const SpikingNetwork& net = *net_;
    const int L = net.n_layers();
    const int T = net.timesteps;
    require(sample.size() == static_cast<std::size_t>(net.input_shape.numel()),
            "loss_and_grad: sample shape mismatch");
    require(label >= 0 && label < net.n_classes(), "loss_and_grad: label out of range");

    std::fill(v_.begin(), v_.end(), 0.0);

    // Forward with history.
    for (int t = 0; t < T; ++t) {
        const double* x = sample.data();
        Shape3 in = net.input_shape;
        for (int l = 0; l < L; ++l) {
            const Layer& layer = net.layers[l];
            double* z = scratch_[l].data();
            layer_forward(layer.spec, in, layer.weight.ptr(), x, z);
            const std::int64_t n = shapes_[l].numel();
            if (l + 1 < L) {
                const LifParams& p = *layer.lif;
                const double keep = 1.0 - 1.0 / p.tau;
                const double leak = p.v_reset / p.tau;
                double* v = v_.data() + v_offset_[l];
                double* h_t = membrane_pre_[l][t].data();
                std::uint8_t* g_t = gates_[l][t].data();
                double* o_t = outs_[l][t].data();
                for (std::int64_t i = 0; i < n; ++i) {
                    double h = v[i] * keep + leak + z[i];
                    h_t[i] = h;
                    bool fired = h >= p.v_threshold;
                    g_t[i] = fired ? 1 : 0;
                    o_t[i] = mode_ == SpikeMode::Hard
                                 ? (fired ? 1.0 : 0.0)
                                 : surrogate_spike(h - p.v_threshold, alpha_);
                    v[i] = fired ? p.v_reset : h;
                }
                x = o_t;
            } else {
                for (std::int64_t i = 0; i < n; ++i) logits_[t][i] = z[i];
            }
            in = shapes_[l];
        }
    }

    // TET loss and its logit gradients.
    double loss = 0.0;
    for (int t = 0; t < T; ++t)
        loss += cross_entropy(logits_[t], label, 1.0 / T, &dlogits_[t]);
    loss /= T;

    // Backward through time. dv_ carries dLoss/dV into earlier timesteps;
    // the hard gate blocks it where the neuron fired (detached reset).
    for (auto& d : dv_) std::fill(d.begin(), d.end(), 0.0);
    for (int t = T - 1; t >= 0; --t) {
        const double* dcur = dlogits_[t].data();
        for (int l = L - 1; l >= 0; --l) {
            const Layer& layer = net.layers[l];
            const Shape3 in_shape = l == 0 ? net.input_shape : shapes_[l - 1];
            const double* x_in = l == 0 ? sample.data() : outs_[l - 1][t].data();
            double* dz = scratch_[l].data();
            const std::int64_t n = shapes_[l].numel();
            if (l + 1 < L) {
                const LifParams& p = *layer.lif;
                const double keep = 1.0 - 1.0 / p.tau;
                const double* h_t = membrane_pre_[l][t].data();
                const std::uint8_t* g_t = gates_[l][t].data();
                double* dv = dv_[l].data();
                for (std::int64_t i = 0; i < n; ++i) {
                    double dh = dcur[i] * surrogate_grad(h_t[i] - p.v_threshold, alpha_);
                    if (!g_t[i]) dh += dv[i];
                    dv[i] = dh * keep;
                    dz[i] = dh;
                }
            } else {
                for (std::int64_t i = 0; i < n; ++i) dz[i] = dcur[i];
            }
            layer_backward_weight(layer.spec, in_shape, x_in, dz, grads.dw[l].ptr());
            if (l > 0) {
                layer_backward_input(layer.spec, in_shape, layer.weight.ptr(), dz, dx_[l].data());
                dcur = dx_[l].data();
            }
        }
    }
    return loss;
}

TrainResult train(const SpikingNetwork& start, const DatasetView& view, const TrainConfig& cfg) {
    cfg.validate();
    start.validate();
    require(view.size() > 0, "train: empty dataset view");

    TrainResult result;
    result.net = start;
    if (cfg.epochs == 0) return result;

    SpikingNetwork& net = result.net;
    Rng rng(cfg.seed);
    BpttContext ctx(net, cfg.surrogate_alpha, SpikeMode::Hard);
    GradBuffers grads = GradBuffers::like(net);
    std::vector<TensorND> velocity;
    for (const Layer& l : net.layers) velocity.push_back(TensorND::zeros(l.weight.shape));

    std::vector<int> order(view.indices.begin(), view.indices.end());
    const int n = static_cast<int>(order.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        shuffle_vector(rng, order);
        double epoch_loss = 0.0;
        int n_batches = 0;
        for (int b0 = 0; b0 < n; b0 += cfg.batch_size) {
            const int b1 = std::min(n, b0 + cfg.batch_size);
            const int bsz = b1 - b0;
            grads.zero();
            double batch_loss = 0.0;
            for (int i = b0; i < b1; ++i)
                batch_loss += ctx.loss_and_grad(view.data->sample(order[i]),
                                                view.data->labels[order[i]], grads);
            batch_loss /= bsz;
            if (!std::isfinite(batch_loss))
                throw NumericsError("training diverged: non-finite loss at epoch " +
                                    std::to_string(epoch) + ", batch " +
                                    std::to_string(n_batches));
            epoch_loss += batch_loss;
            ++n_batches;
            const double inv_b = 1.0 / bsz;
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                double* w = net.layers[l].weight.ptr();
                double* g = grads.dw[l].ptr();
                double* v = velocity[l].ptr();
                const std::int64_t m = net.layers[l].weight.numel();
                for (std::int64_t i = 0; i < m; ++i) {
                    double grad = g[i] * inv_b + cfg.weight_decay * w[i];
                    v[i] = cfg.momentum * v[i] + grad;
                    w[i] -= lr * v[i];
                }
            }
        }
        result.loss_history.push_back(epoch_loss / std::max(1, n_batches));
        if (cfg.track_accuracy) result.accuracy_history.push_back(evaluate(net, view));
    }
    return result;
}

}  // namespace spikeprune
