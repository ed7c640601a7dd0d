#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spikeprune/dataset.hpp"
#include "spikeprune/network.hpp"

namespace spikeprune {

struct TrainConfig {
    int epochs = 24;
    int warmup_epochs = 3;
    double max_lr = 0.08;
    double momentum = 0.9;
    double weight_decay = 5e-5;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double surrogate_alpha = 2.0;
    bool track_accuracy = false;  // per-epoch accuracy on the training view

    void validate() const;
};

// Linear warmup to max_lr, then cosine annealing toward 0.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

// Per-timestep mean cross-entropy: (1/T) * sum_t CE(logits[t], label).
double tet_loss(const std::vector<std::vector<double>>& logits, int label);

// How spikes are emitted during a stored forward pass:
//  Hard    - binary threshold (training and inference semantics),
//  Relaxed - smoothed spike g(H - v_th) flows downstream while the membrane
//            reset keeps the hard gate; used by gradient checks, since the
//            backward pass computes exactly the gradient of this function
//            with the gates held fixed.
enum class SpikeMode { Hard, Relaxed };

struct GradBuffers {
    std::vector<TensorND> dw;  // one per layer, same shape as weights

    static GradBuffers like(const SpikingNetwork& net);
    void zero();
};

// Backprop-through-time engine for one network. Holds all per-sample
// scratch buffers; reuse one instance across samples.
class BpttContext {
  public:
    BpttContext(const SpikingNetwork& net, double surrogate_alpha, SpikeMode mode);

    // Runs forward for one sample, accumulates dLoss/dW into `grads`,
    // returns the sample's TET loss. The reset path carries no gradient.
    double loss_and_grad(std::span<const double> sample, int label, GradBuffers& grads);

    // Logits of the most recent loss_and_grad call (per timestep).
    const std::vector<std::vector<double>>& last_logits() const { return logits_; }

  private:
    const SpikingNetwork* net_;
    double alpha_;
    SpikeMode mode_;
    std::vector<Shape3> shapes_;
    // [layer][t][neuron] histories for the stored forward pass
    std::vector<std::vector<std::vector<double>>> outs_;
    std::vector<std::vector<std::vector<double>>> membrane_pre_;
    std::vector<std::vector<std::vector<std::uint8_t>>> gates_;
    std::vector<std::vector<double>> logits_;
    std::vector<std::vector<double>> dlogits_;
    std::vector<std::vector<double>> dv_;      // per hidden layer, carried across time
    std::vector<std::vector<double>> scratch_;  // per layer: z / dz buffers
    std::vector<std::vector<double>> dx_;       // per layer: input gradients
    std::vector<double> v_;                     // flattened membrane state, per hidden layer
    std::vector<std::size_t> v_offset_;
};

struct TrainResult {
    SpikingNetwork net;
    std::vector<double> accuracy_history;  // per epoch, when tracked
    std::vector<double> loss_history;      // mean batch loss per epoch
};

// SGD with momentum and weight decay over the given view; deterministic for
// a fixed cfg.seed. Throws NumericsError if the loss stops being finite.
TrainResult train(const SpikingNetwork& start, const DatasetView& view, const TrainConfig& cfg);

}  // namespace spikeprune
