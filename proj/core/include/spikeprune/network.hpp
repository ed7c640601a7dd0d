#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "spikeprune/dataset.hpp"
#include "spikeprune/layers.hpp"
#include "spikeprune/rng.hpp"
#include "spikeprune/tensor.hpp"

namespace spikeprune {

struct Layer {
    LayerSpec spec;
    TensorND weight;  // (c_out, c_in, k, k) conv / (c_out, c_in) dense
    std::optional<LifParams> lif;
};

// Ordered feed-forward stack of spiking layers. Hidden layers carry LIF
// dynamics, the final classifier reads out real-valued currents. The analog
// input is replicated for `timesteps` steps.
struct SpikingNetwork {
    std::vector<Layer> layers;
    int timesteps = 4;
    Shape3 input_shape;

    void validate() const;
    std::vector<Shape3> output_shapes() const;  // per layer, propagated
    int n_layers() const { return static_cast<int>(layers.size()); }
    int n_classes() const { return layers.back().spec.c_out; }
    // All layers except the final classifier accept a pruning action.
    int n_prunable() const { return n_layers() - 1; }
    std::int64_t param_count() const;
};

// Per-neuron spike counts accumulated over the T timesteps of one forward
// pass, for every hidden (LIF) layer.
struct SpikeRecord {
    std::vector<std::vector<std::uint32_t>> per_neuron;  // [hidden layer][flat neuron]
    std::vector<std::uint64_t> per_layer_totals;
};

struct ForwardResult {
    std::vector<std::vector<double>> logits;  // [t][class]
    SpikeRecord record;
};

// T-step simulation of one sample with zero-initialized membranes.
// Throws NumericsError naming the layer if activations go non-finite.
ForwardResult forward_t(const SpikingNetwork& net, std::span<const double> sample);

// Mean accuracy of argmax over time-averaged logits.
double evaluate(const SpikingNetwork& net, const DatasetView& view);

// Builder for the sequential conv stack + dense classifier used throughout.
struct NetworkArch {
    std::vector<int> conv_channels = {12, 24, 24};
    int kernel = 3;
    int stride = 2;
    int padding = 1;
    int timesteps = 4;
    LifParams lif;
};

SpikingNetwork make_network(const NetworkArch& arch, const Shape3& input_shape, int n_classes,
                            Rng& rng);

// SPNN checkpoint: magic "SPNN", version u32, T u32, input shape u32x3,
// layer table, then per-layer f32 LE weights. Loading returns exactly what
// a subsequent save would produce (weights are stored at f32 precision).
void save_network(const std::filesystem::path& path, const SpikingNetwork& net);
SpikingNetwork load_network(const std::filesystem::path& path);

// Round weights to f32 precision in place, so an in-memory network matches
// its own checkpoint bit for bit.
void quantize_to_f32(SpikingNetwork& net);

}  // namespace spikeprune
