#pragma once

#include <cstdint>
#include <vector>

#include "spikeprune/network.hpp"

namespace spikeprune {

// Per-layer keep-vector over output channels. The final classifier layer is
// never masked. Every layer must keep at least one channel.
struct ChannelMask {
    std::vector<std::vector<std::uint8_t>> keep;  // [layer][out channel]

    static ChannelMask all_true(const SpikingNetwork& net);
    int kept(int layer) const;
    void validate(const SpikingNetwork& net) const;
};

// One episode's action trajectory: a pruning ratio in [0,1) per prunable
// layer (all layers except the final classifier).
struct PruningPolicy {
    std::vector<double> ratios;

    static PruningPolicy zeros(int n_prunable) { return {std::vector<double>(n_prunable, 0.0)}; }
    void validate(int n_prunable) const;
};

// Channels kept when pruning at `ratio`: ceil(c_out * (1 - ratio)), floor 1.
int kept_channels(int c_out, double ratio);

}  // namespace spikeprune
