#include "spikeprune/masks.hpp"

#include <algorithm>
#include <cmath>

namespace spikeprune {

ChannelMask ChannelMask::all_true(const SpikingNetwork& net) {
    ChannelMask m;
    for (const Layer& l : net.layers)
        m.keep.emplace_back(static_cast<std::size_t>(l.spec.c_out), std::uint8_t{1});
    return m;
}

int ChannelMask::kept(int layer) const {
    int n = 0;
    for (std::uint8_t k : keep[layer]) n += k != 0;
    return n;
}

void ChannelMask::validate(const SpikingNetwork& net) const {
    require(keep.size() == net.layers.size(), "mask layer count mismatch");
    for (std::size_t l = 0; l < keep.size(); ++l) {
        require(static_cast<int>(keep[l].size()) == net.layers[l].spec.c_out,
                "mask channel count mismatch at layer " + std::to_string(l));
        require(kept(static_cast<int>(l)) >= 1,
                "mask keeps no channels at layer " + std::to_string(l));
    }
    int last = static_cast<int>(keep.size()) - 1;
    require(kept(last) == net.layers[last].spec.c_out,
            "final classifier layer must keep all channels");
}

void PruningPolicy::validate(int n_prunable) const {
    require(static_cast<int>(ratios.size()) == n_prunable,
            "policy length must equal the number of prunable layers");
    for (double r : ratios)
        require(r >= 0.0 && r < 1.0, "pruning ratios must lie in [0,1)");
}

int kept_channels(int c_out, double ratio) {
    require(c_out >= 1, "kept_channels: c_out must be >= 1");
    require(ratio >= 0.0 && ratio < 1.0, "kept_channels: ratio must be in [0,1)");
    int kept = static_cast<int>(std::ceil(c_out * (1.0 - ratio)));
    return std::max(1, std::min(kept, c_out));
}

}  // namespace spikeprune
