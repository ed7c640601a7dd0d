#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spikeprune/dataset.hpp"
#include "spikeprune/masks.hpp"
#include "spikeprune/network.hpp"

namespace spikeprune {

// Synaptic operations of one sample: sum over presynaptic neurons of
// (spikes fired) x (outgoing synapse count). The synapse counts depend only
// on geometry and channel masks, so they are computed once per structure.

// Outgoing-connection counts, indexed by the consuming layer: fan.per_input[l]
// holds, for every input position of layer l, how many synapses that position
// feeds inside layer l (kernel placements x unmasked output channels).
// Positions whose source channel is masked out count zero.
struct FanoutMap {
    std::vector<std::vector<std::int64_t>> per_input;
};

struct SynOpsReport {
    double total = 0.0;               // average per sample; equals sum(per_layer)
    std::vector<double> per_layer;    // attributed to the consuming layer
    std::int64_t n_samples_used = 0;
    bool exact = false;
};

struct CalibrationCurve {
    std::vector<std::pair<std::int64_t, double>> points;  // (n_samples, |relative error|)
    double tolerance = 0.0;
    std::optional<std::int64_t> converged_at;
};

// Fixed evaluation subset: the first `size` entries of a seeded permutation
// of the dataset. Absent size means the whole dataset (exact).
struct SubsetSpec {
    std::optional<std::int64_t> size;
    std::uint64_t seed = 7;
    bool include_encoder = false;  // add an analog first-layer term

    static SubsetSpec all(std::uint64_t seed = 7, bool encoder = false) {
        return {std::nullopt, seed, encoder};
    }
};

FanoutMap fanout(const SpikingNetwork& net, const ChannelMask& masks);

// Eq./definition form: sum_k s_k * c_k over all spiking neurons that feed a
// synaptic layer. Exact integer arithmetic.
double synops_per_sample(const SpikeRecord& record, const FanoutMap& fan);

SynOpsReport synops_average(const SpikingNetwork& net, const Dataset& data,
                            const SubsetSpec& subset);

// Grows a seeded sample `step` at a time against the full-dataset ground
// truth, recording |sample avg - full avg| / full avg. Stops at the first
// size strictly below `tolerance` (or at the full dataset).
CalibrationCurve calibrate_subset(const SpikingNetwork& net, const Dataset& data, double tolerance,
                                  std::int64_t step, std::uint64_t subset_seed,
                                  bool include_encoder = false);

// Parameters remaining under a mask: sum over layers of
// kept_out * kept_in * k^2 (kept_in follows the previous layer's mask).
std::int64_t param_count(const SpikingNetwork& net, const ChannelMask& masks);

// Per-layer report CSV: layer_index,layer_kind,synops_avg,param_count with a
// trailing TOTAL row.
void write_synops_report_csv(const std::filesystem::path& path, const SpikingNetwork& net,
                             const SynOpsReport& report);

}  // namespace spikeprune
