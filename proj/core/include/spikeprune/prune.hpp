#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "spikeprune/masks.hpp"
#include "spikeprune/network.hpp"
#include "spikeprune/synops.hpp"

namespace spikeprune {

// L1 norm of each output channel's kernel slice. Lowest scores are pruned
// first; ties prune the lower channel index first.
std::vector<double> l1_scores(const SpikingNetwork& net, int layer_index);

// Keep-masks realizing a policy: per prunable layer, the top
// kept_channels(c_out, ratio) channels by L1 score survive. The classifier
// keeps everything.
ChannelMask policy_masks(const SpikingNetwork& net, const PruningPolicy& policy);

// Physically rebuild the network under a mask: surviving output channels are
// copied, and each following layer drops the matching input slices. Weights
// are copied, never retrained.
SpikingNetwork apply_mask(const SpikingNetwork& net, const ChannelMask& masks);

std::pair<SpikingNetwork, ChannelMask> apply_policy(const SpikingNetwork& net,
                                                    const PruningPolicy& policy);

// Average SynOps of the pruned (not finetuned) network on the fixed subset.
double pre_finetune_synops(const SpikingNetwork& net, const PruningPolicy& policy,
                           const Dataset& data, const SubsetSpec& subset);

// Policy file: CSV "layer_index,ratio".
void save_policy_csv(const std::filesystem::path& path, const PruningPolicy& policy);
PruningPolicy load_policy_csv(const std::filesystem::path& path);

}  // namespace spikeprune
