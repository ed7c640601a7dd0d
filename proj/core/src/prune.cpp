#include "spikeprune/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spikeprune/csv.hpp"

namespace spikeprune {

std::vector<double> l1_scores(const SpikingNetwork& net, int layer_index) {
    require(layer_index >= 0 && layer_index < net.n_layers(), "l1_scores: no such layer");
    const Layer& l = net.layers[layer_index];
    const std::int64_t per_channel = l.spec.param_count() / l.spec.c_out;
    std::vector<double> scores(l.spec.c_out, 0.0);
    for (int c = 0; c < l.spec.c_out; ++c) {
        const double* w = l.weight.ptr() + c * per_channel;
        double s = 0.0;
        for (std::int64_t i = 0; i < per_channel; ++i) s += std::abs(w[i]);
        scores[c] = s;
    }
    return scores;
}

ChannelMask policy_masks(const SpikingNetwork& net, const PruningPolicy& policy) {
    net.validate();
    policy.validate(net.n_prunable());
    ChannelMask masks = ChannelMask::all_true(net);
    for (int l = 0; l < net.n_prunable(); ++l) {
        const int c_out = net.layers[l].spec.c_out;
        const int kept = kept_channels(c_out, policy.ratios[l]);
        if (kept == c_out) continue;
        std::vector<double> scores = l1_scores(net, l);
        std::vector<int> order(c_out);
        std::iota(order.begin(), order.end(), 0);
        // Strongest first; equal scores favor the higher index, so the lower
        // index is pruned first.
        std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a > b;
        });
        std::fill(masks.keep[l].begin(), masks.keep[l].end(), std::uint8_t{0});
        for (int i = 0; i < kept; ++i) masks.keep[l][order[i]] = 1;
    }
    return masks;
}

SpikingNetwork apply_mask(const SpikingNetwork& net, const ChannelMask& masks) {
    net.validate();
    masks.validate(net);
    const auto out_shapes = net.output_shapes();

    SpikingNetwork pruned;
    pruned.timesteps = net.timesteps;
    pruned.input_shape = net.input_shape;

    std::vector<int> prev_kept;  // surviving channel indices of the previous layer
    for (int l = 0; l < net.n_layers(); ++l) {
        const Layer& src = net.layers[l];
        std::vector<int> kept;
        for (int c = 0; c < src.spec.c_out; ++c)
            if (masks.keep[l][c]) kept.push_back(c);

        // Surviving flat input indices of this layer.
        std::vector<int> in_idx;
        if (l == 0) {
            in_idx.resize(src.spec.c_in);
            std::iota(in_idx.begin(), in_idx.end(), 0);
        } else if (src.spec.kind == LayerKind::Conv2D) {
            in_idx = prev_kept;
        } else {
            const Shape3& prev = out_shapes[l - 1];
            const int hw = prev.h * prev.w;
            for (int c : prev_kept)
                for (int i = 0; i < hw; ++i) in_idx.push_back(c * hw + i);
        }

        Layer dst;
        dst.spec = src.spec;
        dst.spec.c_out = static_cast<int>(kept.size());
        dst.spec.c_in = static_cast<int>(in_idx.size());
        dst.lif = src.lif;
        const int k2 = src.spec.kernel * src.spec.kernel;
        if (src.spec.kind == LayerKind::Conv2D)
            dst.weight = TensorND::zeros(
                {dst.spec.c_out, dst.spec.c_in, src.spec.kernel, src.spec.kernel});
        else
            dst.weight = TensorND::zeros({dst.spec.c_out, dst.spec.c_in});
        for (std::size_t oc = 0; oc < kept.size(); ++oc) {
            const double* src_row =
                src.weight.ptr() + static_cast<std::int64_t>(kept[oc]) * src.spec.c_in * k2;
            double* dst_row =
                dst.weight.ptr() + static_cast<std::int64_t>(oc) * dst.spec.c_in * k2;
            for (std::size_t ic = 0; ic < in_idx.size(); ++ic)
                for (int t = 0; t < k2; ++t)
                    dst_row[ic * k2 + t] = src_row[static_cast<std::int64_t>(in_idx[ic]) * k2 + t];
        }
        pruned.layers.push_back(std::move(dst));
        prev_kept = std::move(kept);
    }
    pruned.validate();
    return pruned;
}

std::pair<SpikingNetwork, ChannelMask> apply_policy(const SpikingNetwork& net,
                                                    const PruningPolicy& policy) {
    ChannelMask masks = policy_masks(net, policy);
    return {apply_mask(net, masks), std::move(masks)};
}

double pre_finetune_synops(const SpikingNetwork& net, const PruningPolicy& policy,
                           const Dataset& data, const SubsetSpec& subset) {
    auto [pruned, masks] = apply_policy(net, policy);
    return synops_average(pruned, data, subset).total;
}

void save_policy_csv(const std::filesystem::path& path, const PruningPolicy& policy) {
    CsvTable table;
    table.header = {"layer_index", "ratio"};
    for (std::size_t i = 0; i < policy.ratios.size(); ++i)
        table.rows.push_back({std::to_string(i), format_double(policy.ratios[i])});
    write_csv(path, table);
}

PruningPolicy load_policy_csv(const std::filesystem::path& path) {
    CsvTable table = read_csv(path);
    if (table.header != std::vector<std::string>{"layer_index", "ratio"})
        throw IoError("unexpected policy CSV header in " + path.string());
    PruningPolicy policy;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != 2 || std::stoul(row[0]) != i)
            throw IoError("malformed policy CSV row in " + path.string());
        policy.ratios.push_back(std::stod(row[1]));
    }
    return policy;
}

}  // namespace spikeprune
