#include "spikeprune/synops.hpp"

#include <algorithm>
#include <mutex>
#include <string>
#include <unordered_map>

#include "spikeprune/csv.hpp"
#include "spikeprune/rng.hpp"

namespace spikeprune {

namespace {

// Number of output rows/cols of a conv whose receptive field covers input
// coordinate `pos` (0-based), for one axis.
std::int64_t placements_1d(int pos, int out_len, int kernel, int stride, int padding) {
    // valid oh satisfy: 0 <= pos - (oh*stride - padding) < kernel
    int hi = (pos + padding) / stride;                     // floor
    int num = pos + padding - kernel + 1;
    int lo = num <= 0 ? 0 : (num + stride - 1) / stride;   // ceil for positive numerator
    hi = std::min(hi, out_len - 1);
    lo = std::max(lo, 0);
    return hi >= lo ? hi - lo + 1 : 0;
}

std::string fanout_cache_key(const SpikingNetwork& net, const ChannelMask& masks) {
    std::string key;
    key.reserve(64 + net.layers.size() * 16);
    auto add = [&key](int v) {
        key += std::to_string(v);
        key += ';';
    };
    add(net.input_shape.c);
    add(net.input_shape.h);
    add(net.input_shape.w);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const LayerSpec& s = net.layers[l].spec;
        add(s.kind == LayerKind::Conv2D ? 0 : 1);
        add(s.c_in);
        add(s.c_out);
        add(s.kernel);
        add(s.stride);
        add(s.padding);
        for (std::uint8_t k : masks.keep[l]) key += k ? '1' : '0';
        key += '|';
    }
    return key;
}

const FanoutMap& fanout_cached(const SpikingNetwork& net, const ChannelMask& masks) {
    static std::mutex mu;
    static std::unordered_map<std::string, FanoutMap> cache;
    std::scoped_lock lock(mu);
    std::string key = fanout_cache_key(net, masks);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, fanout(net, masks)).first;
    return it->second;
}

std::vector<int> subset_indices(const Dataset& data, const SubsetSpec& subset) {
    const std::int64_t n = data.size();
    require(n > 0, "synops: empty dataset");
    if (!subset.size.has_value()) {
        std::vector<int> idx(n);
        for (std::int64_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
        return idx;
    }
    require(*subset.size > 0, "synops: empty subset");
    require(*subset.size <= n, "synops: subset larger than dataset");
    Rng rng(subset.seed);
    auto perm = random_permutation(rng, static_cast<std::size_t>(n));
    std::vector<int> idx(perm.begin(), perm.begin() + *subset.size);
    return idx;
}

}  // namespace

FanoutMap fanout(const SpikingNetwork& net, const ChannelMask& masks) {
    net.validate();
    masks.validate(net);
    const auto out_shapes = net.output_shapes();
    FanoutMap fan;
    fan.per_input.resize(net.layers.size());
    for (int l = 0; l < net.n_layers(); ++l) {
        const LayerSpec& spec = net.layers[l].spec;
        const Shape3 in = l == 0 ? net.input_shape : out_shapes[l - 1];
        const Shape3 out = out_shapes[l];
        const std::int64_t m_out = masks.kept(l);
        auto& f = fan.per_input[l];
        f.assign(static_cast<std::size_t>(in.numel()), 0);
        const std::vector<std::uint8_t>* src_mask = l > 0 ? &masks.keep[l - 1] : nullptr;
        if (spec.kind == LayerKind::Dense) {
            const std::int64_t per_channel = static_cast<std::int64_t>(in.h) * in.w;
            for (std::int64_t i = 0; i < in.numel(); ++i) {
                int channel = static_cast<int>(i / per_channel);
                if (src_mask && !(*src_mask)[channel]) continue;
                f[i] = m_out;
            }
        } else {
            std::vector<std::int64_t> rows(in.h), cols(in.w);
            for (int h = 0; h < in.h; ++h)
                rows[h] = placements_1d(h, out.h, spec.kernel, spec.stride, spec.padding);
            for (int w = 0; w < in.w; ++w)
                cols[w] = placements_1d(w, out.w, spec.kernel, spec.stride, spec.padding);
            for (int c = 0; c < in.c; ++c) {
                if (src_mask && !(*src_mask)[c]) continue;
                std::int64_t* fc = f.data() + static_cast<std::int64_t>(c) * in.h * in.w;
                for (int h = 0; h < in.h; ++h)
                    for (int w = 0; w < in.w; ++w) fc[h * in.w + w] = rows[h] * cols[w] * m_out;
            }
        }
    }
    return fan;
}

double synops_per_sample(const SpikeRecord& record, const FanoutMap& fan) {
    require(record.per_neuron.size() + 1 == fan.per_input.size(),
            "synops_per_sample: record/fanout layer count mismatch");
    std::int64_t total = 0;
    for (std::size_t l = 0; l < record.per_neuron.size(); ++l) {
        const auto& spikes = record.per_neuron[l];
        const auto& counts = fan.per_input[l + 1];
        require(spikes.size() == counts.size(),
                "synops_per_sample: neuron coverage mismatch at layer " + std::to_string(l + 1));
        for (std::size_t i = 0; i < spikes.size(); ++i)
            total += static_cast<std::int64_t>(spikes[i]) * counts[i];
    }
    return static_cast<double>(total);
}

SynOpsReport synops_average(const SpikingNetwork& net, const Dataset& data,
                            const SubsetSpec& subset) {
    const auto idx = subset_indices(data, subset);
    const ChannelMask all = ChannelMask::all_true(net);
    const FanoutMap& fan = fanout_cached(net, all);
    const int L = net.n_layers();

    std::vector<std::int64_t> layer_totals(L, 0);
    double encoder_total = 0.0;
    for (int i : idx) {
        ForwardResult fr = forward_t(net, data.sample(i));
        for (int l = 0; l + 1 < L; ++l) {
            const auto& spikes = fr.record.per_neuron[l];
            const auto& counts = fan.per_input[l + 1];
            std::int64_t dot = 0;
            for (std::size_t k = 0; k < spikes.size(); ++k)
                dot += static_cast<std::int64_t>(spikes[k]) * counts[k];
            layer_totals[l + 1] += dot;
        }
        if (subset.include_encoder) {
            auto s = data.sample(i);
            const auto& counts = fan.per_input[0];
            double dot = 0.0;
            for (std::size_t k = 0; k < s.size(); ++k) dot += s[k] * counts[k];
            encoder_total += dot * net.timesteps;
        }
    }

    SynOpsReport report;
    report.n_samples_used = static_cast<std::int64_t>(idx.size());
    report.exact = !subset.size.has_value();
    report.per_layer.resize(L);
    report.per_layer[0] = encoder_total / report.n_samples_used;
    for (int l = 1; l < L; ++l)
        report.per_layer[l] = static_cast<double>(layer_totals[l]) / report.n_samples_used;
    report.total = 0.0;
    for (double v : report.per_layer) report.total += v;
    return report;
}

CalibrationCurve calibrate_subset(const SpikingNetwork& net, const Dataset& data, double tolerance,
                                  std::int64_t step, std::uint64_t subset_seed,
                                  bool include_encoder) {
    require(tolerance >= 0.0, "calibration tolerance must be >= 0");
    require(step >= 1, "calibration step must be >= 1");
    const std::int64_t n = data.size();
    require(n > 0, "calibrate_subset: empty dataset");

    Rng rng(subset_seed);
    auto perm = random_permutation(rng, static_cast<std::size_t>(n));
    const ChannelMask all = ChannelMask::all_true(net);
    const FanoutMap& fan = fanout_cached(net, all);

    // Per-sample values in permutation order; prefix means then cost nothing.
    std::vector<double> prefix(n + 1, 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        int sample_idx = static_cast<int>(perm[i]);
        ForwardResult fr = forward_t(net, data.sample(sample_idx));
        double v = synops_per_sample(fr.record, fan);
        if (include_encoder) {
            auto s = data.sample(sample_idx);
            const auto& counts = fan.per_input[0];
            double dot = 0.0;
            for (std::size_t k = 0; k < s.size(); ++k) dot += s[k] * counts[k];
            v += dot * net.timesteps;
        }
        prefix[i + 1] = prefix[i] + v;
    }
    const double full_mean = prefix[n] / n;

    CalibrationCurve curve;
    curve.tolerance = tolerance;
    for (std::int64_t k = step; ; k += step) {
        const std::int64_t m = std::min(k, n);
        const double mean_m = prefix[m] / m;
        double err;
        if (full_mean == 0.0)
            err = mean_m == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        else
            err = std::abs((mean_m - full_mean) / full_mean);
        curve.points.emplace_back(m, err);
        if (err < tolerance) {
            curve.converged_at = m;
            break;
        }
        if (m == n) break;
    }
    return curve;
}

std::int64_t param_count(const SpikingNetwork& net, const ChannelMask& masks) {
    net.validate();
    masks.validate(net);
    const auto out_shapes = net.output_shapes();
    std::int64_t total = 0;
    for (int l = 0; l < net.n_layers(); ++l) {
        const LayerSpec& spec = net.layers[l].spec;
        std::int64_t kept_out = masks.kept(l);
        std::int64_t kept_in;
        if (l == 0) {
            kept_in = spec.c_in;
        } else if (spec.kind == LayerKind::Conv2D) {
            kept_in = masks.kept(l - 1);
        } else {
            // Dense input is the flattened previous output.
            const Shape3& prev = out_shapes[l - 1];
            kept_in = static_cast<std::int64_t>(masks.kept(l - 1)) * prev.h * prev.w;
        }
        total += kept_out * kept_in * spec.kernel * spec.kernel;
    }
    return total;
}

void write_synops_report_csv(const std::filesystem::path& path, const SpikingNetwork& net,
                             const SynOpsReport& report) {
    require(report.per_layer.size() == net.layers.size(), "report/net layer count mismatch");
    CsvTable table;
    table.header = {"layer_index", "layer_kind", "synops_avg", "param_count"};
    std::int64_t total_params = 0;
    for (int l = 0; l < net.n_layers(); ++l) {
        const auto& spec = net.layers[l].spec;
        total_params += spec.param_count();
        table.rows.push_back({std::to_string(l), layer_kind_name(spec.kind),
                              format_double(report.per_layer[l]),
                              std::to_string(spec.param_count())});
    }
    table.rows.push_back(
        {"TOTAL", "", format_double(report.total), std::to_string(total_params)});
    write_csv(path, table);
}

}  // namespace spikeprune
