#include <doctest.h>

#include <cmath>

#include "spikeprune/csv.hpp"
#include "spikeprune/synops.hpp"
#include "test_helpers.hpp"

using namespace spikeprune;
using spikeprune::testing::random_tiny_network;
using spikeprune::testing::random_sample;
using spikeprune::testing::scratch_dir;

namespace {

SpikingNetwork dense_4_3_net() {
    SpikingNetwork net;
    net.timesteps = 2;
    net.input_shape = {1, 2, 2};
    Layer hidden;
    hidden.spec = {LayerKind::Dense, 4, 3, 1, 1, 0, true};
    hidden.lif = LifParams{};
    hidden.weight = TensorND::zeros({3, 4});
    net.layers.push_back(hidden);
    Layer out;
    out.spec = {LayerKind::Dense, 3, 2, 1, 1, 0, false};
    out.weight = TensorND::zeros({2, 3});
    net.layers.push_back(out);
    net.validate();
    return net;
}

// Independent oracle: count synapses from input position (c,h,w) of `layer`
// by brute-force enumeration of every output unit whose receptive field
// covers it.
std::int64_t brute_fanout(const SpikingNetwork& net, const ChannelMask& masks, int layer, int c,
                          int h, int w) {
    const auto shapes = net.output_shapes();
    const Shape3 out = shapes[layer];
    const LayerSpec& spec = net.layers[layer].spec;
    if (layer > 0 && !masks.keep[layer - 1][c]) return 0;
    std::int64_t count = 0;
    if (spec.kind == LayerKind::Dense) {
        for (int oc = 0; oc < spec.c_out; ++oc)
            if (masks.keep[layer][oc]) ++count;
        return count;
    }
    for (int oc = 0; oc < out.c; ++oc) {
        if (!masks.keep[layer][oc]) continue;
        for (int oh = 0; oh < out.h; ++oh)
            for (int ow = 0; ow < out.w; ++ow) {
                int kh = h - (oh * spec.stride - spec.padding);
                int kw = w - (ow * spec.stride - spec.padding);
                if (kh >= 0 && kh < spec.kernel && kw >= 0 && kw < spec.kernel) ++count;
            }
    }
    return count;
}

// Replays every spike across every synapse it feeds.
double brute_synops(const SpikingNetwork& net, const ChannelMask& masks,
                    const SpikeRecord& record) {
    const auto shapes = net.output_shapes();
    std::int64_t total = 0;
    for (int l = 0; l + 1 < net.n_layers(); ++l) {
        const Shape3& s = shapes[l];
        for (int c = 0; c < s.c; ++c)
            for (int h = 0; h < s.h; ++h)
                for (int w = 0; w < s.w; ++w) {
                    std::int64_t flat = (static_cast<std::int64_t>(c) * s.h + h) * s.w + w;
                    std::uint32_t spikes = record.per_neuron[l][flat];
                    if (spikes == 0) continue;
                    total += spikes * brute_fanout(net, masks, l + 1, c, h, w);
                }
    }
    return static_cast<double>(total);
}

ChannelMask random_mask(Rng& rng, const SpikingNetwork& net) {
    ChannelMask m = ChannelMask::all_true(net);
    for (int l = 0; l + 1 < net.n_layers(); ++l) {
        int c_out = net.layers[l].spec.c_out;
        int masked = static_cast<int>(uniform_index(rng, c_out));  // keep >= 1
        for (int i = 0; i < masked; ++i)
            m.keep[l][uniform_index(rng, c_out)] = 0;
        if (m.kept(l) == 0) m.keep[l][0] = 1;
    }
    return m;
}

Dataset random_dataset_for(Rng& rng, const SpikingNetwork& net, int n) {
    Dataset data;
    data.channels = net.input_shape.c;
    data.height = net.input_shape.h;
    data.width = net.input_shape.w;
    data.n_classes = net.n_classes();
    for (int i = 0; i < n; ++i) {
        auto x = random_sample(rng, net.input_shape);
        data.samples.insert(data.samples.end(), x.begin(), x.end());
        data.labels.push_back(static_cast<std::uint16_t>(i % data.n_classes));
    }
    return data;
}

}  // namespace

TEST_CASE("fanout of an unmasked dense layer is c_out everywhere") {
    SpikingNetwork net = dense_4_3_net();
    FanoutMap fan = fanout(net, ChannelMask::all_true(net));
    // into the 4->3 layer: every one of the 4 inputs feeds all 3 outputs
    REQUIRE(fan.per_input[0].size() == 4);
    for (auto c : fan.per_input[0]) CHECK(c == 3);
}

TEST_CASE("masking one dense output removes its synapses") {
    SpikingNetwork net = dense_4_3_net();
    ChannelMask m = ChannelMask::all_true(net);
    m.keep[0][1] = 0;  // the 4->3 layer keeps 2 of 3 channels
    FanoutMap fan = fanout(net, m);
    for (auto c : fan.per_input[0]) CHECK(c == 2);
    // the masked hidden neuron loses its own outgoing synapses too
    REQUIRE(fan.per_input[1].size() == 3);
    CHECK(fan.per_input[1][0] == 2);  // classifier keeps both outputs
    CHECK(fan.per_input[1][1] == 0);  // masked source neuron
    CHECK(fan.per_input[1][2] == 2);
}

TEST_CASE("conv fanout: 3x3 stride 1 pad 1 over 5x5, 8 output channels") {
    SpikingNetwork net;
    net.timesteps = 1;
    net.input_shape = {1, 5, 5};
    Layer conv;
    conv.spec = {LayerKind::Conv2D, 1, 8, 3, 1, 1, true};
    conv.lif = LifParams{};
    conv.weight = TensorND::zeros({8, 1, 3, 3});
    net.layers.push_back(conv);
    Layer out;
    out.spec = {LayerKind::Dense, 8 * 25, 2, 1, 1, 0, false};
    out.weight = TensorND::zeros({2, 8 * 25});
    net.layers.push_back(out);
    net.validate();

    FanoutMap fan = fanout(net, ChannelMask::all_true(net));
    const auto& f = fan.per_input[0];  // input positions of the conv layer
    CHECK(f[2 * 5 + 2] == 72);  // center: 9 placements x 8 channels
    CHECK(f[0] == 32);          // corner: 4 placements x 8 channels
    CHECK(f[2] == 48);          // edge middle: 6 placements x 8 channels
}

TEST_CASE("synops_per_sample basics") {
    SpikeRecord record;
    record.per_neuron = {{0, 0, 0}};
    FanoutMap fan;
    fan.per_input = {{1, 1}, {5, 7, 9}};
    CHECK(synops_per_sample(record, fan) == 0.0);
    record.per_neuron = {{3, 0, 0}};
    CHECK(synops_per_sample(record, fan) == 15.0);

    SpikeRecord bad;
    bad.per_neuron = {{1, 2}};
    CHECK_THROWS_AS(synops_per_sample(bad, fan), ContractError);
}

TEST_CASE("synops matches the per-synapse enumeration oracle exactly") {
    Rng rng(41);
    for (int trial = 0; trial < 8; ++trial) {
        SpikingNetwork net = random_tiny_network(rng, 2, 6);
        auto x = random_sample(rng, net.input_shape);
        ForwardResult fr = forward_t(net, x);
        ChannelMask masks =
            trial % 2 == 0 ? ChannelMask::all_true(net) : random_mask(rng, net);
        FanoutMap fan = fanout(net, masks);
        CHECK(synops_per_sample(fr.record, fan) == brute_synops(net, masks, fr.record));
    }
}

TEST_CASE("masking more channels never increases SynOps or params") {
    Rng rng(42);
    for (int trial = 0; trial < 6; ++trial) {
        SpikingNetwork net = random_tiny_network(rng, 2, 6);
        auto x = random_sample(rng, net.input_shape);
        ForwardResult fr = forward_t(net, x);
        ChannelMask a = random_mask(rng, net);
        ChannelMask b = a;
        // Mask strictly more channels where possible.
        for (int l = 0; l + 1 < net.n_layers(); ++l) {
            if (b.kept(l) > 1) {
                for (auto& keep : b.keep[l])
                    if (keep) {
                        keep = 0;
                        break;
                    }
            }
        }
        CHECK(synops_per_sample(fr.record, fanout(net, b)) <=
              synops_per_sample(fr.record, fanout(net, a)));
        CHECK(param_count(net, b) <= param_count(net, a));
    }
}

TEST_CASE("synops_average matches manual per-sample mean and handles subsets") {
    Rng rng(43);
    SpikingNetwork net = random_tiny_network(rng, 1, 4);
    Dataset data = random_dataset_for(rng, net, 6);

    FanoutMap fan = fanout(net, ChannelMask::all_true(net));
    double manual = 0.0;
    for (int i = 0; i < data.size(); ++i)
        manual += synops_per_sample(forward_t(net, data.sample(i)).record, fan);
    manual /= data.size();

    SynOpsReport all = synops_average(net, data, SubsetSpec::all());
    CHECK(all.exact);
    CHECK(all.n_samples_used == data.size());
    CHECK(all.total == manual);
    double per_layer_sum = 0.0;
    for (double v : all.per_layer) per_layer_sum += v;
    CHECK(all.total == per_layer_sum);

    SubsetSpec sub;
    sub.size = 3;
    sub.seed = 7;
    SynOpsReport s1 = synops_average(net, data, sub);
    SynOpsReport s2 = synops_average(net, data, sub);
    CHECK(!s1.exact);
    CHECK(s1.total == s2.total);  // fixed seed, bit-identical

    SubsetSpec empty;
    empty.size = 0;
    CHECK_THROWS_AS(synops_average(net, data, empty), ContractError);
}

TEST_CASE("encoder flag adds the analog first-layer term") {
    Rng rng(47);
    SpikingNetwork net = random_tiny_network(rng, 1, 4);
    Dataset data = random_dataset_for(rng, net, 3);
    SynOpsReport off = synops_average(net, data, SubsetSpec::all(7, false));
    SynOpsReport on = synops_average(net, data, SubsetSpec::all(7, true));
    CHECK(off.per_layer[0] == 0.0);
    CHECK(on.per_layer[0] != 0.0);
    for (std::size_t l = 1; l < off.per_layer.size(); ++l)
        CHECK(on.per_layer[l] == off.per_layer[l]);

    // T * sum(sample .* fanout) averaged, computed by hand
    FanoutMap fan = fanout(net, ChannelMask::all_true(net));
    double manual = 0.0;
    for (int i = 0; i < data.size(); ++i) {
        auto s = data.sample(i);
        for (std::size_t k = 0; k < s.size(); ++k) manual += s[k] * fan.per_input[0][k];
    }
    manual = manual * net.timesteps / data.size();
    CHECK(on.per_layer[0] == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("calibration on identical samples converges immediately with zero error") {
    Rng rng(44);
    SpikingNetwork net = random_tiny_network(rng, 1, 4);
    auto x = random_sample(rng, net.input_shape);
    Dataset data;
    data.channels = net.input_shape.c;
    data.height = net.input_shape.h;
    data.width = net.input_shape.w;
    data.n_classes = 2;
    for (int i = 0; i < 30; ++i) {
        data.samples.insert(data.samples.end(), x.begin(), x.end());
        data.labels.push_back(0);
    }
    CalibrationCurve curve = calibrate_subset(net, data, 0.01, 5, 7);
    REQUIRE(curve.converged_at.has_value());
    CHECK(*curve.converged_at == 5);
    CHECK(curve.points[0].second == 0.0);
}

TEST_CASE("calibration with zero tolerance reaches the full dataset with exact zero tail") {
    Rng rng(45);
    SpikingNetwork net = random_tiny_network(rng, 1, 4);
    Dataset data = random_dataset_for(rng, net, 23);
    CalibrationCurve curve = calibrate_subset(net, data, 0.0, 5, 9);
    CHECK(!curve.converged_at.has_value());
    CHECK(curve.points.back().first == 23);  // includes the partial final step
    CHECK(curve.points.back().second == 0.0);
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i].first > curve.points[i - 1].first);
}

TEST_CASE("param_count follows kept_out * kept_in * k^2") {
    SpikingNetwork net = dense_4_3_net();
    ChannelMask all = ChannelMask::all_true(net);
    // dense 4->3 plus classifier 3->2
    CHECK(param_count(net, all) == 12 + 6);

    // conv 8->16 with half the outputs masked keeps 8*8*9 weights
    SpikingNetwork convnet;
    convnet.timesteps = 1;
    convnet.input_shape = {8, 4, 4};
    Layer conv;
    conv.spec = {LayerKind::Conv2D, 8, 16, 3, 1, 1, true};
    conv.lif = LifParams{};
    conv.weight = TensorND::zeros({16, 8, 3, 3});
    convnet.layers.push_back(conv);
    Layer out;
    out.spec = {LayerKind::Dense, 16 * 16, 2, 1, 1, 0, false};
    out.weight = TensorND::zeros({2, 16 * 16});
    convnet.layers.push_back(out);
    convnet.validate();

    ChannelMask half = ChannelMask::all_true(convnet);
    for (int c = 0; c < 8; ++c) half.keep[0][c] = 0;
    std::int64_t conv_contrib = 8LL * 8 * 9;
    std::int64_t dense_contrib = 2LL * 8 * 16;  // kept_in follows the conv mask
    CHECK(param_count(convnet, half) == conv_contrib + dense_contrib);

    ChannelMask empty = ChannelMask::all_true(convnet);
    for (int c = 0; c < 16; ++c) empty.keep[0][c] = 0;
    CHECK_THROWS_AS(param_count(convnet, empty), ContractError);
}

TEST_CASE("synops report CSV has per-layer rows and a TOTAL row") {
    Rng rng(46);
    SpikingNetwork net = random_tiny_network(rng, 1, 4);
    Dataset data = random_dataset_for(rng, net, 4);
    SynOpsReport report = synops_average(net, data, SubsetSpec::all());
    auto dir = scratch_dir("synops_report");
    write_synops_report_csv(dir / "report.csv", net, report);
    CsvTable table = read_csv(dir / "report.csv");
    CHECK(table.header ==
          std::vector<std::string>{"layer_index", "layer_kind", "synops_avg", "param_count"});
    REQUIRE(table.rows.size() == static_cast<std::size_t>(net.n_layers()) + 1);
    CHECK(table.rows.back()[0] == "TOTAL");
    CHECK(std::stod(table.rows.back()[2]) == report.total);
    std::filesystem::remove_all(dir);
}
