#pragma once

#include <filesystem>
#include <string>

#include "spikeprune/network.hpp"
#include "spikeprune/rng.hpp"

namespace spikeprune::testing {

// Random tiny conv/dense stacks for oracle-style tests: up to `max_hidden`
// spiking layers (conv or dense) plus a dense classifier.
inline SpikingNetwork random_tiny_network(Rng& rng, int max_hidden = 2, int max_channels = 8) {
    SpikingNetwork net;
    net.timesteps = 1 + static_cast<int>(uniform_index(rng, 4));
    net.input_shape = {1 + static_cast<int>(uniform_index(rng, 2)),
                       4 + static_cast<int>(uniform_index(rng, 3)),
                       4 + static_cast<int>(uniform_index(rng, 3))};
    Shape3 cur = net.input_shape;
    const int n_hidden = 1 + static_cast<int>(uniform_index(rng, max_hidden));
    for (int l = 0; l < n_hidden; ++l) {
        Layer layer;
        bool dense = uniform01(rng) < 0.25;
        int c_out = 1 + static_cast<int>(uniform_index(rng, max_channels));
        if (dense) {
            layer.spec = {LayerKind::Dense, static_cast<int>(cur.numel()), c_out, 1, 1, 0, true};
        } else {
            int k = uniform01(rng) < 0.5 ? 1 : 3;
            int s = uniform01(rng) < 0.5 ? 1 : 2;
            int pad = k == 3 && uniform01(rng) < 0.7 ? 1 : 0;
            while (cur.h + 2 * pad < k || cur.w + 2 * pad < k) k = 1;
            layer.spec = {LayerKind::Conv2D, cur.c, c_out, k, s, pad, true};
        }
        layer.lif = LifParams{};
        layer.weight = TensorND::zeros(
            layer.spec.kind == LayerKind::Conv2D
                ? std::vector<int>{layer.spec.c_out, layer.spec.c_in, layer.spec.kernel,
                                   layer.spec.kernel}
                : std::vector<int>{layer.spec.c_out, layer.spec.c_in});
        for (double& w : layer.weight.data) w = gaussian(rng) * 1.2;
        cur = layer.spec.out_shape(cur);
        net.layers.push_back(std::move(layer));
    }
    Layer fc;
    int classes = 2 + static_cast<int>(uniform_index(rng, 3));
    fc.spec = {LayerKind::Dense, static_cast<int>(cur.numel()), classes, 1, 1, 0, false};
    fc.weight = TensorND::zeros({classes, fc.spec.c_in});
    for (double& w : fc.weight.data) w = gaussian(rng);
    net.layers.push_back(std::move(fc));
    net.validate();
    return net;
}

inline std::vector<double> random_sample(Rng& rng, const Shape3& shape, double amplitude = 1.5) {
    std::vector<double> x(shape.numel());
    for (double& v : x) v = amplitude * gaussian(rng);
    return x;
}

// Unique scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("spikeprune_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace spikeprune::testing
