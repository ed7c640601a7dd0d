#include "spikeprune/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace spikeprune {

void SpikingNetwork::validate() const {
    require(!layers.empty(), "network has no layers");
    require(timesteps >= 1, "timesteps must be >= 1");
    Shape3 cur = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        l.spec.validate();
        if (l.spec.has_lif) {
            require(l.lif.has_value(), "hidden layer missing LIF parameters");
            l.lif->validate();
        }
        require(l.weight.numel() == l.spec.param_count(), "weight tensor size mismatch");
        cur = l.spec.out_shape(cur);  // throws on chain mismatch
    }
    require(!layers.back().spec.has_lif, "final classifier layer must not have LIF");
}

std::vector<Shape3> SpikingNetwork::output_shapes() const {
    std::vector<Shape3> shapes;
    Shape3 cur = input_shape;
    for (const Layer& l : layers) {
        cur = l.spec.out_shape(cur);
        shapes.push_back(cur);
    }
    return shapes;
}

std::int64_t SpikingNetwork::param_count() const {
    std::int64_t n = 0;
    for (const Layer& l : layers) n += l.spec.param_count();
    return n;
}

ForwardResult forward_t(const SpikingNetwork& net, std::span<const double> sample) {
    require(sample.size() == static_cast<std::size_t>(net.input_shape.numel()),
            "forward_t: sample does not match network input shape");

    const auto shapes = net.output_shapes();
    const int L = net.n_layers();
    const int T = net.timesteps;

    ForwardResult res;
    res.record.per_neuron.resize(L - 1);
    res.record.per_layer_totals.assign(L - 1, 0);
    for (int l = 0; l + 1 < L; ++l)
        res.record.per_neuron[l].assign(static_cast<std::size_t>(shapes[l].numel()), 0);

    std::vector<std::vector<double>> membrane(L - 1);
    std::vector<std::vector<double>> act(L);  // post-layer activation buffers
    for (int l = 0; l + 1 < L; ++l) membrane[l].assign(shapes[l].numel(), 0.0);
    for (int l = 0; l < L; ++l) act[l].assign(shapes[l].numel(), 0.0);
    std::vector<double> z;

    res.logits.assign(T, std::vector<double>(net.n_classes(), 0.0));
    for (int t = 0; t < T; ++t) {
        const double* x = sample.data();
        Shape3 in = net.input_shape;
        for (int l = 0; l < L; ++l) {
            const Layer& layer = net.layers[l];
            z.assign(shapes[l].numel(), 0.0);
            layer_forward(layer.spec, in, layer.weight.ptr(), x, z.data());
            if (l + 1 < L) {
                lif_step_inplace(membrane[l].data(), z.data(), shapes[l].numel(), *layer.lif,
                                 act[l].data());
                auto& counts = res.record.per_neuron[l];
                for (std::int64_t i = 0; i < shapes[l].numel(); ++i) {
                    if (!std::isfinite(membrane[l][i]))
                        throw NumericsError("non-finite activation in layer " + std::to_string(l));
                    if (act[l][i] != 0.0) ++counts[i];
                }
                x = act[l].data();
            } else {
                for (std::int64_t i = 0; i < shapes[l].numel(); ++i) {
                    if (!std::isfinite(z[i]))
                        throw NumericsError("non-finite activation in layer " + std::to_string(l));
                    res.logits[t][i] = z[i];
                }
            }
            in = shapes[l];
        }
    }
    for (int l = 0; l + 1 < L; ++l) {
        std::uint64_t total = 0;
        for (std::uint32_t c : res.record.per_neuron[l]) total += c;
        res.record.per_layer_totals[l] = total;
    }
    return res;
}

double evaluate(const SpikingNetwork& net, const DatasetView& view) {
    require(view.size() > 0, "evaluate: empty dataset view");
    const int C = net.n_classes();
    std::int64_t correct = 0;
    std::vector<double> avg(C);
    for (int i = 0; i < view.size(); ++i) {
        ForwardResult fr = forward_t(net, view.sample(i));
        std::fill(avg.begin(), avg.end(), 0.0);
        for (const auto& lt : fr.logits)
            for (int c = 0; c < C; ++c) avg[c] += lt[c];
        int best = 0;
        for (int c = 1; c < C; ++c)
            if (avg[c] > avg[best]) best = c;
        if (best == view.label(i)) ++correct;
    }
    return static_cast<double>(correct) / view.size();
}

SpikingNetwork make_network(const NetworkArch& arch, const Shape3& input_shape, int n_classes,
                            Rng& rng) {
    require(!arch.conv_channels.empty(), "need at least one conv layer");
    SpikingNetwork net;
    net.timesteps = arch.timesteps;
    net.input_shape = input_shape;
    Shape3 cur = input_shape;
    for (int c_out : arch.conv_channels) {
        Layer l;
        l.spec = {LayerKind::Conv2D, cur.c,       c_out, arch.kernel,
                  arch.stride,       arch.padding, true};
        l.lif = arch.lif;
        // Kaiming-style init, scaled for binary spike inputs.
        double scale = std::sqrt(2.0 / l.spec.c_in / (arch.kernel * arch.kernel));
        l.weight = TensorND::zeros({c_out, cur.c, arch.kernel, arch.kernel});
        for (double& w : l.weight.data) w = scale * gaussian(rng);
        cur = l.spec.out_shape(cur);
        net.layers.push_back(std::move(l));
    }
    Layer fc;
    fc.spec = {LayerKind::Dense, static_cast<int>(cur.numel()), n_classes, 1, 1, 0, false};
    double scale = std::sqrt(2.0 / fc.spec.c_in);
    fc.weight = TensorND::zeros({n_classes, fc.spec.c_in});
    for (double& w : fc.weight.data) w = scale * gaussian(rng);
    net.layers.push_back(std::move(fc));
    net.validate();
    return net;
}

namespace {

constexpr char kMagic[4] = {'S', 'P', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u8(std::ofstream& f, std::uint8_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f32(std::ofstream& f, float v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t get_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::uint8_t get_u8(std::ifstream& f) {
    std::uint8_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
float get_f32(std::ifstream& f) {
    float v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void save_network(const std::filesystem::path& path, const SpikingNetwork& net) {
    net.validate();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(kMagic, 4);
    put_u32(f, kVersion);
    put_u32(f, static_cast<std::uint32_t>(net.timesteps));
    put_u32(f, static_cast<std::uint32_t>(net.input_shape.c));
    put_u32(f, static_cast<std::uint32_t>(net.input_shape.h));
    put_u32(f, static_cast<std::uint32_t>(net.input_shape.w));
    put_u32(f, static_cast<std::uint32_t>(net.layers.size()));
    for (const Layer& l : net.layers) {
        put_u32(f, l.spec.kind == LayerKind::Conv2D ? 0 : 1);
        put_u32(f, static_cast<std::uint32_t>(l.spec.c_in));
        put_u32(f, static_cast<std::uint32_t>(l.spec.c_out));
        put_u32(f, static_cast<std::uint32_t>(l.spec.kernel));
        put_u32(f, static_cast<std::uint32_t>(l.spec.stride));
        put_u32(f, static_cast<std::uint32_t>(l.spec.padding));
        put_u8(f, l.spec.has_lif ? 1 : 0);
        const LifParams p = l.lif.value_or(LifParams{});
        put_f32(f, static_cast<float>(p.v_threshold));
        put_f32(f, static_cast<float>(p.tau));
        put_f32(f, static_cast<float>(p.v_reset));
        put_u8(f, p.decay_input ? 1 : 0);
    }
    for (const Layer& l : net.layers)
        for (double w : l.weight.data) put_f32(f, static_cast<float>(w));
    if (!f) throw IoError("write failed: " + path.string());
}

SpikingNetwork load_network(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not an SPNN checkpoint: " + path.string());
    if (get_u32(f) != kVersion) throw IoError("unsupported SPNN version in " + path.string());
    SpikingNetwork net;
    net.timesteps = static_cast<int>(get_u32(f));
    net.input_shape.c = static_cast<int>(get_u32(f));
    net.input_shape.h = static_cast<int>(get_u32(f));
    net.input_shape.w = static_cast<int>(get_u32(f));
    std::uint32_t n_layers = get_u32(f);
    if (!f || n_layers == 0 || n_layers > 1024) throw IoError("corrupt SPNN header");
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        Layer l;
        l.spec.kind = get_u32(f) == 0 ? LayerKind::Conv2D : LayerKind::Dense;
        l.spec.c_in = static_cast<int>(get_u32(f));
        l.spec.c_out = static_cast<int>(get_u32(f));
        l.spec.kernel = static_cast<int>(get_u32(f));
        l.spec.stride = static_cast<int>(get_u32(f));
        l.spec.padding = static_cast<int>(get_u32(f));
        l.spec.has_lif = get_u8(f) != 0;
        LifParams p;
        p.v_threshold = get_f32(f);
        p.tau = get_f32(f);
        p.v_reset = get_f32(f);
        p.decay_input = get_u8(f) != 0;
        if (l.spec.has_lif) l.lif = p;
        if (l.spec.kind == LayerKind::Conv2D)
            l.weight = TensorND::zeros({l.spec.c_out, l.spec.c_in, l.spec.kernel, l.spec.kernel});
        else
            l.weight = TensorND::zeros({l.spec.c_out, l.spec.c_in});
        net.layers.push_back(std::move(l));
    }
    for (Layer& l : net.layers)
        for (double& w : l.weight.data) w = get_f32(f);
    if (!f) throw IoError("truncated SPNN checkpoint: " + path.string());
    net.validate();
    return net;
}

void quantize_to_f32(SpikingNetwork& net) {
    for (Layer& l : net.layers)
        for (double& w : l.weight.data) w = static_cast<float>(w);
}

}  // namespace spikeprune
