#include "spikeprune/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "spikeprune/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "SPKD I/O assumes a little-endian host");

namespace spikeprune {

DatasetView full_view(const Dataset& data) {
    DatasetView v;
    v.data = &data;
    v.indices.resize(data.size());
    for (int i = 0; i < data.size(); ++i) v.indices[i] = i;
    return v;
}

std::pair<DatasetView, DatasetView> train_val_split(const Dataset& data, double val_fraction) {
    require(val_fraction >= 0.0 && val_fraction < 1.0, "val_fraction must be in [0,1)");
    int n = data.size();
    int n_val = static_cast<int>(std::floor(n * val_fraction));
    DatasetView train{&data, {}}, val{&data, {}};
    for (int i = 0; i < n - n_val; ++i) train.indices.push_back(i);
    for (int i = n - n_val; i < n; ++i) val.indices.push_back(i);
    return {train, val};
}

namespace {

constexpr char kMagic[4] = {'S', 'P', 'K', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void save_spkd(const std::filesystem::path& path, const Dataset& data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(kMagic, 4);
    put_u32(f, kVersion);
    put_u32(f, static_cast<std::uint32_t>(data.size()));
    put_u32(f, static_cast<std::uint32_t>(data.channels));
    put_u32(f, static_cast<std::uint32_t>(data.height));
    put_u32(f, static_cast<std::uint32_t>(data.width));
    put_u32(f, static_cast<std::uint32_t>(data.n_classes));
    std::vector<float> f32(data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i)
        f32[i] = static_cast<float>(data.samples[i]);
    f.write(reinterpret_cast<const char*>(f32.data()),
            static_cast<std::streamsize>(f32.size() * sizeof(float)));
    f.write(reinterpret_cast<const char*>(data.labels.data()),
            static_cast<std::streamsize>(data.labels.size() * sizeof(std::uint16_t)));
    if (!f) throw IoError("write failed: " + path.string());
}

Dataset load_spkd(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not an SPKD file: " + path.string());
    std::uint32_t version = get_u32(f);
    if (version != kVersion)
        throw IoError("unsupported SPKD version " + std::to_string(version));
    Dataset data;
    std::uint32_t n = get_u32(f);
    data.channels = static_cast<int>(get_u32(f));
    data.height = static_cast<int>(get_u32(f));
    data.width = static_cast<int>(get_u32(f));
    data.n_classes = static_cast<int>(get_u32(f));
    if (!f || data.channels <= 0 || data.height <= 0 || data.width <= 0 || data.n_classes <= 0)
        throw IoError("corrupt SPKD header: " + path.string());
    std::size_t count = static_cast<std::size_t>(n) * data.sample_size();
    std::vector<float> f32(count);
    f.read(reinterpret_cast<char*>(f32.data()), static_cast<std::streamsize>(count * sizeof(float)));
    data.labels.resize(n);
    f.read(reinterpret_cast<char*>(data.labels.data()),
           static_cast<std::streamsize>(n * sizeof(std::uint16_t)));
    if (!f) throw IoError("truncated SPKD file: " + path.string());
    data.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) data.samples[i] = f32[i];
    for (std::uint16_t lab : data.labels)
        if (lab >= data.n_classes) throw IoError("label out of range in " + path.string());
    return data;
}

Dataset generate_dataset(const SyntheticDatasetSpec& spec) {
    require(spec.n_classes >= 2, "synthetic data needs at least 2 classes");
    require(spec.separation > 0.0, "separation must be positive");
    require(spec.n_samples > 0, "n_samples must be positive");
    require(spec.channels >= 1 && spec.height >= 4 && spec.width >= 4,
            "image dimensions too small");

    Dataset data;
    data.channels = spec.channels;
    data.height = spec.height;
    data.width = spec.width;
    data.n_classes = spec.n_classes;
    data.samples.resize(static_cast<std::size_t>(spec.n_samples) * data.sample_size());
    data.labels.resize(spec.n_samples);

    // One bump center per (class, channel), spread on a ring.
    const double cy = (spec.height - 1) / 2.0;
    const double cx = (spec.width - 1) / 2.0;
    const double ring = std::min(spec.height, spec.width) / 4.0;
    const double sigma_blob = std::min(spec.height, spec.width) / 6.0;

    Rng rng = subsystem_rng(spec.seed, Subsystem::Data);
    for (int i = 0; i < spec.n_samples; ++i) {
        int cls = i % spec.n_classes;  // interleaved so contiguous splits stay balanced
        data.labels[i] = static_cast<std::uint16_t>(cls);
        double amp = spec.separation * uniform_range(rng, 0.8, 1.2);
        double jy = uniform_range(rng, -1.5, 1.5);
        double jx = uniform_range(rng, -1.5, 1.5);
        double* img = data.samples.data() + static_cast<std::size_t>(i) * data.sample_size();
        for (int c = 0; c < spec.channels; ++c) {
            double angle = 2.0 * std::numbers::pi * (cls + static_cast<double>(c) / spec.channels) /
                           spec.n_classes;
            double by = cy + ring * std::sin(angle) + jy;
            double bx = cx + ring * std::cos(angle) + jx;
            for (int h = 0; h < spec.height; ++h) {
                for (int w = 0; w < spec.width; ++w) {
                    double d2 = (h - by) * (h - by) + (w - bx) * (w - bx);
                    double v = amp * std::exp(-d2 / (2.0 * sigma_blob * sigma_blob));
                    v += spec.noise * gaussian(rng);
                    img[(c * spec.height + h) * spec.width + w] = v;
                }
            }
        }
    }
    return data;
}

}  // namespace spikeprune
