#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spikeprune/errors.hpp"

namespace spikeprune {

// In-memory image dataset. Samples are stored as doubles for the numeric
// kernels; the on-disk SPKD container keeps f32.
struct Dataset {
    int channels = 0;
    int height = 0;
    int width = 0;
    int n_classes = 0;
    std::vector<double> samples;       // n * channels * height * width, row-major
    std::vector<std::uint16_t> labels; // n

    int sample_size() const { return channels * height * width; }
    int size() const { return static_cast<int>(labels.size()); }

    std::span<const double> sample(int i) const {
        return {samples.data() + static_cast<std::size_t>(i) * sample_size(),
                static_cast<std::size_t>(sample_size())};
    }
};

// A subset of a dataset by index; used for train/val splits and fixed
// evaluation subsets.
struct DatasetView {
    const Dataset* data = nullptr;
    std::vector<int> indices;

    int size() const { return static_cast<int>(indices.size()); }
    std::span<const double> sample(int i) const { return data->sample(indices[i]); }
    std::uint16_t label(int i) const { return data->labels[indices[i]]; }
};

DatasetView full_view(const Dataset& data);

// Deterministic contiguous split: first (1-val_fraction) of samples train,
// remainder validation. Generated data interleaves classes, so both halves
// stay balanced.
std::pair<DatasetView, DatasetView> train_val_split(const Dataset& data, double val_fraction);

// SPKD binary container:
//   magic "SPKD", version u32, n_samples u32, C u32, H u32, W u32,
//   n_classes u32, then n*C*H*W little-endian f32, then n u16 labels.
void save_spkd(const std::filesystem::path& path, const Dataset& data);
Dataset load_spkd(const std::filesystem::path& path);

// Synthetic class-blob images: each class gets fixed Gaussian bumps per
// channel; samples jitter the bump centers and amplitude and add pixel noise.
struct SyntheticDatasetSpec {
    int n_samples = 2000;
    int n_classes = 4;
    int channels = 2;
    int height = 16;
    int width = 16;
    double separation = 3.0;  // bump amplitude relative to unit noise
    double noise = 0.5;       // pixel noise stddev
    std::uint64_t seed = 42;
};

Dataset generate_dataset(const SyntheticDatasetSpec& spec);

}  // namespace spikeprune
