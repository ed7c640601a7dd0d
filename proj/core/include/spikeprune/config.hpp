#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spikeprune/errors.hpp"

namespace spikeprune {

// Line-oriented `section.key = value` configuration. Every hyperparameter of
// the pipeline lives here; unknown keys are rejected and ranges are checked
// at load time.

struct DataConfig {
    int n_samples = 2000;
    int classes = 4;
    int channels = 2;
    int height = 16;
    int width = 16;
    double separation = 3.0;
    double noise = 0.5;
    double val_fraction = 0.2;
};

struct ModelConfig {
    std::vector<int> conv_channels = {12, 24, 24};
    int kernel = 3;
    int stride = 2;
    int padding = 1;
    int timesteps = 4;
    double v_threshold = 1.0;
    double tau = 2.0;
};

struct TrainSection {
    int epochs = 24;
    int warmup_epochs = 3;
    double max_lr = 0.08;
    double momentum = 0.9;
    double weight_decay = 5e-5;
    int batch_size = 32;
    double surrogate_alpha = 2.0;
};

struct SynopsSection {
    std::int64_t subset_size = 0;  // 0: calibrate automatically
    std::uint64_t subset_seed = 7;
    bool include_encoder = false;
    double calibration_tolerance = 0.01;
    std::int64_t calibration_step = 10;
};

struct LreSection {
    int n_policies = 24;
    double holdout_fraction = 0.25;
    double max_ratio = 0.9;
    int finetune_epochs = 6;
};

struct AgentSection {
    int hidden = 64;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double tau = 0.01;
    int batch_size = 64;
    int capacity = 2000;
    int updates_per_episode = 32;
    double sigma0 = 0.5;
    double sigma_decay = 0.98;
};

struct SearchSection {
    int episodes = 300;
    int warmup_episodes = 50;
    int finetune_epochs = 6;
};

struct TargetsSection {
    std::string mode = "S";  // S | P | SP
    double synops_ratio = 0.5;
    double params_ratio = 0.5;
    double lambda = 1.0;
    double alpha = 1.2;
};

struct RunConfig {
    std::uint64_t seed = 42;
    DataConfig data;
    ModelConfig model;
    TrainSection train;
    SynopsSection synops;
    LreSection lre;
    AgentSection agent;
    SearchSection search;
    TargetsSection targets;

    void validate() const;  // throws ConfigError with a distinct message per rule
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace spikeprune
