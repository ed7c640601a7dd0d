#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "spikeprune/prune.hpp"
#include "spikeprune/train.hpp"

namespace spikeprune {

// Finetuning moves a pruned network's SynOps in an irregular but, in
// aggregate, affine way. This module samples random policies, measures
// (pre-finetune, post-finetune) SynOps pairs and fits post = w * pre + b.

struct LrePoint {
    double pre = 0.0;   // SynOps right after pruning
    double post = 0.0;  // SynOps after the finetune budget
    int policy_id = 0;
};

struct LreModel {
    double w = 1.0;
    double b = 0.0;
    double mse = 0.0;  // root-mean-square error on the fit set
    double r2 = 1.0;   // coefficient of determination on the fit set
};

struct LreMetrics {
    double mse = 0.0;              // root-mean-square error
    std::optional<double> r2;      // absent when the holdout has zero variance
};

struct LreGenConfig {
    int n_policies = 24;
    double max_ratio = 0.9;  // per-layer ratios drawn uniformly from [0, max_ratio]
    TrainConfig finetune;    // schedule applied to every sampled policy
    std::uint64_t seed = 0;  // stream for policy sampling and per-policy finetunes
    SubsetSpec subset;       // fixed subset used for both pre and post values
};

// Samples policies, prunes, measures pre, finetunes on `train_view`,
// measures post. Points whose finetune diverges are dropped with a warning.
std::vector<LrePoint> gen_dataset(const SpikingNetwork& net, const Dataset& data,
                                  const DatasetView& train_view, const LreGenConfig& cfg);

// Ordinary least squares in closed form. Needs >= 2 points with distinct
// pre values, otherwise throws DegenerateFitError.
LreModel fit(std::span<const LrePoint> points);

// Eq.-form prediction w * pre + b, clamped below at zero.
double predict(const LreModel& model, double pre);

LreMetrics metrics(const LreModel& model, std::span<const LrePoint> holdout);

// Text model file (key=value per line) plus the subset bookkeeping the
// search stage must reuse.
struct LreArtifact {
    LreModel model;
    std::int64_t subset_size = 0;  // 0 means full dataset
    std::uint64_t subset_seed = 7;
};

void save_lre_model(const std::filesystem::path& path, const LreArtifact& artifact);
LreArtifact load_lre_model(const std::filesystem::path& path);

void save_lre_points_csv(const std::filesystem::path& path, std::span<const LrePoint> points);
std::vector<LrePoint> load_lre_points_csv(const std::filesystem::path& path);

}  // namespace spikeprune
