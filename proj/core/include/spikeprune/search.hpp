#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spikeprune/ddpg.hpp"
#include "spikeprune/lre.hpp"
#include "spikeprune/prune.hpp"

namespace spikeprune {

// Which resources the reward penalizes.
enum class RewardMode { SynOps, Params, Both };

RewardMode parse_reward_mode(const std::string& s);  // "S" | "P" | "SP"
std::string reward_mode_name(RewardMode mode);

struct TarConfig {
    double lambda = 1.0;
    double alpha = 1.2;
    RewardMode mode = RewardMode::SynOps;
};

// Absolute resource budgets; a target may be absent when the mode ignores it.
struct Targets {
    std::optional<double> s_target;
    std::optional<double> p_target;
};

// One-sided overshoot penalty: -lambda * max(x/t - 1, 0)^alpha.
double penalty_f(double x, double t, double lambda = 1.0, double alpha = 1.2);

// Target-aware reward: accuracy plus the mode's penalties.
double tar(double acc, double s_es, double p_cur, const Targets& targets, const TarConfig& cfg);

// Budgets expressed as fractions of the pretrained baseline.
struct TargetRatios {
    std::optional<double> synops;
    std::optional<double> params;
};

// Normalization constants measured once on the pretrained network.
struct Baselines {
    double synops_subset = 0.0;  // average SynOps on the fixed subset
    double synops_exact = 0.0;   // average SynOps on the full dataset
    std::int64_t params = 0;
    double max_c_in = 1.0;  // maxima over prunable layers
    double max_c_out = 1.0;
    double max_kernel = 1.0;
    double max_stride = 1.0;
    double max_layer_params = 1.0;
};

struct SearchEnv {
    const SpikingNetwork* base = nullptr;
    const Dataset* data = nullptr;
    DatasetView val;
    SubsetSpec subset;
    LreModel lre;
    TargetRatios target_ratios;
    TarConfig tar_cfg;
    Baselines baselines;

    Targets subset_targets() const;  // ratios applied to the subset baseline
    Targets exact_targets() const;   // ratios applied to the exact baseline
};

SearchEnv make_search_env(const SpikingNetwork& base, const Dataset& data, const DatasetView& val,
                          const SubsetSpec& subset, const LreModel& lre,
                          const TargetRatios& ratios, const TarConfig& tar_cfg);

// Episode state: layers 1..visited pruned in `current`, the rest untouched.
// Keep-sets always come from the pretrained network's L1 scores, so a
// finished episode equals apply_policy(base, policy).
struct EpisodeContext {
    const SearchEnv* env = nullptr;
    ChannelMask masks;
    SpikingNetwork current;
    int visited = 0;
};

EpisodeContext make_episode_context(const SearchEnv& env);
void prune_next_layer(EpisodeContext& ctx, double ratio);

// The agent's observation before acting on prunable layer `i` (1-based):
// (i, c_in, c_out, stride, kernel, layer params, predicted post-finetune
// SynOps, current params, params still removable downstream, previous
// action), all normalized into [0,1] by the baseline maxima.
StateVec featurize(const EpisodeContext& ctx, int layer, double a_prev, const LreModel& lre);

struct EpisodeResult {
    PruningPolicy policy;
    double acc = 0.0;
    double s_es = 0.0;
    std::int64_t p_cur = 0;
    double reward = 0.0;
    bool feasible = false;
};

EpisodeResult run_episode(const SearchEnv& env, DdpgAgent& agent, DdpgAgent::ActMode mode,
                          std::vector<Transition>* trajectory = nullptr);

struct SearchConfig {
    int episodes = 300;
    int warmup_episodes = 50;
};

struct SearchLogRow {
    int episode = 0;
    std::string mode;
    double reward = 0.0;
    double acc = 0.0;
    double s_es_ratio = 0.0;
    double p_ratio = 0.0;
    bool feasible = false;
    double sigma = 0.0;
};

struct SearchOutcome {
    EpisodeResult best;
    bool any_feasible = false;
    std::vector<SearchLogRow> log;
};

// Warmup episodes of blind sampling, then exploration with decaying noise.
// Every episode is pushed to replay and followed by agent updates. The best
// policy prefers feasibility first, then reward.
SearchOutcome run_search(const SearchEnv& env, DdpgAgent& agent, const SearchConfig& cfg);

void write_search_log_csv(const std::filesystem::path& path,
                          const std::vector<SearchLogRow>& rows);

struct FinalReport {
    double acc = 0.0;
    double synops_abs = 0.0;
    double synops_ratio = 0.0;
    std::int64_t params_abs = 0;
    double params_ratio = 0.0;
    bool s_feasible = false;
    bool p_feasible = false;
};

// Prune with the chosen policy, finetune, then measure exact SynOps on the
// full dataset, parameters and accuracy, with target-satisfaction flags.
std::pair<SpikingNetwork, FinalReport> finalize(const SearchEnv& env, const PruningPolicy& policy,
                                                const DatasetView& train_view,
                                                const TrainConfig& finetune_cfg);

void write_final_report_csv(const std::filesystem::path& path, const FinalReport& report);
FinalReport load_final_report_csv(const std::filesystem::path& path);

}  // namespace spikeprune
