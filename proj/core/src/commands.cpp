#include "spikeprune/commands.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>

#include "spikeprune/csv.hpp"
#include "spikeprune/search.hpp"

namespace spikeprune {

namespace {

Dataset load_dataset_artifact(const ArtifactPaths& paths) {
    if (!std::filesystem::exists(paths.dataset()))
        throw MissingArtifactError("dataset not found at " + paths.dataset().string() +
                                   "; run gen-data first");
    return load_spkd(paths.dataset());
}

SpikingNetwork load_model_artifact(const ArtifactPaths& paths) {
    if (!std::filesystem::exists(paths.model()))
        throw MissingArtifactError("model checkpoint not found at " + paths.model().string() +
                                   "; run pretrain first");
    return load_network(paths.model());
}

TrainConfig base_train_config(const RunConfig& cfg) {
    TrainConfig t;
    t.epochs = cfg.train.epochs;
    t.warmup_epochs = cfg.train.warmup_epochs;
    t.max_lr = cfg.train.max_lr;
    t.momentum = cfg.train.momentum;
    t.weight_decay = cfg.train.weight_decay;
    t.batch_size = cfg.train.batch_size;
    t.surrogate_alpha = cfg.train.surrogate_alpha;
    return t;
}

TrainConfig finetune_config(const RunConfig& cfg, int epochs, std::uint64_t seed) {
    TrainConfig t = base_train_config(cfg);
    t.epochs = epochs;
    t.warmup_epochs = 0;
    t.seed = seed;
    t.track_accuracy = false;
    return t;
}

TargetRatios ratios_for_mode(const RunConfig& cfg, RewardMode mode) {
    TargetRatios r;
    if (mode != RewardMode::Params) r.synops = cfg.targets.synops_ratio;
    if (mode != RewardMode::SynOps) r.params = cfg.targets.params_ratio;
    return r;
}

// Subset actually used for SynOps during LRE and search: either the
// configured size or the calibrated one.
std::int64_t resolve_subset_size(const RunConfig& cfg, const SpikingNetwork& net,
                                 const Dataset& data) {
    if (cfg.synops.subset_size > 0) {
        require(cfg.synops.subset_size <= data.size(),
                "synops.subset_size exceeds the dataset size");
        return cfg.synops.subset_size;
    }
    CalibrationCurve curve =
        calibrate_subset(net, data, cfg.synops.calibration_tolerance, cfg.synops.calibration_step,
                         cfg.synops.subset_seed, cfg.synops.include_encoder);
    if (curve.converged_at) {
        std::printf("subset calibration: %" PRId64 " samples reach |error| < %g\n",
                    *curve.converged_at, cfg.synops.calibration_tolerance);
        return *curve.converged_at;
    }
    std::fprintf(stderr, "warning: subset calibration did not converge, using the full dataset\n");
    return data.size();
}

SearchEnv build_env(const RunConfig& cfg, const SpikingNetwork& net, const Dataset& data,
                    const DatasetView& val, const LreArtifact& artifact) {
    SubsetSpec subset;
    if (artifact.subset_size > 0 && artifact.subset_size < data.size())
        subset.size = artifact.subset_size;
    subset.seed = artifact.subset_seed;
    subset.include_encoder = cfg.synops.include_encoder;

    TarConfig tar_cfg;
    tar_cfg.lambda = cfg.targets.lambda;
    tar_cfg.alpha = cfg.targets.alpha;
    tar_cfg.mode = parse_reward_mode(cfg.targets.mode);
    return make_search_env(net, data, val, subset, artifact.model,
                           ratios_for_mode(cfg, tar_cfg.mode), tar_cfg);
}

}  // namespace

int cmd_gen_data(const RunConfig& cfg, const ArtifactPaths& paths) {
    SyntheticDatasetSpec spec;
    spec.n_samples = cfg.data.n_samples;
    spec.n_classes = cfg.data.classes;
    spec.channels = cfg.data.channels;
    spec.height = cfg.data.height;
    spec.width = cfg.data.width;
    spec.separation = cfg.data.separation;
    spec.noise = cfg.data.noise;
    spec.seed = cfg.seed;
    Dataset data = generate_dataset(spec);
    save_spkd(paths.dataset(), data);
    std::printf("gen-data: wrote %d samples (%d classes, %dx%dx%d) to %s\n", data.size(),
                data.n_classes, data.channels, data.height, data.width,
                paths.dataset().string().c_str());
    return kExitOk;
}

int cmd_pretrain(const RunConfig& cfg, const ArtifactPaths& paths) {
    Dataset data = load_dataset_artifact(paths);
    auto [train_view, val_view] = train_val_split(data, cfg.data.val_fraction);

    NetworkArch arch;
    arch.conv_channels = cfg.model.conv_channels;
    arch.kernel = cfg.model.kernel;
    arch.stride = cfg.model.stride;
    arch.padding = cfg.model.padding;
    arch.timesteps = cfg.model.timesteps;
    arch.lif.v_threshold = cfg.model.v_threshold;
    arch.lif.tau = cfg.model.tau;
    Rng init_rng = subsystem_rng(cfg.seed, Subsystem::Init);
    SpikingNetwork net = make_network(arch, {data.channels, data.height, data.width},
                                      data.n_classes, init_rng);

    TrainConfig tc = base_train_config(cfg);
    tc.seed = derive_seed(cfg.seed, Subsystem::Train);
    tc.track_accuracy = true;
    TrainResult result = train(net, train_view, tc);

    save_network(paths.model(), result.net);
    SpikingNetwork reloaded = load_network(paths.model());
    double train_acc = result.accuracy_history.empty() ? 0.0 : result.accuracy_history.back();
    double val_acc = evaluate(reloaded, val_view);
    std::printf("pretrain: train accuracy %.4f, val accuracy %.4f, checkpoint %s\n", train_acc,
                val_acc, paths.model().string().c_str());
    return kExitOk;
}

int cmd_lre(const RunConfig& cfg, const ArtifactPaths& paths) {
    Dataset data = load_dataset_artifact(paths);
    SpikingNetwork net = load_model_artifact(paths);
    auto [train_view, val_view] = train_val_split(data, cfg.data.val_fraction);

    const std::int64_t subset_size = resolve_subset_size(cfg, net, data);

    LreGenConfig gen;
    gen.n_policies = cfg.lre.n_policies;
    gen.max_ratio = cfg.lre.max_ratio;
    gen.finetune = finetune_config(cfg, cfg.lre.finetune_epochs, 0);  // per-policy seeds inside
    gen.seed = cfg.seed;
    gen.subset.size = subset_size < data.size() ? std::optional<std::int64_t>(subset_size)
                                                : std::nullopt;
    gen.subset.seed = cfg.synops.subset_seed;
    gen.subset.include_encoder = cfg.synops.include_encoder;

    std::vector<LrePoint> points = gen_dataset(net, data, train_view, gen);
    save_lre_points_csv(paths.lre_points(), points);

    const int n = static_cast<int>(points.size());
    const int n_holdout = std::max(1, static_cast<int>(std::floor(n * cfg.lre.holdout_fraction)));
    const int n_fit = n - n_holdout;
    if (n_fit < 2) throw Error("too few LRE points survived to fit a line");

    LreModel model = fit(std::span<const LrePoint>(points.data(), n_fit));
    LreMetrics holdout =
        metrics(model, std::span<const LrePoint>(points.data() + n_fit, n_holdout));

    LreArtifact artifact;
    artifact.model = model;
    artifact.subset_size = subset_size;
    artifact.subset_seed = cfg.synops.subset_seed;
    save_lre_model(paths.lre_model(), artifact);

    std::printf("lre: w=%.6f b=%.3f fit rmse=%.3f fit r2=%.4f (on %d points)\n", model.w, model.b,
                model.mse, model.r2, n_fit);
    if (holdout.r2)
        std::printf("lre: holdout rmse=%.3f r2=%.4f (on %d points)\n", holdout.mse, *holdout.r2,
                    n_holdout);
    else
        std::printf("lre: holdout rmse=%.3f r2=undefined (on %d points)\n", holdout.mse,
                    n_holdout);
    return kExitOk;
}

int cmd_search(const RunConfig& cfg, const ArtifactPaths& paths) {
    Dataset data = load_dataset_artifact(paths);
    SpikingNetwork net = load_model_artifact(paths);
    if (!std::filesystem::exists(paths.lre_model()))
        throw MissingArtifactError("LRE model not found at " + paths.lre_model().string() +
                                   "; run lre first");
    LreArtifact artifact = load_lre_model(paths.lre_model());
    auto [train_view, val_view] = train_val_split(data, cfg.data.val_fraction);

    SearchEnv env = build_env(cfg, net, data, val_view, artifact);

    DdpgConfig agent_cfg;
    agent_cfg.hidden = cfg.agent.hidden;
    agent_cfg.actor_lr = cfg.agent.actor_lr;
    agent_cfg.critic_lr = cfg.agent.critic_lr;
    agent_cfg.tau = cfg.agent.tau;
    agent_cfg.batch_size = cfg.agent.batch_size;
    agent_cfg.capacity = cfg.agent.capacity;
    agent_cfg.updates_per_episode = cfg.agent.updates_per_episode;
    agent_cfg.sigma0 = cfg.agent.sigma0;
    agent_cfg.sigma_decay = cfg.agent.sigma_decay;
    agent_cfg.seed = derive_seed(cfg.seed, Subsystem::Agent);
    DdpgAgent agent(agent_cfg);

    SearchConfig sc;
    sc.episodes = cfg.search.episodes;
    sc.warmup_episodes = cfg.search.warmup_episodes;
    SearchOutcome outcome = run_search(env, agent, sc);

    write_search_log_csv(paths.search_log(), outcome.log);
    save_policy_csv(paths.best_policy(), outcome.best.policy);
    agent.save(paths.agent());

    std::printf("search: best reward %.4f acc %.4f s_es/baseline %.4f params/baseline %.4f "
                "feasible %d\n",
                outcome.best.reward, outcome.best.acc,
                outcome.best.s_es / env.baselines.synops_subset,
                static_cast<double>(outcome.best.p_cur) /
                    static_cast<double>(env.baselines.params),
                outcome.best.feasible ? 1 : 0);
    if (!outcome.any_feasible) {
        std::fprintf(stderr,
                     "error: E_NO_FEASIBLE: no policy met the targets; best-effort policy "
                     "written to %s\n",
                     paths.best_policy().string().c_str());
        return kExitNoFeasible;
    }
    return kExitOk;
}

int cmd_finalize(const RunConfig& cfg, const ArtifactPaths& paths,
                 const std::optional<std::filesystem::path>& policy_path) {
    Dataset data = load_dataset_artifact(paths);
    SpikingNetwork net = load_model_artifact(paths);
    const std::filesystem::path policy_file = policy_path.value_or(paths.best_policy());
    if (!std::filesystem::exists(policy_file))
        throw MissingArtifactError("policy file not found at " + policy_file.string() +
                                   "; run search or pass --policy");
    PruningPolicy policy = load_policy_csv(policy_file);
    policy.validate(net.n_prunable());
    auto [train_view, val_view] = train_val_split(data, cfg.data.val_fraction);

    // The LRE artifact only pins the evaluation subset here; identity model
    // when the stage was skipped.
    LreArtifact artifact;
    if (std::filesystem::exists(paths.lre_model())) artifact = load_lre_model(paths.lre_model());
    SearchEnv env = build_env(cfg, net, data, val_view, artifact);

    TrainConfig ft = finetune_config(cfg, cfg.search.finetune_epochs,
                                     derive_seed(cfg.seed, Subsystem::Finalize));
    auto [compressed, report] = finalize(env, policy, train_view, ft);

    save_network(paths.final_model(), compressed);
    write_final_report_csv(paths.final_report(), report);
    std::printf("finalize: acc %.4f synops %.1f (%.4fx) params %" PRId64
                " (%.4fx) s_feasible %d p_feasible %d\n",
                report.acc, report.synops_abs, report.synops_ratio, report.params_abs,
                report.params_ratio, report.s_feasible ? 1 : 0, report.p_feasible ? 1 : 0);
    return kExitOk;
}

int cmd_report(const RunConfig& cfg, const ArtifactPaths& paths,
               const std::optional<std::filesystem::path>& model_path) {
    Dataset data = load_dataset_artifact(paths);
    const std::filesystem::path model_file = model_path.value_or(paths.model());
    if (!std::filesystem::exists(model_file))
        throw MissingArtifactError("model checkpoint not found at " + model_file.string());
    SpikingNetwork net = load_network(model_file);

    SynOpsReport report = synops_average(
        net, data, SubsetSpec::all(cfg.synops.subset_seed, cfg.synops.include_encoder));
    write_synops_report_csv(paths.synops_report(), net, report);
    std::printf("report: avg SynOps %.1f over %" PRId64 " samples, params %" PRId64 ", %s\n",
                report.total, report.n_samples_used, net.param_count(),
                paths.synops_report().string().c_str());
    return kExitOk;
}

}  // namespace spikeprune
