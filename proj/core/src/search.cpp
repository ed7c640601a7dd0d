#include "spikeprune/search.hpp"

#include <algorithm>
#include <cmath>

#include "spikeprune/csv.hpp"

namespace spikeprune {

RewardMode parse_reward_mode(const std::string& s) {
    if (s == "S") return RewardMode::SynOps;
    if (s == "P") return RewardMode::Params;
    if (s == "SP") return RewardMode::Both;
    throw ConfigError("targets.mode must be one of S, P, SP");
}

std::string reward_mode_name(RewardMode mode) {
    switch (mode) {
        case RewardMode::SynOps: return "S";
        case RewardMode::Params: return "P";
        case RewardMode::Both: return "SP";
    }
    return "?";
}

double penalty_f(double x, double t, double lambda, double alpha) {
    require(t > 0.0, "penalty_f: target must be positive");
    double over = std::max(x / t - 1.0, 0.0);
    return -lambda * std::pow(over, alpha);
}

namespace {

bool uses_synops(RewardMode m) { return m != RewardMode::Params; }
bool uses_params(RewardMode m) { return m != RewardMode::SynOps; }

}  // namespace

double tar(double acc, double s_es, double p_cur, const Targets& targets, const TarConfig& cfg) {
    require(acc >= 0.0 && acc <= 1.0, "tar: accuracy must be in [0,1]");
    require(cfg.lambda > 0.0 && cfg.alpha > 0.0, "tar: lambda and alpha must be positive");
    double reward = acc;
    if (uses_synops(cfg.mode)) {
        if (!targets.s_target)
            throw ConfigError("tar: mode requires a SynOps target but none is set");
        reward += penalty_f(s_es, *targets.s_target, cfg.lambda, cfg.alpha);
    }
    if (uses_params(cfg.mode)) {
        if (!targets.p_target)
            throw ConfigError("tar: mode requires a parameter target but none is set");
        reward += penalty_f(p_cur, *targets.p_target, cfg.lambda, cfg.alpha);
    }
    return reward;
}

Targets SearchEnv::subset_targets() const {
    Targets t;
    if (target_ratios.synops) t.s_target = *target_ratios.synops * baselines.synops_subset;
    if (target_ratios.params)
        t.p_target = *target_ratios.params * static_cast<double>(baselines.params);
    return t;
}

Targets SearchEnv::exact_targets() const {
    Targets t;
    if (target_ratios.synops) t.s_target = *target_ratios.synops * baselines.synops_exact;
    if (target_ratios.params)
        t.p_target = *target_ratios.params * static_cast<double>(baselines.params);
    return t;
}

SearchEnv make_search_env(const SpikingNetwork& base, const Dataset& data, const DatasetView& val,
                          const SubsetSpec& subset, const LreModel& lre,
                          const TargetRatios& ratios, const TarConfig& tar_cfg) {
    base.validate();
    require(base.n_prunable() >= 1, "search needs at least one prunable layer");
    if (uses_synops(tar_cfg.mode))
        require(ratios.synops.has_value(), "SynOps mode needs a SynOps target ratio");
    if (uses_params(tar_cfg.mode))
        require(ratios.params.has_value(), "parameter mode needs a parameter target ratio");

    SearchEnv env;
    env.base = &base;
    env.data = &data;
    env.val = val;
    env.subset = subset;
    env.lre = lre;
    env.target_ratios = ratios;
    env.tar_cfg = tar_cfg;

    env.baselines.synops_subset = synops_average(base, data, subset).total;
    env.baselines.synops_exact =
        synops_average(base, data, SubsetSpec::all(subset.seed, subset.include_encoder)).total;
    env.baselines.params = base.param_count();
    for (int l = 0; l < base.n_prunable(); ++l) {
        const LayerSpec& s = base.layers[l].spec;
        env.baselines.max_c_in = std::max(env.baselines.max_c_in, static_cast<double>(s.c_in));
        env.baselines.max_c_out = std::max(env.baselines.max_c_out, static_cast<double>(s.c_out));
        env.baselines.max_kernel = std::max(env.baselines.max_kernel, static_cast<double>(s.kernel));
        env.baselines.max_stride = std::max(env.baselines.max_stride, static_cast<double>(s.stride));
        env.baselines.max_layer_params =
            std::max(env.baselines.max_layer_params, static_cast<double>(s.param_count()));
    }
    return env;
}

EpisodeContext make_episode_context(const SearchEnv& env) {
    EpisodeContext ctx;
    ctx.env = &env;
    ctx.masks = ChannelMask::all_true(*env.base);
    ctx.current = *env.base;
    ctx.visited = 0;
    return ctx;
}

void prune_next_layer(EpisodeContext& ctx, double ratio) {
    const SearchEnv& env = *ctx.env;
    const int l = ctx.visited;
    require(l < env.base->n_prunable(), "prune_next_layer: episode already complete");
    require(ratio >= 0.0 && ratio < 1.0, "prune_next_layer: ratio must be in [0,1)");

    const int c_out = env.base->layers[l].spec.c_out;
    const int kept = kept_channels(c_out, ratio);
    if (kept < c_out) {
        // Keep-set from the pretrained weights, matching apply_policy.
        std::vector<double> scores = l1_scores(*env.base, l);
        std::vector<int> order(c_out);
        for (int c = 0; c < c_out; ++c) order[c] = c;
        std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a > b;
        });
        std::fill(ctx.masks.keep[l].begin(), ctx.masks.keep[l].end(), std::uint8_t{0});
        for (int i = 0; i < kept; ++i) ctx.masks.keep[l][order[i]] = 1;
    }
    ctx.current = apply_mask(*env.base, ctx.masks);
    ++ctx.visited;
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

StateVec featurize(const EpisodeContext& ctx, int layer, double a_prev, const LreModel& lre) {
    const SearchEnv& env = *ctx.env;
    const int n_prunable = env.base->n_prunable();
    require(layer >= 1 && layer <= n_prunable, "featurize: layer index out of range");
    require(layer == ctx.visited + 1, "featurize: layers before `layer` must be pruned already");

    const LayerSpec& spec = ctx.current.layers[layer - 1].spec;
    const Baselines& bl = env.baselines;

    double pre = synops_average(ctx.current, *env.data, env.subset).total;
    double s_es = predict(lre, pre);

    double p_rest = 0.0;
    for (int j = layer; j < n_prunable; ++j)
        p_rest += static_cast<double>(ctx.current.layers[j].spec.param_count());

    StateVec s{};
    s[0] = clamp01(static_cast<double>(layer) / n_prunable);
    s[1] = clamp01(spec.c_in / bl.max_c_in);
    s[2] = clamp01(spec.c_out / bl.max_c_out);
    s[3] = clamp01(spec.stride / bl.max_stride);
    s[4] = clamp01(spec.kernel / bl.max_kernel);
    s[5] = clamp01(static_cast<double>(spec.param_count()) / bl.max_layer_params);
    s[6] = clamp01(s_es / bl.synops_subset);
    s[7] = clamp01(static_cast<double>(ctx.current.param_count()) / static_cast<double>(bl.params));
    s[8] = clamp01(p_rest / static_cast<double>(bl.params));
    s[9] = clamp01(a_prev);
    return s;
}

EpisodeResult run_episode(const SearchEnv& env, DdpgAgent& agent, DdpgAgent::ActMode mode,
                          std::vector<Transition>* trajectory) {
    const int n_prunable = env.base->n_prunable();
    EpisodeContext ctx = make_episode_context(env);

    EpisodeResult result;
    std::vector<Transition> traj;
    double a_prev = 0.0;
    StateVec state = featurize(ctx, 1, a_prev, env.lre);
    for (int i = 1; i <= n_prunable; ++i) {
        double action = agent.act(state, mode);
        result.policy.ratios.push_back(action);
        prune_next_layer(ctx, action);

        Transition tr;
        tr.state = state;
        tr.action = action;
        tr.reward = 0.0;
        tr.terminal = i == n_prunable;
        if (!tr.terminal) {
            state = featurize(ctx, i + 1, action, env.lre);
            tr.next_state = state;
        }
        traj.push_back(tr);
        a_prev = action;
    }

    result.acc = evaluate(ctx.current, env.val);
    double pre = synops_average(ctx.current, *env.data, env.subset).total;
    result.s_es = predict(env.lre, pre);
    result.p_cur = ctx.current.param_count();
    const Targets targets = env.subset_targets();
    result.reward = tar(result.acc, result.s_es, static_cast<double>(result.p_cur), targets,
                        env.tar_cfg);
    result.feasible = (!uses_synops(env.tar_cfg.mode) || result.s_es <= *targets.s_target) &&
                      (!uses_params(env.tar_cfg.mode) ||
                       static_cast<double>(result.p_cur) <= *targets.p_target);
    traj.back().reward = result.reward;
    if (trajectory) *trajectory = std::move(traj);
    return result;
}

SearchOutcome run_search(const SearchEnv& env, DdpgAgent& agent, const SearchConfig& cfg) {
    require(cfg.episodes >= 1, "search.episodes must be >= 1");
    require(cfg.warmup_episodes >= 0 && cfg.warmup_episodes <= cfg.episodes,
            "search.warmup_episodes must not exceed search.episodes");

    SearchOutcome outcome;
    std::vector<Transition> traj;
    for (int episode = 1; episode <= cfg.episodes; ++episode) {
        const bool warmup = episode <= cfg.warmup_episodes;
        const auto mode = warmup ? DdpgAgent::ActMode::Warmup : DdpgAgent::ActMode::Explore;
        const double sigma = warmup ? agent.config().sigma0 : agent.noise().current();

        EpisodeResult res = run_episode(env, agent, mode, &traj);
        push_trajectory(agent.buffer(), traj);
        if (agent.buffer().size() >= static_cast<std::size_t>(agent.config().batch_size))
            for (int u = 0; u < agent.config().updates_per_episode; ++u) agent.update();
        if (!warmup) agent.noise().advance();

        SearchLogRow row;
        row.episode = episode;
        row.mode = warmup ? "warmup" : "explore";
        row.reward = res.reward;
        row.acc = res.acc;
        row.s_es_ratio = res.s_es / env.baselines.synops_subset;
        row.p_ratio = static_cast<double>(res.p_cur) / static_cast<double>(env.baselines.params);
        row.feasible = res.feasible;
        row.sigma = sigma;
        outcome.log.push_back(row);

        const bool better =
            episode == 1 || (res.feasible && !outcome.best.feasible) ||
            (res.feasible == outcome.best.feasible && res.reward > outcome.best.reward);
        if (better) outcome.best = res;
        outcome.any_feasible = outcome.any_feasible || res.feasible;
    }
    return outcome;
}

void write_search_log_csv(const std::filesystem::path& path,
                          const std::vector<SearchLogRow>& rows) {
    CsvTable table;
    table.header = {"episode", "mode", "reward", "acc", "s_es_ratio", "p_ratio", "feasible",
                    "sigma"};
    for (const SearchLogRow& r : rows)
        table.rows.push_back({std::to_string(r.episode), r.mode, format_double(r.reward),
                              format_double(r.acc), format_double(r.s_es_ratio),
                              format_double(r.p_ratio), r.feasible ? "1" : "0",
                              format_double(r.sigma)});
    write_csv(path, table);
}

std::pair<SpikingNetwork, FinalReport> finalize(const SearchEnv& env, const PruningPolicy& policy,
                                                const DatasetView& train_view,
                                                const TrainConfig& finetune_cfg) {
    auto [pruned, masks] = apply_policy(*env.base, policy);
    TrainResult ft = train(pruned, train_view, finetune_cfg);

    FinalReport report;
    report.acc = evaluate(ft.net, env.val);
    report.synops_abs =
        synops_average(ft.net, *env.data,
                       SubsetSpec::all(env.subset.seed, env.subset.include_encoder))
            .total;
    report.synops_ratio = report.synops_abs / env.baselines.synops_exact;
    report.params_abs = ft.net.param_count();
    report.params_ratio =
        static_cast<double>(report.params_abs) / static_cast<double>(env.baselines.params);
    const Targets targets = env.exact_targets();
    report.s_feasible = !uses_synops(env.tar_cfg.mode) || report.synops_abs <= *targets.s_target;
    report.p_feasible = !uses_params(env.tar_cfg.mode) ||
                        static_cast<double>(report.params_abs) <= *targets.p_target;
    return {std::move(ft.net), report};
}

void write_final_report_csv(const std::filesystem::path& path, const FinalReport& report) {
    CsvTable table;
    table.header = {"acc",          "synops_abs",  "synops_ratio", "params_abs",
                    "params_ratio", "s_feasible",  "p_feasible"};
    table.rows.push_back({format_double(report.acc), format_double(report.synops_abs),
                          format_double(report.synops_ratio), std::to_string(report.params_abs),
                          format_double(report.params_ratio), report.s_feasible ? "1" : "0",
                          report.p_feasible ? "1" : "0"});
    write_csv(path, table);
}

FinalReport load_final_report_csv(const std::filesystem::path& path) {
    CsvTable table = read_csv(path);
    if (table.rows.size() != 1 || table.rows[0].size() != 7)
        throw IoError("malformed final report: " + path.string());
    const auto& row = table.rows[0];
    FinalReport r;
    r.acc = std::stod(row[0]);
    r.synops_abs = std::stod(row[1]);
    r.synops_ratio = std::stod(row[2]);
    r.params_abs = std::stoll(row[3]);
    r.params_ratio = std::stod(row[4]);
    r.s_feasible = row[5] == "1";
    r.p_feasible = row[6] == "1";
    return r;
}

}  // namespace spikeprune
