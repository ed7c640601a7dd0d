#include <doctest.h>

#include <cmath>

#include "spikeprune/csv.hpp"
#include "spikeprune/search.hpp"
#include "test_helpers.hpp"

using namespace spikeprune;
using spikeprune::testing::scratch_dir;

namespace {

// 0.5^1.2 evaluated with an independent high-precision tool.
constexpr double kHalfPow12 = 0.43527528164806206;

struct MicroWorld {
    Dataset data;
    SpikingNetwork net;
    DatasetView train;
    DatasetView val;
};

MicroWorld make_world(std::uint64_t seed = 3, int conv1 = 5, int conv2 = 6) {
    MicroWorld w;
    SyntheticDatasetSpec spec;
    spec.n_samples = 64;
    spec.n_classes = 2;
    spec.height = 8;
    spec.width = 8;
    spec.seed = seed;
    w.data = generate_dataset(spec);
    NetworkArch arch;
    arch.conv_channels = {conv1, conv2};
    arch.timesteps = 2;
    Rng rng(seed + 100);
    w.net = make_network(arch, {2, 8, 8}, 2, rng);
    auto [t, v] = train_val_split(w.data, 0.25);
    w.train = t;
    w.val = v;
    return w;
}

SearchEnv micro_env(const MicroWorld& w, RewardMode mode = RewardMode::SynOps,
                    double s_ratio = 0.7, double p_ratio = 0.7) {
    SubsetSpec subset;
    subset.size = 16;
    LreModel lre{0.9, 0.0, 0.0, 1.0};
    TargetRatios ratios;
    if (mode != RewardMode::Params) ratios.synops = s_ratio;
    if (mode != RewardMode::SynOps) ratios.params = p_ratio;
    TarConfig tar_cfg;
    tar_cfg.mode = mode;
    return make_search_env(w.net, w.data, w.val, subset, lre, ratios, tar_cfg);
}

DdpgAgent micro_agent(std::uint64_t seed = 5) {
    DdpgConfig cfg;
    cfg.hidden = 12;
    cfg.batch_size = 8;
    cfg.capacity = 128;
    cfg.updates_per_episode = 2;
    cfg.seed = seed;
    return DdpgAgent(cfg);
}

}  // namespace

TEST_CASE("penalty_f matches hand-evaluated values") {
    CHECK(penalty_f(100.0, 100.0) == 0.0);
    CHECK(penalty_f(50.0, 100.0) == 0.0);  // under target, zero exactly
    CHECK(penalty_f(200.0, 100.0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(penalty_f(150.0, 100.0) == doctest::Approx(-kHalfPow12).epsilon(1e-13));
    CHECK(penalty_f(150.0, 100.0, 2.0, 1.2) ==
          doctest::Approx(-2.0 * kHalfPow12).epsilon(1e-13));
    CHECK_THROWS_AS(penalty_f(1.0, 0.0), ContractError);
}

TEST_CASE("penalty_f is continuous at the target and non-increasing in t") {
    CHECK(std::abs(penalty_f(100.0 + 1e-9, 100.0)) < 1e-8);
    double prev = penalty_f(150.0, 200.0);
    for (double t : {180.0, 150.0, 120.0, 100.0, 80.0}) {
        double cur = penalty_f(150.0, t);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
}

TEST_CASE("tar composes accuracy with mode-specific penalties") {
    Targets targets{1000.0, 5000.0};
    TarConfig s_cfg{1.0, 1.2, RewardMode::SynOps};
    TarConfig p_cfg{1.0, 1.2, RewardMode::Params};
    TarConfig sp_cfg{1.0, 1.2, RewardMode::Both};

    CHECK(tar(0.8, 900.0, 4000.0, targets, sp_cfg) == 0.8);  // both under target
    CHECK(tar(0.9, 1500.0, 0.0, targets, s_cfg) ==
          doctest::Approx(0.9 - kHalfPow12).epsilon(1e-13));
    CHECK(tar(1.0, 2000.0, 10000.0, targets, sp_cfg) == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(tar(0.9, 0.0, 7500.0, targets, p_cfg) ==
          doctest::Approx(0.9 - kHalfPow12).epsilon(1e-13));

    Targets missing{std::nullopt, 5000.0};
    CHECK_THROWS_AS(tar(0.5, 1.0, 1.0, missing, s_cfg), ConfigError);
    CHECK_THROWS_AS(tar(1.5, 1.0, 1.0, targets, s_cfg), ContractError);
}

TEST_CASE("tar is strictly increasing in accuracy and scale invariant") {
    Targets targets{1000.0, std::nullopt};
    TarConfig cfg{1.0, 1.2, RewardMode::SynOps};
    double prev = tar(0.0, 1200.0, 0.0, targets, cfg);
    for (double acc : {0.2, 0.4, 0.6, 0.8, 1.0}) {
        double cur = tar(acc, 1200.0, 0.0, targets, cfg);
        CHECK(cur > prev);
        prev = cur;
    }
    for (double c : {0.5, 2.0, 1000.0}) {
        Targets scaled{1000.0 * c, std::nullopt};
        CHECK(tar(0.7, 1234.0 * c, 0.0, scaled, cfg) == tar(0.7, 1234.0, 0.0, targets, cfg));
    }
}

TEST_CASE("featurize produces normalized state vectors") {
    MicroWorld w = make_world();
    SearchEnv env = micro_env(w);
    EpisodeContext ctx = make_episode_context(env);

    StateVec s1 = featurize(ctx, 1, 0.0, env.lre);
    for (double v : s1) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(s1[9] == 0.0);  // a_prev of the first layer
    // identity-ish LRE (w=0.9, b=0): S_es feature = 0.9 at the unpruned start
    CHECK(s1[6] == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(s1[7] == doctest::Approx(1.0));  // full parameter budget

    double p_cur_before = s1[7];
    prune_next_layer(ctx, 0.5);
    StateVec s2 = featurize(ctx, 2, 0.5, env.lre);
    CHECK(s2[7] < p_cur_before);  // params strictly decrease
    CHECK(s2[9] == 0.5);
    CHECK(s2[0] == 1.0);  // second of two prunable layers

    CHECK_THROWS_AS(featurize(ctx, 1, 0.0, env.lre), ContractError);
}

TEST_CASE("run_episode assembles a valid trajectory with the reward at the end") {
    MicroWorld w = make_world();
    SearchEnv env = micro_env(w);
    DdpgAgent agent = micro_agent();
    std::vector<Transition> traj;
    EpisodeResult res = run_episode(env, agent, DdpgAgent::ActMode::Warmup, &traj);

    REQUIRE(traj.size() == static_cast<std::size_t>(w.net.n_prunable()));
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        CHECK(traj[i].reward == 0.0);
        CHECK(!traj[i].terminal);
    }
    CHECK(traj.back().terminal);
    CHECK(traj.back().reward == res.reward);
    CHECK(res.policy.ratios.size() == traj.size());

    // reward invariant: recompute from the episode's own numbers
    double expect = tar(res.acc, res.s_es, static_cast<double>(res.p_cur), env.subset_targets(),
                        env.tar_cfg);
    CHECK(res.reward == expect);
}

TEST_CASE("exploit episodes are deterministic for a frozen agent") {
    MicroWorld w = make_world();
    SearchEnv env = micro_env(w);
    DdpgAgent agent = micro_agent();
    EpisodeResult a = run_episode(env, agent, DdpgAgent::ActMode::Exploit);
    EpisodeResult b = run_episode(env, agent, DdpgAgent::ActMode::Exploit);
    CHECK(a.policy.ratios == b.policy.ratios);
    CHECK(a.reward == b.reward);
    CHECK(a.acc == b.acc);
}

TEST_CASE("run_search logs every episode and tracks a feasible best") {
    MicroWorld w = make_world();
    SearchEnv env = micro_env(w, RewardMode::SynOps, 0.95);
    DdpgAgent agent = micro_agent();
    SearchConfig cfg;
    cfg.episodes = 8;
    cfg.warmup_episodes = 3;
    SearchOutcome out = run_search(env, agent, cfg);

    REQUIRE(out.log.size() == 8);
    for (int e = 0; e < 8; ++e) {
        CHECK(out.log[e].episode == e + 1);
        CHECK(out.log[e].mode == (e < 3 ? "warmup" : "explore"));
    }
    // sigma column: 0.5 during warmup, then 0.5 * 0.98^k
    for (int e = 0; e < 3; ++e) CHECK(out.log[e].sigma == 0.5);
    for (int e = 3; e < 8; ++e)
        CHECK(out.log[e].sigma == 0.5 * std::pow(0.98, static_cast<double>(e - 3)));

    double best_warmup = -1e9, best_all = -1e9;
    bool best_feasible_seen = false;
    for (const auto& row : out.log) {
        best_all = std::max(best_all, row.reward);
        if (row.mode == "warmup") best_warmup = std::max(best_warmup, row.reward);
        best_feasible_seen = best_feasible_seen || row.feasible;
    }
    CHECK(best_all >= best_warmup);
    CHECK(out.any_feasible == best_feasible_seen);
    if (!out.any_feasible) CHECK(out.best.reward == best_all);
}

TEST_CASE("run_search is reproducible end to end") {
    MicroWorld w = make_world();
    SearchEnv env = micro_env(w);
    SearchConfig cfg;
    cfg.episodes = 6;
    cfg.warmup_episodes = 2;
    DdpgAgent a1 = micro_agent(9);
    DdpgAgent a2 = micro_agent(9);
    SearchOutcome o1 = run_search(env, a1, cfg);
    SearchOutcome o2 = run_search(env, a2, cfg);
    CHECK(o1.best.policy.ratios == o2.best.policy.ratios);
    CHECK(o1.best.reward == o2.best.reward);
    for (std::size_t i = 0; i < o1.log.size(); ++i)
        CHECK(o1.log[i].reward == o2.log[i].reward);
}

TEST_CASE("search log CSV round-trips row count and sigma precision") {
    MicroWorld w = make_world();
    SearchEnv env = micro_env(w);
    DdpgAgent agent = micro_agent();
    SearchConfig cfg;
    cfg.episodes = 5;
    cfg.warmup_episodes = 2;
    SearchOutcome out = run_search(env, agent, cfg);
    auto dir = scratch_dir("searchlog");
    write_search_log_csv(dir / "log.csv", out.log);
    CsvTable table = read_csv(dir / "log.csv");
    CHECK(table.header == std::vector<std::string>{"episode", "mode", "reward", "acc",
                                                   "s_es_ratio", "p_ratio", "feasible", "sigma"});
    REQUIRE(table.rows.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(std::stod(table.rows[i][7]) == out.log[i].sigma);
    std::filesystem::remove_all(dir);
}

TEST_CASE("finalize with the identity policy and no finetune reports the baseline") {
    MicroWorld w = make_world();
    SearchEnv env = micro_env(w, RewardMode::Both, 1.0, 1.0);
    TrainConfig ft;
    ft.epochs = 0;
    auto [net, report] = finalize(env, PruningPolicy::zeros(w.net.n_prunable()), w.train, ft);
    CHECK(report.synops_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.params_ratio == 1.0);
    CHECK(report.acc == evaluate(w.net, w.val));
    CHECK(report.s_feasible);
    CHECK(report.p_feasible);

    auto dir = scratch_dir("finalreport");
    write_final_report_csv(dir / "report.csv", report);
    FinalReport back = load_final_report_csv(dir / "report.csv");
    CHECK(back.acc == report.acc);
    CHECK(back.synops_abs == report.synops_abs);
    CHECK(back.params_abs == report.params_abs);
    CHECK(back.s_feasible == report.s_feasible);
    std::filesystem::remove_all(dir);
}

TEST_CASE("reward mode parsing") {
    CHECK(parse_reward_mode("S") == RewardMode::SynOps);
    CHECK(parse_reward_mode("P") == RewardMode::Params);
    CHECK(parse_reward_mode("SP") == RewardMode::Both);
    CHECK_THROWS_AS(parse_reward_mode("X"), ConfigError);
    CHECK(reward_mode_name(RewardMode::Both) == "SP");
}
