#include <doctest.h>

#include "spikeprune/config.hpp"
#include "spikeprune/csv.hpp"
#include "test_helpers.hpp"

using namespace spikeprune;
using spikeprune::testing::scratch_dir;

TEST_CASE("defaults parse and validate") {
    RunConfig cfg = parse_config("");
    CHECK(cfg.seed == 42);
    CHECK(cfg.data.n_samples == 2000);
    CHECK(cfg.model.conv_channels == std::vector<int>{12, 24, 24});
    CHECK(cfg.targets.mode == "S");
    CHECK(cfg.targets.lambda == 1.0);
    CHECK(cfg.targets.alpha == 1.2);
    CHECK(cfg.agent.sigma0 == 0.5);
    CHECK(cfg.agent.sigma_decay == 0.98);
}

TEST_CASE("overrides, comments and whitespace are handled") {
    RunConfig cfg = parse_config(
        "# a comment\n"
        "seed = 7\n"
        "\n"
        "data.n_samples = 256   # trailing comment\n"
        "model.conv_channels = 4, 8 ,16\n"
        "targets.mode = SP\n"
        "synops.include_encoder = true\n"
        "agent.actor_lr = 5e-5\n");
    CHECK(cfg.seed == 7);
    CHECK(cfg.data.n_samples == 256);
    CHECK(cfg.model.conv_channels == std::vector<int>{4, 8, 16});
    CHECK(cfg.targets.mode == "SP");
    CHECK(cfg.synops.include_encoder);
    CHECK(cfg.agent.actor_lr == 5e-5);
}

TEST_CASE("unknown keys and malformed lines are rejected") {
    CHECK_THROWS_AS(parse_config("data.bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("nonsense.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("justakey = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("data.n_samples 100\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("data.n_samples = ten\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("synops.include_encoder = yes\n"), ConfigError);
}

namespace {

std::string message_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("each validation rule has its own message") {
    CHECK(message_of("targets.lambda = 0\n") == "targets.lambda must be > 0");
    CHECK(message_of("targets.alpha = -1\n") == "targets.alpha must be > 0");
    CHECK(message_of("targets.synops_ratio = 1.5\n") == "targets.synops_ratio must be in (0,1]");
    CHECK(message_of("targets.params_ratio = 0\n") == "targets.params_ratio must be in (0,1]");
    CHECK(message_of("search.warmup_episodes = 300\n") ==
          "search.warmup_episodes must be < search.episodes");
    CHECK(message_of("targets.mode = Q\n") == "targets.mode must be one of S, P, SP");
    CHECK(message_of("train.warmup_epochs = 99\n") ==
          "train.warmup_epochs must be < train.epochs");
    CHECK(message_of("model.tau = 1.0\n") == "model.tau must be > 1");
}

TEST_CASE("config loads from a file") {
    auto dir = scratch_dir("config");
    write_text_file(dir / "run.cfg", "seed = 123\ndata.classes = 3\n");
    RunConfig cfg = load_config(dir / "run.cfg");
    CHECK(cfg.seed == 123);
    CHECK(cfg.data.classes == 3);
    std::filesystem::remove_all(dir);
}
