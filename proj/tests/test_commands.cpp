#include <doctest.h>

#include "spikeprune/commands.hpp"
#include "spikeprune/csv.hpp"
#include "spikeprune/lre.hpp"
#include "spikeprune/search.hpp"
#include "test_helpers.hpp"

using namespace spikeprune;
using spikeprune::testing::scratch_dir;

namespace {

// Everything tiny: the full pipeline in a couple of seconds.
RunConfig micro_config() {
    return parse_config(
        "seed = 42\n"
        "data.n_samples = 64\n"
        "data.classes = 2\n"
        "data.height = 8\n"
        "data.width = 8\n"
        "data.separation = 4.0\n"
        "data.noise = 0.3\n"
        "data.val_fraction = 0.25\n"
        "model.conv_channels = 5,6\n"
        "model.timesteps = 2\n"
        "train.epochs = 2\n"
        "train.warmup_epochs = 1\n"
        "train.batch_size = 16\n"
        "synops.subset_size = 16\n"
        "lre.n_policies = 4\n"
        "lre.finetune_epochs = 1\n"
        "agent.hidden = 12\n"
        "agent.batch_size = 8\n"
        "agent.capacity = 128\n"
        "agent.updates_per_episode = 2\n"
        "search.episodes = 6\n"
        "search.warmup_episodes = 2\n"
        "search.finetune_epochs = 1\n"
        "targets.mode = S\n"
        "targets.synops_ratio = 0.95\n");
}

}  // namespace

TEST_CASE("pipeline stages demand their inputs (exit code 2)") {
    auto dir = scratch_dir("cmd_missing");
    ArtifactPaths paths{dir};
    RunConfig cfg = micro_config();
    CHECK(run_with_exit_codes([&] { return cmd_pretrain(cfg, paths); }) == kExitMissingArtifact);
    CHECK(run_with_exit_codes([&] { return cmd_lre(cfg, paths); }) == kExitMissingArtifact);
    CHECK(run_with_exit_codes([&] { return cmd_search(cfg, paths); }) == kExitMissingArtifact);
    CHECK(run_with_exit_codes([&] { return cmd_finalize(cfg, paths, std::nullopt); }) ==
          kExitMissingArtifact);
    // config errors map to exit code 4
    CHECK(run_with_exit_codes([]() -> int { throw ConfigError("boom"); }) == kExitConfig);
}

TEST_CASE("micro pipeline runs end to end with reproducible artifacts") {
    auto dir = scratch_dir("cmd_pipeline");
    ArtifactPaths paths{dir};
    RunConfig cfg = micro_config();

    CHECK(cmd_gen_data(cfg, paths) == kExitOk);
    std::string dataset_bytes = read_text_file(paths.dataset());
    CHECK(cmd_gen_data(cfg, paths) == kExitOk);  // idempotent
    CHECK(read_text_file(paths.dataset()) == dataset_bytes);

    CHECK(cmd_pretrain(cfg, paths) == kExitOk);
    CHECK(std::filesystem::exists(paths.model()));
    std::string model_bytes = read_text_file(paths.model());
    CHECK(cmd_pretrain(cfg, paths) == kExitOk);
    CHECK(read_text_file(paths.model()) == model_bytes);

    CHECK(cmd_lre(cfg, paths) == kExitOk);
    CHECK(std::filesystem::exists(paths.lre_points()));
    LreArtifact artifact = load_lre_model(paths.lre_model());
    CHECK(artifact.subset_size == 16);

    int search_rc = cmd_search(cfg, paths);
    CHECK((search_rc == kExitOk || search_rc == kExitNoFeasible));
    CHECK(std::filesystem::exists(paths.best_policy()));
    CHECK(std::filesystem::exists(paths.agent()));
    CsvTable log = read_csv(paths.search_log());
    CHECK(log.rows.size() == 6);

    CHECK(cmd_finalize(cfg, paths, std::nullopt) == kExitOk);
    FinalReport report = load_final_report_csv(paths.final_report());
    CHECK(report.params_abs > 0);
    CHECK(std::filesystem::exists(paths.final_model()));
    // final model is loadable on its own
    SpikingNetwork compressed = load_network(paths.final_model());
    compressed.validate();

    CHECK(cmd_report(cfg, paths, std::nullopt) == kExitOk);
    CsvTable synops_table = read_csv(paths.synops_report());
    CHECK(synops_table.rows.back()[0] == "TOTAL");

    std::filesystem::remove_all(dir);
}

TEST_CASE("lre points CSV agrees with an external recomputation of r2") {
    auto dir = scratch_dir("cmd_lre_check");
    ArtifactPaths paths{dir};
    RunConfig cfg = micro_config();
    REQUIRE(cmd_gen_data(cfg, paths) == kExitOk);
    REQUIRE(cmd_pretrain(cfg, paths) == kExitOk);
    REQUIRE(cmd_lre(cfg, paths) == kExitOk);

    auto points = load_lre_points_csv(paths.lre_points());
    LreArtifact artifact = load_lre_model(paths.lre_model());
    const int n_holdout = std::max(1, static_cast<int>(points.size() / 4));
    const int n_fit = static_cast<int>(points.size()) - n_holdout;
    LreModel refit = fit(std::span<const LrePoint>(points.data(), n_fit));
    CHECK(refit.w == doctest::Approx(artifact.model.w).epsilon(1e-12));
    CHECK(refit.b == doctest::Approx(artifact.model.b).epsilon(1e-9));
    CHECK(refit.r2 == doctest::Approx(artifact.model.r2).epsilon(1e-12));
    std::filesystem::remove_all(dir);
}
