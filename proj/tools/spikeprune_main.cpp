#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "spikeprune/commands.hpp"

using namespace spikeprune;

int main(int argc, char** argv) {
    CLI::App app{"SNN structured pruning: SynOps-budgeted channel search with a DDPG agent"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    app.add_option("--config", config_path, "configuration file (section.key = value lines)");
    app.add_option("--out", out_dir, "artifact directory")->capture_default_str();
    app.add_option("--seed", seed_override, "override the config's root seed");

    auto* gen = app.add_subcommand("gen-data", "write the synthetic SPKD dataset");
    auto* pretrain = app.add_subcommand("pretrain", "train the baseline spiking network");
    auto* lre = app.add_subcommand("lre", "fit the post-finetune SynOps estimator");
    auto* search = app.add_subcommand("search", "run the pruning-policy search");
    auto* finalize = app.add_subcommand("finalize", "prune, finetune and report the final model");
    auto* report = app.add_subcommand("report", "per-layer SynOps and parameter report");

    std::string policy_path;
    finalize->add_option("--policy", policy_path, "policy CSV (default: <out>/best_policy.csv)");
    std::string model_path;
    report->add_option("--model", model_path, "checkpoint to report on (default: <out>/model.spnn)");

    CLI11_PARSE(app, argc, argv);

    return run_with_exit_codes([&]() {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        cfg.validate();
        if (seed_override) cfg.seed = *seed_override;
        ArtifactPaths paths{out_dir};

        if (gen->parsed()) return cmd_gen_data(cfg, paths);
        if (pretrain->parsed()) return cmd_pretrain(cfg, paths);
        if (lre->parsed()) return cmd_lre(cfg, paths);
        if (search->parsed()) return cmd_search(cfg, paths);
        if (finalize->parsed()) {
            std::optional<std::filesystem::path> policy;
            if (!policy_path.empty()) policy = policy_path;
            return cmd_finalize(cfg, paths, policy);
        }
        if (report->parsed()) {
            std::optional<std::filesystem::path> model;
            if (!model_path.empty()) model = model_path;
            return cmd_report(cfg, paths, model);
        }
        return kExitError;
    });
}
