#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>

#include "spikeprune/config.hpp"

namespace spikeprune {

// Process exit codes shared by the CLI and the command functions.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMissingArtifact = 2;
inline constexpr int kExitNoFeasible = 3;
inline constexpr int kExitConfig = 4;

// Fixed artifact names inside the output directory.
struct ArtifactPaths {
    std::filesystem::path dir = "out";

    std::filesystem::path dataset() const { return dir / "dataset.spkd"; }
    std::filesystem::path model() const { return dir / "model.spnn"; }
    std::filesystem::path lre_points() const { return dir / "lre_points.csv"; }
    std::filesystem::path lre_model() const { return dir / "lre_model.txt"; }
    std::filesystem::path best_policy() const { return dir / "best_policy.csv"; }
    std::filesystem::path search_log() const { return dir / "search_log.csv"; }
    std::filesystem::path agent() const { return dir / "agent.spag"; }
    std::filesystem::path final_model() const { return dir / "final_model.spnn"; }
    std::filesystem::path final_report() const { return dir / "final_report.csv"; }
    std::filesystem::path synops_report() const { return dir / "synops_report.csv"; }
};

// Pipeline stages. Each returns an exit code; contract/IO problems surface
// as the typed exceptions from errors.hpp.
int cmd_gen_data(const RunConfig& cfg, const ArtifactPaths& paths);
int cmd_pretrain(const RunConfig& cfg, const ArtifactPaths& paths);
int cmd_lre(const RunConfig& cfg, const ArtifactPaths& paths);
int cmd_search(const RunConfig& cfg, const ArtifactPaths& paths);
int cmd_finalize(const RunConfig& cfg, const ArtifactPaths& paths,
                 const std::optional<std::filesystem::path>& policy_path = std::nullopt);
int cmd_report(const RunConfig& cfg, const ArtifactPaths& paths,
               const std::optional<std::filesystem::path>& model_path = std::nullopt);

// Runs a command functor, translating exceptions into exit codes and stderr
// messages (E_CONFIG, E_MISSING_ARTIFACT, ...).
template <typename Fn>
int run_with_exit_codes(Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: E_CONFIG: %s\n", e.what());
        return kExitConfig;
    } catch (const MissingArtifactError& e) {
        std::fprintf(stderr, "error: E_MISSING_ARTIFACT: %s\n", e.what());
        return kExitMissingArtifact;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
}

}  // namespace spikeprune
