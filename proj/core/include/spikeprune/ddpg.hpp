#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "spikeprune/mlp.hpp"
#include "spikeprune/rng.hpp"

namespace spikeprune {

inline constexpr int kStateDim = 10;

using StateVec = std::array<double, kStateDim>;

// One step of an episode. Only the terminal step carries the episode reward;
// earlier steps must have reward 0.
struct Transition {
    StateVec state{};
    double action = 0.0;
    double reward = 0.0;
    StateVec next_state{};  // zeros when terminal
    bool terminal = false;
};

// FIFO ring of transitions; batches are sampled without replacement.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity);

    std::size_t size() const { return buf_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return buf_[i]; }

    void push(const Transition& t);
    std::vector<std::size_t> sample_indices(Rng& rng, std::size_t batch) const;

  private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> buf_;
};

// Validates the episode shape (exactly the last transition terminal, zero
// intermediate rewards, states and actions in range) and appends in order.
void push_trajectory(ReplayBuffer& buffer, std::span<const Transition> trajectory);

// Exploration stddev: sigma0 * decay^k where k counts episodes elapsed since
// the warmup phase ended.
struct NoiseSchedule {
    double sigma0 = 0.5;
    double decay = 0.98;
    std::int64_t k = 0;

    double current() const { return sigma0 * std::pow(decay, static_cast<double>(k)); }
    void advance() { ++k; }
};

// Rejection sampling of Normal(mu, sigma) restricted to [lo, hi). Throws if
// the acceptance probability is below 1e-6.
double truncated_normal(Rng& rng, double mu, double sigma, double lo = 0.0, double hi = 1.0);

struct DdpgConfig {
    int hidden = 64;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double tau = 0.01;
    double gamma = 1.0;  // episodes are short and only the last step pays out
    int batch_size = 64;
    int capacity = 2000;
    int updates_per_episode = 32;
    double sigma0 = 0.5;
    double sigma_decay = 0.98;
    std::uint64_t seed = 0;
};

// Actor-critic pair with target networks, replay and truncated-normal
// exploration. Owns its RNG; episodes must be generated sequentially.
class DdpgAgent {
  public:
    enum class ActMode { Warmup, Explore, Exploit };

    explicit DdpgAgent(const DdpgConfig& cfg);

    double act(const StateVec& state, ActMode mode);

    struct UpdateLosses {
        double critic = 0.0;
        double actor = 0.0;
    };
    // One batch gradient step on critic and actor plus soft target updates.
    // Returns nothing (with a warning) when the buffer is still too small.
    std::optional<UpdateLosses> update();

    ReplayBuffer& buffer() { return buffer_; }
    NoiseSchedule& noise() { return noise_; }
    const DdpgConfig& config() const { return cfg_; }
    const MlpNet& actor() const { return actor_; }
    const MlpNet& critic() const { return critic_; }
    MlpNet& mutable_critic_target() { return critic_target_; }

    // Checkpoint blob: magic "SPAG", version, layer sizes, then f32 weights
    // of actor, actor target, critic, critic target.
    void save(const std::filesystem::path& path) const;
    static DdpgAgent load(const std::filesystem::path& path, const DdpgConfig& cfg);

  private:
    DdpgConfig cfg_;
    MlpNet actor_, critic_, actor_target_, critic_target_;
    AdamState actor_opt_, critic_opt_;
    ReplayBuffer buffer_;
    NoiseSchedule noise_;
    Rng rng_;
};

}  // namespace spikeprune
