#include "spikeprune/ddpg.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>

namespace spikeprune {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity >= 1, "replay capacity must be >= 1");
    buf_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& t) {
    if (buf_.size() < capacity_) {
        buf_.push_back(t);
    } else {
        buf_[head_] = t;  // overwrite oldest
        head_ = (head_ + 1) % capacity_;
    }
}

std::vector<std::size_t> ReplayBuffer::sample_indices(Rng& rng, std::size_t batch) const {
    require(batch >= 1 && batch <= buf_.size(), "batch larger than buffer");
    // Partial Fisher-Yates: first `batch` entries of a shuffled index range.
    std::vector<std::size_t> idx(buf_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < batch; ++i) {
        std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(batch);
    return idx;
}

void push_trajectory(ReplayBuffer& buffer, std::span<const Transition> trajectory) {
    require(!trajectory.empty(), "push_trajectory: empty trajectory");
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        const Transition& t = trajectory[i];
        const bool last = i + 1 == trajectory.size();
        require(t.terminal == last, "push_trajectory: terminal flag must mark exactly the last step");
        if (!last) require(t.reward == 0.0, "push_trajectory: non-terminal reward must be zero");
        require(t.action >= 0.0 && t.action < 1.0, "push_trajectory: action outside [0,1)");
        for (double v : t.state)
            require(v >= 0.0 && v <= 1.0, "push_trajectory: state entry outside [0,1]");
        for (double v : t.next_state)
            require(v >= 0.0 && v <= 1.0, "push_trajectory: next state entry outside [0,1]");
    }
    for (const Transition& t : trajectory) buffer.push(t);
}

double truncated_normal(Rng& rng, double mu, double sigma, double lo, double hi) {
    require(sigma > 0.0, "truncated_normal: sigma must be positive");
    require(lo < hi, "truncated_normal: lo must be < hi");
    const double p_accept = normal_cdf((hi - mu) / sigma) - normal_cdf((lo - mu) / sigma);
    if (p_accept < 1e-6)
        throw ContractError("truncated_normal: acceptance probability below 1e-6");
    for (;;) {
        double x = mu + sigma * gaussian(rng);
        if (x >= lo && x < hi) return x;
    }
}

DdpgAgent::DdpgAgent(const DdpgConfig& cfg)
    : cfg_(cfg),
      actor_(MlpNet{}),
      critic_(MlpNet{}),
      actor_target_(MlpNet{}),
      critic_target_(MlpNet{}),
      buffer_(static_cast<std::size_t>(cfg.capacity)),
      rng_(cfg.seed) {
    require(cfg.hidden >= 1, "agent.hidden must be >= 1");
    require(cfg.actor_lr > 0.0 && cfg.critic_lr > 0.0, "agent learning rates must be positive");
    require(cfg.tau > 0.0 && cfg.tau <= 1.0, "agent.tau must be in (0,1]");
    require(cfg.batch_size >= 1, "agent.batch_size must be >= 1");
    require(cfg.sigma0 > 0.0 && cfg.sigma_decay > 0.0 && cfg.sigma_decay <= 1.0,
            "bad exploration schedule");
    actor_ = MlpNet::make({kStateDim, cfg.hidden, cfg.hidden, 1}, MlpNet::Output::Squashed, rng_);
    critic_ =
        MlpNet::make({kStateDim + 1, cfg.hidden, cfg.hidden, 1}, MlpNet::Output::Linear, rng_);
    actor_target_ = actor_;
    critic_target_ = critic_;
    actor_opt_ = AdamState::like(actor_);
    critic_opt_ = AdamState::like(critic_);
    noise_.sigma0 = cfg.sigma0;
    noise_.decay = cfg.sigma_decay;
}

double DdpgAgent::act(const StateVec& state, ActMode mode) {
    switch (mode) {
        case ActMode::Warmup:
            // Blind phase: the actor is ignored, coverage comes from a
            // centered truncated normal.
            return truncated_normal(rng_, 0.5, cfg_.sigma0);
        case ActMode::Explore: {
            double mu = actor_.forward(state);
            return truncated_normal(rng_, mu, noise_.current());
        }
        case ActMode::Exploit:
            return actor_.forward(state);
    }
    throw ContractError("act: unknown mode");
}

std::optional<DdpgAgent::UpdateLosses> DdpgAgent::update() {
    if (buffer_.size() < static_cast<std::size_t>(cfg_.batch_size)) {
        std::cerr << "warning: replay buffer smaller than batch, skipping update\n";
        return std::nullopt;
    }
    const auto idx = buffer_.sample_indices(rng_, static_cast<std::size_t>(cfg_.batch_size));
    const double inv_b = 1.0 / static_cast<double>(idx.size());

    // Critic: minimize squared TD error against the target pair.
    MlpNet::Grads critic_grads = MlpNet::Grads::like(critic_);
    std::vector<double> sa(kStateDim + 1);
    MlpNet::Trace trace;
    double critic_loss = 0.0;
    for (std::size_t i : idx) {
        const Transition& t = buffer_[i];
        double y = t.reward;
        if (!t.terminal) {
            double a_next = actor_target_.forward(t.next_state);
            std::vector<double> sa_next(t.next_state.begin(), t.next_state.end());
            sa_next.push_back(a_next);
            y += cfg_.gamma * critic_target_.forward(sa_next);
        }
        std::copy(t.state.begin(), t.state.end(), sa.begin());
        sa[kStateDim] = t.action;
        double q = critic_.forward(sa, &trace);
        double err = q - y;
        critic_loss += err * err * inv_b;
        critic_.backward(trace, 2.0 * err * inv_b, critic_grads);
    }
    adam_step(critic_, critic_grads, critic_opt_, cfg_.critic_lr);

    // Actor: ascend Q(s, pi(s)); the critic is frozen for this pass.
    MlpNet::Grads actor_grads = MlpNet::Grads::like(actor_);
    MlpNet::Grads critic_scratch = MlpNet::Grads::like(critic_);
    MlpNet::Trace actor_trace;
    std::vector<double> dsa;
    double actor_loss = 0.0;
    for (std::size_t i : idx) {
        const Transition& t = buffer_[i];
        double a = actor_.forward(t.state, &actor_trace);
        std::copy(t.state.begin(), t.state.end(), sa.begin());
        sa[kStateDim] = a;
        double q = critic_.forward(sa, &trace);
        actor_loss -= q * inv_b;
        critic_.backward(trace, -inv_b, critic_scratch, &dsa);
        actor_.backward(actor_trace, dsa[kStateDim], actor_grads);
    }
    adam_step(actor_, actor_grads, actor_opt_, cfg_.actor_lr);

    soft_update(actor_target_, actor_, cfg_.tau);
    soft_update(critic_target_, critic_, cfg_.tau);
    return UpdateLosses{critic_loss, actor_loss};
}

namespace {

constexpr char kMagic[4] = {'S', 'P', 'A', 'G'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t get_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_net_weights(std::ofstream& f, const MlpNet& net) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (double w : net.weights[l].data) {
            float v = static_cast<float>(w);
            f.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
        for (double b : net.biases[l].data) {
            float v = static_cast<float>(b);
            f.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }
}

void read_net_weights(std::ifstream& f, MlpNet& net) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (double& w : net.weights[l].data) {
            float v = 0;
            f.read(reinterpret_cast<char*>(&v), sizeof(v));
            w = v;
        }
        for (double& b : net.biases[l].data) {
            float v = 0;
            f.read(reinterpret_cast<char*>(&v), sizeof(v));
            b = v;
        }
    }
}

}  // namespace

void DdpgAgent::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(kMagic, 4);
    put_u32(f, kVersion);
    put_u32(f, static_cast<std::uint32_t>(actor_.sizes.size()));
    for (int s : actor_.sizes) put_u32(f, static_cast<std::uint32_t>(s));
    put_u32(f, static_cast<std::uint32_t>(critic_.sizes.size()));
    for (int s : critic_.sizes) put_u32(f, static_cast<std::uint32_t>(s));
    write_net_weights(f, actor_);
    write_net_weights(f, actor_target_);
    write_net_weights(f, critic_);
    write_net_weights(f, critic_target_);
    if (!f) throw IoError("write failed: " + path.string());
}

DdpgAgent DdpgAgent::load(const std::filesystem::path& path, const DdpgConfig& cfg) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not an SPAG checkpoint: " + path.string());
    if (get_u32(f) != kVersion) throw IoError("unsupported SPAG version in " + path.string());

    DdpgAgent agent(cfg);
    auto read_sizes = [&f, &path]() {
        std::vector<int> sizes(get_u32(f));
        for (int& s : sizes) s = static_cast<int>(get_u32(f));
        if (!f) throw IoError("truncated SPAG checkpoint: " + path.string());
        return sizes;
    };
    if (read_sizes() != agent.actor_.sizes || read_sizes() != agent.critic_.sizes)
        throw IoError("SPAG layer sizes do not match the configured agent");
    read_net_weights(f, agent.actor_);
    read_net_weights(f, agent.actor_target_);
    read_net_weights(f, agent.critic_);
    read_net_weights(f, agent.critic_target_);
    if (!f) throw IoError("truncated SPAG checkpoint: " + path.string());
    return agent;
}

}  // namespace spikeprune
