#include "spikeprune/config.hpp"

#include <algorithm>
#include <sstream>

#include "spikeprune/csv.hpp"

namespace spikeprune {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects an integer, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects an unsigned integer, got '" + value + "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config: " + key + " expects true or false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::string cur;
    std::istringstream ss(value);
    while (std::getline(ss, cur, ','))
        out.push_back(static_cast<int>(parse_int(key, trim(cur))));
    if (out.empty()) throw ConfigError("config: " + key + " expects a comma-separated list");
    return out;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "seed") {
        cfg.seed = parse_u64(key, value);
        return;
    }
    auto dot = key.find('.');
    if (dot == std::string::npos)
        throw ConfigError("config: unknown key '" + key + "' (expected section.key)");
    const std::string section = key.substr(0, dot);
    const std::string name = key.substr(dot + 1);

    if (section == "data") {
        auto& d = cfg.data;
        if (name == "n_samples") d.n_samples = static_cast<int>(parse_int(key, value));
        else if (name == "classes") d.classes = static_cast<int>(parse_int(key, value));
        else if (name == "channels") d.channels = static_cast<int>(parse_int(key, value));
        else if (name == "height") d.height = static_cast<int>(parse_int(key, value));
        else if (name == "width") d.width = static_cast<int>(parse_int(key, value));
        else if (name == "separation") d.separation = parse_real(key, value);
        else if (name == "noise") d.noise = parse_real(key, value);
        else if (name == "val_fraction") d.val_fraction = parse_real(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    } else if (section == "model") {
        auto& m = cfg.model;
        if (name == "conv_channels") m.conv_channels = parse_int_list(key, value);
        else if (name == "kernel") m.kernel = static_cast<int>(parse_int(key, value));
        else if (name == "stride") m.stride = static_cast<int>(parse_int(key, value));
        else if (name == "padding") m.padding = static_cast<int>(parse_int(key, value));
        else if (name == "timesteps") m.timesteps = static_cast<int>(parse_int(key, value));
        else if (name == "v_threshold") m.v_threshold = parse_real(key, value);
        else if (name == "tau") m.tau = parse_real(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    } else if (section == "train") {
        auto& t = cfg.train;
        if (name == "epochs") t.epochs = static_cast<int>(parse_int(key, value));
        else if (name == "warmup_epochs") t.warmup_epochs = static_cast<int>(parse_int(key, value));
        else if (name == "max_lr") t.max_lr = parse_real(key, value);
        else if (name == "momentum") t.momentum = parse_real(key, value);
        else if (name == "weight_decay") t.weight_decay = parse_real(key, value);
        else if (name == "batch_size") t.batch_size = static_cast<int>(parse_int(key, value));
        else if (name == "surrogate_alpha") t.surrogate_alpha = parse_real(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    } else if (section == "synops") {
        auto& s = cfg.synops;
        if (name == "subset_size") s.subset_size = parse_int(key, value);
        else if (name == "subset_seed") s.subset_seed = parse_u64(key, value);
        else if (name == "include_encoder") s.include_encoder = parse_bool(key, value);
        else if (name == "calibration_tolerance") s.calibration_tolerance = parse_real(key, value);
        else if (name == "calibration_step") s.calibration_step = parse_int(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    } else if (section == "lre") {
        auto& l = cfg.lre;
        if (name == "n_policies") l.n_policies = static_cast<int>(parse_int(key, value));
        else if (name == "holdout_fraction") l.holdout_fraction = parse_real(key, value);
        else if (name == "max_ratio") l.max_ratio = parse_real(key, value);
        else if (name == "finetune_epochs") l.finetune_epochs = static_cast<int>(parse_int(key, value));
        else throw ConfigError("config: unknown key '" + key + "'");
    } else if (section == "agent") {
        auto& a = cfg.agent;
        if (name == "hidden") a.hidden = static_cast<int>(parse_int(key, value));
        else if (name == "actor_lr") a.actor_lr = parse_real(key, value);
        else if (name == "critic_lr") a.critic_lr = parse_real(key, value);
        else if (name == "tau") a.tau = parse_real(key, value);
        else if (name == "batch_size") a.batch_size = static_cast<int>(parse_int(key, value));
        else if (name == "capacity") a.capacity = static_cast<int>(parse_int(key, value));
        else if (name == "updates_per_episode")
            a.updates_per_episode = static_cast<int>(parse_int(key, value));
        else if (name == "sigma0") a.sigma0 = parse_real(key, value);
        else if (name == "sigma_decay") a.sigma_decay = parse_real(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    } else if (section == "search") {
        auto& s = cfg.search;
        if (name == "episodes") s.episodes = static_cast<int>(parse_int(key, value));
        else if (name == "warmup_episodes")
            s.warmup_episodes = static_cast<int>(parse_int(key, value));
        else if (name == "finetune_epochs")
            s.finetune_epochs = static_cast<int>(parse_int(key, value));
        else throw ConfigError("config: unknown key '" + key + "'");
    } else if (section == "targets") {
        auto& t = cfg.targets;
        if (name == "mode") t.mode = value;
        else if (name == "synops_ratio") t.synops_ratio = parse_real(key, value);
        else if (name == "params_ratio") t.params_ratio = parse_real(key, value);
        else if (name == "lambda") t.lambda = parse_real(key, value);
        else if (name == "alpha") t.alpha = parse_real(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    } else {
        throw ConfigError("config: unknown section '" + section + "'");
    }
}

}  // namespace

void RunConfig::validate() const {
    // data
    if (data.n_samples < 4) throw ConfigError("data.n_samples must be >= 4");
    if (data.classes < 2) throw ConfigError("data.classes must be >= 2");
    if (data.channels < 1) throw ConfigError("data.channels must be >= 1");
    if (data.height < 4 || data.width < 4)
        throw ConfigError("data.height and data.width must be >= 4");
    if (data.separation <= 0.0) throw ConfigError("data.separation must be > 0");
    if (data.noise < 0.0) throw ConfigError("data.noise must be >= 0");
    if (data.val_fraction <= 0.0 || data.val_fraction >= 1.0)
        throw ConfigError("data.val_fraction must be in (0,1)");
    // model
    if (model.conv_channels.empty()) throw ConfigError("model.conv_channels must be non-empty");
    for (int c : model.conv_channels)
        if (c < 1) throw ConfigError("model.conv_channels entries must be >= 1");
    if (model.kernel < 1) throw ConfigError("model.kernel must be >= 1");
    if (model.stride < 1) throw ConfigError("model.stride must be >= 1");
    if (model.padding < 0) throw ConfigError("model.padding must be >= 0");
    if (model.timesteps < 1) throw ConfigError("model.timesteps must be >= 1");
    if (model.v_threshold <= 0.0) throw ConfigError("model.v_threshold must be > 0");
    if (model.tau <= 1.0) throw ConfigError("model.tau must be > 1");
    // train
    if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (train.warmup_epochs < 0 || train.warmup_epochs >= train.epochs)
        throw ConfigError("train.warmup_epochs must be < train.epochs");
    if (train.max_lr <= 0.0) throw ConfigError("train.max_lr must be > 0");
    if (train.momentum < 0.0 || train.momentum >= 1.0)
        throw ConfigError("train.momentum must be in [0,1)");
    if (train.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (train.surrogate_alpha <= 0.0) throw ConfigError("train.surrogate_alpha must be > 0");
    // synops
    if (synops.subset_size < 0) throw ConfigError("synops.subset_size must be >= 0");
    if (synops.calibration_tolerance <= 0.0)
        throw ConfigError("synops.calibration_tolerance must be > 0");
    if (synops.calibration_step < 1) throw ConfigError("synops.calibration_step must be >= 1");
    // lre
    if (lre.n_policies < 2) throw ConfigError("lre.n_policies must be >= 2");
    if (lre.holdout_fraction <= 0.0 || lre.holdout_fraction >= 0.5)
        throw ConfigError("lre.holdout_fraction must be in (0,0.5)");
    if (lre.max_ratio < 0.0 || lre.max_ratio >= 1.0)
        throw ConfigError("lre.max_ratio must be in [0,1)");
    if (lre.finetune_epochs < 0) throw ConfigError("lre.finetune_epochs must be >= 0");
    // agent
    if (agent.hidden < 1) throw ConfigError("agent.hidden must be >= 1");
    if (agent.actor_lr <= 0.0) throw ConfigError("agent.actor_lr must be > 0");
    if (agent.critic_lr <= 0.0) throw ConfigError("agent.critic_lr must be > 0");
    if (agent.tau <= 0.0 || agent.tau > 1.0) throw ConfigError("agent.tau must be in (0,1]");
    if (agent.batch_size < 1) throw ConfigError("agent.batch_size must be >= 1");
    if (agent.capacity < agent.batch_size)
        throw ConfigError("agent.capacity must be >= agent.batch_size");
    if (agent.updates_per_episode < 1)
        throw ConfigError("agent.updates_per_episode must be >= 1");
    if (agent.sigma0 <= 0.0) throw ConfigError("agent.sigma0 must be > 0");
    if (agent.sigma_decay <= 0.0 || agent.sigma_decay > 1.0)
        throw ConfigError("agent.sigma_decay must be in (0,1]");
    // search
    if (search.episodes < 1) throw ConfigError("search.episodes must be >= 1");
    if (search.warmup_episodes < 0 || search.warmup_episodes >= search.episodes)
        throw ConfigError("search.warmup_episodes must be < search.episodes");
    if (search.finetune_epochs < 0) throw ConfigError("search.finetune_epochs must be >= 0");
    // targets
    if (targets.mode != "S" && targets.mode != "P" && targets.mode != "SP")
        throw ConfigError("targets.mode must be one of S, P, SP");
    if (targets.synops_ratio <= 0.0 || targets.synops_ratio > 1.0)
        throw ConfigError("targets.synops_ratio must be in (0,1]");
    if (targets.params_ratio <= 0.0 || targets.params_ratio > 1.0)
        throw ConfigError("targets.params_ratio must be in (0,1]");
    if (targets.lambda <= 0.0) throw ConfigError("targets.lambda must be > 0");
    if (targets.alpha <= 0.0) throw ConfigError("targets.alpha must be > 0");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) +
                              " is not 'key = value': " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config: line " + std::to_string(line_no) + " has an empty key or value");
        apply_key(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path));
}

}  // namespace spikeprune
