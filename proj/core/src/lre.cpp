#include "spikeprune/lre.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include "spikeprune/csv.hpp"
#include "spikeprune/rng.hpp"

namespace spikeprune {

std::vector<LrePoint> gen_dataset(const SpikingNetwork& net, const Dataset& data,
                                  const DatasetView& train_view, const LreGenConfig& cfg) {
    require(cfg.n_policies >= 2, "LRE needs at least 2 sampled policies");
    require(cfg.max_ratio >= 0.0 && cfg.max_ratio < 1.0, "lre.max_ratio must be in [0,1)");
    net.validate();

    Rng policy_rng(derive_seed(cfg.seed, Subsystem::Lre));
    std::vector<LrePoint> points;
    for (int p = 0; p < cfg.n_policies; ++p) {
        PruningPolicy policy;
        for (int l = 0; l < net.n_prunable(); ++l)
            policy.ratios.push_back(uniform_range(policy_rng, 0.0, cfg.max_ratio));

        auto [pruned, masks] = apply_policy(net, policy);
        double pre = synops_average(pruned, data, cfg.subset).total;

        TrainConfig ft = cfg.finetune;
        ft.seed = derive_seed(cfg.seed, Subsystem::Lre, static_cast<std::uint64_t>(p) + 1);
        try {
            TrainResult res = train(pruned, train_view, ft);
            double post = synops_average(res.net, data, cfg.subset).total;
            points.push_back({pre, post, p});
        } catch (const NumericsError& e) {
            std::cerr << "warning: dropping LRE policy " << p << " (" << e.what() << ")\n";
        }
    }
    return points;
}

LreModel fit(std::span<const LrePoint> points) {
    require(points.size() >= 2, "fit: need at least 2 points");
    const double n = static_cast<double>(points.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (const LrePoint& p : points) {
        mean_x += p.pre;
        mean_y += p.post;
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const LrePoint& p : points) {
        sxx += (p.pre - mean_x) * (p.pre - mean_x);
        sxy += (p.pre - mean_x) * (p.post - mean_y);
    }
    if (sxx == 0.0)
        throw DegenerateFitError("fit: all pre-finetune SynOps identical, slope undefined");

    LreModel model;
    model.w = sxy / sxx;
    model.b = mean_y - model.w * mean_x;

    double ss_res = 0.0, ss_tot = 0.0;
    for (const LrePoint& p : points) {
        double e = model.w * p.pre + model.b - p.post;
        ss_res += e * e;
        ss_tot += (p.post - mean_y) * (p.post - mean_y);
    }
    model.mse = std::sqrt(ss_res / n);
    model.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return model;
}

double predict(const LreModel& model, double pre) {
    require(pre >= 0.0, "predict: SynOps must be non-negative");
    return std::max(0.0, model.w * pre + model.b);
}

LreMetrics metrics(const LreModel& model, std::span<const LrePoint> holdout) {
    require(!holdout.empty(), "metrics: empty holdout");
    double mean_y = 0.0;
    for (const LrePoint& p : holdout) mean_y += p.post;
    mean_y /= static_cast<double>(holdout.size());

    double ss_res = 0.0, ss_tot = 0.0;
    for (const LrePoint& p : holdout) {
        double e = predict(model, p.pre) - p.post;
        ss_res += e * e;
        ss_tot += (p.post - mean_y) * (p.post - mean_y);
    }
    LreMetrics m;
    m.mse = std::sqrt(ss_res / static_cast<double>(holdout.size()));
    if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
    return m;
}

void save_lre_model(const std::filesystem::path& path, const LreArtifact& artifact) {
    std::string out;
    out += "w=" + format_double(artifact.model.w) + "\n";
    out += "b=" + format_double(artifact.model.b) + "\n";
    out += "mse=" + format_double(artifact.model.mse) + "\n";
    out += "r2=" + format_double(artifact.model.r2) + "\n";
    out += "subset_size=" + std::to_string(artifact.subset_size) + "\n";
    out += "subset_seed=" + std::to_string(artifact.subset_seed) + "\n";
    write_text_file(path, out);
}

LreArtifact load_lre_model(const std::filesystem::path& path) {
    std::istringstream ss(read_text_file(path));
    LreArtifact artifact;
    std::string line;
    bool have_w = false, have_b = false;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed LRE model line: " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "w") {
            artifact.model.w = std::stod(value);
            have_w = true;
        } else if (key == "b") {
            artifact.model.b = std::stod(value);
            have_b = true;
        } else if (key == "mse") {
            artifact.model.mse = std::stod(value);
        } else if (key == "r2") {
            artifact.model.r2 = std::stod(value);
        } else if (key == "subset_size") {
            artifact.subset_size = std::stoll(value);
        } else if (key == "subset_seed") {
            artifact.subset_seed = std::stoull(value);
        } else {
            throw IoError("unknown LRE model key: " + key);
        }
    }
    if (!have_w || !have_b) throw IoError("LRE model file missing w or b: " + path.string());
    return artifact;
}

void save_lre_points_csv(const std::filesystem::path& path, std::span<const LrePoint> points) {
    CsvTable table;
    table.header = {"policy_id", "pre_synops", "post_synops"};
    for (const LrePoint& p : points)
        table.rows.push_back(
            {std::to_string(p.policy_id), format_double(p.pre), format_double(p.post)});
    write_csv(path, table);
}

std::vector<LrePoint> load_lre_points_csv(const std::filesystem::path& path) {
    CsvTable table = read_csv(path);
    if (table.header != std::vector<std::string>{"policy_id", "pre_synops", "post_synops"})
        throw IoError("unexpected LRE points header in " + path.string());
    std::vector<LrePoint> points;
    for (const auto& row : table.rows) {
        if (row.size() != 3) throw IoError("malformed LRE points row in " + path.string());
        points.push_back({std::stod(row[1]), std::stod(row[2]), std::stoi(row[0])});
    }
    return points;
}

}  // namespace spikeprune
