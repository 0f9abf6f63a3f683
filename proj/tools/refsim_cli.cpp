// Command-line front end: training, evaluation, baselines, sweeps, ablations
// and heatmap export. Every subcommand takes --config and --seed and writes
// deterministic artifacts under --out.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refsim/experiments.hpp"

namespace {

using namespace refsim;

ExperimentConfig load_config(const std::string& config_path, const std::string& profile,
                             std::uint64_t seed, const std::string& scheme) {
    KeyValueConfig kv;
    if (!config_path.empty()) kv = KeyValueConfig::from_file(config_path);
    if (!profile.empty()) kv.set("profile", profile);
    ExperimentConfig cfg = ExperimentConfig::from_config(kv);
    if (seed != 0) cfg.seed = seed;
    if (!scheme.empty()) cfg.scheme = scheme_from_string(scheme);
    return cfg;
}

void report_eval(const char* label, const EvalReport& r) {
    const AdaptationStats st = adaptation_stats(r);
    std::printf("%-24s mean %8.2f dBm  std %6.2f dB  recovery %.2f steps (%d moves)\n", label,
                r.temporal_mean_dbm, r.temporal_std_dbm, st.mean_recovery_steps, st.events);
}

void write_eval_outputs(const ExperimentConfig& cfg, const EvalReport& r,
                        const std::string& out_dir) {
    write_trace_csv(r, out_dir + "/trace.csv");
    write_summary_json(out_dir + "/summary.json", cfg.scheme, r, adaptation_stats(r));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steerable hexagonal reflector simulator with multi-agent PPO control"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", profile, scheme, checkpoint;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "key=value config file")->capture_default_str();
    app.add_option("--seed", seed, "experiment seed (overrides config)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--profile", profile, "desk or full profile");

    auto* cmd_train = app.add_subcommand("train", "train a policy for one scheme");
    cmd_train->add_option("--scheme", scheme, "sa_focus, col_ma or ma_focus");
    auto* cmd_eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
    cmd_eval->add_option("--scheme", scheme, "scheme the checkpoint was trained for");
    cmd_eval->add_option("--checkpoint", checkpoint, "path to model.ckpt");
    auto* cmd_base = app.add_subcommand("baseline", "run one of the five control schemes");
    cmd_base->add_option("--scheme", scheme, "none, flat, sa_focus, col_ma, ma_focus")
        ->required();
    cmd_base->add_option("--checkpoint", checkpoint, "checkpoint (RL schemes only)");
    auto* cmd_susers = app.add_subcommand("sweep-users", "evaluate checkpoint at K = 2, 3, 4");
    cmd_susers->add_option("--checkpoint", checkpoint)->required();
    auto* cmd_srows =
        app.add_subcommand("sweep-rows", "evaluate checkpoint at 5/7/9/11 reflector rows");
    cmd_srows->add_option("--checkpoint", checkpoint)->required();
    auto* cmd_snoise =
        app.add_subcommand("sweep-noise", "train+eval at position noise 0/0.1/0.3/0.5/1.0 m");
    auto* cmd_agroup = app.add_subcommand("ablate-grouping", "columns vs shifted grouping");
    auto* cmd_areward = app.add_subcommand("ablate-reward", "distance-normalized reward n=2,3,4");
    auto* cmd_heatmap = app.add_subcommand("heatmap", "export RSSI heatmap CSV + PGM");
    cmd_heatmap->add_option("--scheme", scheme, "scheme to render")->required();
    cmd_heatmap->add_option("--checkpoint", checkpoint, "checkpoint (RL schemes only)");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = load_config(config_path, profile, seed, scheme);

        if (cmd_train->parsed()) {
            if (!scheme_is_learned(cfg.scheme)) {
                std::fprintf(stderr, "train: scheme %s has no policy\n", to_string(cfg.scheme));
                return 2;
            }
            const TrainedRun run = train_experiment(cfg, out_dir);
            const auto& curve = run.result.episode_mean_reward;
            std::printf("trained %s for %zu episodes; final-50 mean reward %.2f\n",
                        to_string(cfg.scheme), curve.size(),
                        [&] {
                            double s = 0.0;
                            const std::size_t n = std::min<std::size_t>(50, curve.size());
                            for (std::size_t i = curve.size() - n; i < curve.size(); ++i)
                                s += curve[i];
                            return n ? s / n : 0.0;
                        }());
            std::printf("checkpoint: %s\n", run.checkpoint.c_str());
        } else if (cmd_eval->parsed() || cmd_base->parsed()) {
            const EvalReport r = run_baseline(cfg, checkpoint, cfg.seed);
            report_eval(to_string(cfg.scheme), r);
            write_eval_outputs(cfg, r, out_dir);
        } else if (cmd_susers->parsed()) {
            for (const auto& [k, r] : sweep_users(cfg, checkpoint)) {
                char label[32];
                std::snprintf(label, sizeof(label), "users=%d", k);
                report_eval(label, r);
                write_summary_json(out_dir + "/users_" + std::to_string(k) + ".json", cfg.scheme,
                                   r, adaptation_stats(r));
            }
        } else if (cmd_srows->parsed()) {
            for (const auto& [rows, r] : sweep_reflector_rows(cfg, checkpoint)) {
                char label[32];
                std::snprintf(label, sizeof(label), "rows=%d", rows);
                report_eval(label, r);
                write_summary_json(out_dir + "/rows_" + std::to_string(rows) + ".json",
                                   cfg.scheme, r, adaptation_stats(r));
            }
        } else if (cmd_snoise->parsed()) {
            for (const auto& [sigma, e] : sweep_noise(cfg, out_dir)) {
                char label[32];
                std::snprintf(label, sizeof(label), "sigma=%.1f m", sigma);
                report_eval(label, e.eval);
            }
        } else if (cmd_agroup->parsed()) {
            for (const auto& [g, r] : ablate_grouping(cfg, out_dir)) {
                report_eval(g == Grouping::columns ? "columns" : "shifted", r);
            }
        } else if (cmd_areward->parsed()) {
            for (const auto& [n, r] : ablate_reward(cfg, out_dir)) {
                char label[32];
                std::snprintf(label, sizeof(label), "reward n=%d", n);
                report_eval(label, r);
            }
        } else if (cmd_heatmap->parsed()) {
            std::optional<MappoModel> model;
            if (scheme_is_learned(cfg.scheme)) {
                if (checkpoint.empty()) {
                    std::fprintf(stderr, "heatmap: RL scheme requires --checkpoint\n");
                    return 2;
                }
                model = load_checkpoint(checkpoint);
            }
            const std::string prefix = out_dir + "/heatmap_" + to_string(cfg.scheme);
            emit_heatmap(cfg, model ? &*model : nullptr, prefix);
            std::printf("wrote %s.csv / .pgm / _users.csv\n", prefix.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
