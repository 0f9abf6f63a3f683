#pragma once

// Experiment orchestration: scheme baselines, training/eval runs, user and
// reflector-size sweeps, grouping/reward/noise ablations, heatmap export and
// adaptation statistics. Every run is a deterministic function of
// (config, seed); all dBm aggregation happens in dB space.

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refsim/config.hpp"
#include "refsim/environment.hpp"
#include "refsim/io.hpp"
#include "refsim/mappo.hpp"
#include "refsim/raytrace.hpp"
#include "refsim/reflector.hpp"
#include "refsim/scene.hpp"

namespace refsim {

enum class Scheme { none, flat, sa_focus, col_ma, ma_focus };
enum class Grouping { columns, shifted };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::none: return "none";
        case Scheme::flat: return "flat";
        case Scheme::sa_focus: return "sa_focus";
        case Scheme::col_ma: return "col_ma";
        case Scheme::ma_focus: return "ma_focus";
    }
    return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "none") return Scheme::none;
    if (s == "flat") return Scheme::flat;
    if (s == "sa_focus") return Scheme::sa_focus;
    if (s == "col_ma") return Scheme::col_ma;
    if (s == "ma_focus") return Scheme::ma_focus;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct ExperimentConfig {
    Scheme scheme = Scheme::ma_focus;
    int users = 3;
    int agents = 3;
    Grouping grouping = Grouping::columns;
    int group_shift = 4;
    RewardMode reward_mode = RewardMode::mean;
    int reward_n = 2;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
    int episodes = 300;
    int eval_steps = 100;
    int episode_length = 20;
    int mobility_period = 4;
    double delta_max = 2.0;
    double theta_limit = kPi / 6.0;
    double phi_limit = kPi / 6.0;
    double focal_inflate_xy = 2.0;
    double focal_z_min = 0.5;
    double focal_z_max = 2.5;
    int max_bounces = 2;
    SceneConfig scene;
    Hyperparameters hp;
    GridSpec heatmap{-8.5, 11.0, -7.0, 7.5, 0.25, 1.5};
    double heatmap_min_dbm = -140.0;
    double heatmap_max_dbm = -50.0;

    void apply_profile(const std::string& profile) {
        if (profile == "desk") {
            scene.reflector_rows = 5;
            scene.reflector_cols = 5;
            episodes = 300;
            eval_steps = 100;
        } else if (profile == "full") {
            scene.reflector_rows = 7;
            scene.reflector_cols = 9;
            episodes = 3000;
            eval_steps = 300;
        } else {
            throw std::invalid_argument("unknown profile: " + profile);
        }
        hp.episodes = episodes;
    }

    static ExperimentConfig from_config(const KeyValueConfig& kv) {
        ExperimentConfig c;
        c.scene = SceneConfig::from_config(kv);
        if (kv.has("profile")) c.apply_profile(kv.get_string("profile", "desk"));
        c.scheme = scheme_from_string(kv.get_string("scheme", to_string(c.scheme)));
        c.users = kv.get_int("users", c.users);
        c.agents = kv.get_int("agents", c.agents);
        const std::string g = kv.get_string("grouping", "columns");
        c.grouping = (g == "shifted") ? Grouping::shifted : Grouping::columns;
        c.group_shift = kv.get_int("group_shift", c.group_shift);
        const std::string rm = kv.get_string("reward_mode", "mean");
        c.reward_mode = (rm == "dist_norm") ? RewardMode::dist_norm : RewardMode::mean;
        c.reward_n = kv.get_int("reward_n", c.reward_n);
        c.noise_sigma = kv.get_double("noise_sigma_m", c.noise_sigma);
        c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<int>(c.seed)));
        c.episodes = kv.get_int("episodes", c.episodes);
        c.eval_steps = kv.get_int("eval_steps", c.eval_steps);
        c.episode_length = kv.get_int("episode_length", c.episode_length);
        c.mobility_period = kv.get_int("mobility_period", c.mobility_period);
        c.delta_max = kv.get_double("delta_max_m", c.delta_max);
        c.max_bounces = kv.get_int("max_bounces", c.max_bounces);
        c.hp.lr = kv.get_double("learning_rate", c.hp.lr);
        c.hp.episodes = c.episodes;
        c.hp.buffer = kv.get_int("buffer_size", c.hp.buffer);
        c.hp.minibatch = kv.get_int("minibatch_size", c.hp.minibatch);
        c.hp.epochs_per_update = kv.get_int("epochs_per_update", c.hp.epochs_per_update);
        c.hp.hidden = kv.get_int("hidden_units", c.hp.hidden);
        c.hp.init_std = kv.get_double("init_std_m", c.hp.init_std);
        c.heatmap.x0 = kv.get_double("heatmap_x0", c.heatmap.x0);
        c.heatmap.x1 = kv.get_double("heatmap_x1", c.heatmap.x1);
        c.heatmap.y0 = kv.get_double("heatmap_y0", c.heatmap.y0);
        c.heatmap.y1 = kv.get_double("heatmap_y1", c.heatmap.y1);
        c.heatmap.step = kv.get_double("heatmap_step", c.heatmap.step);
        c.heatmap.z = kv.get_double("heatmap_z", c.scene.ue_height_m);
        c.heatmap_min_dbm = kv.get_double("heatmap_min_dbm", c.heatmap_min_dbm);
        c.heatmap_max_dbm = kv.get_double("heatmap_max_dbm", c.heatmap_max_dbm);
        return c;
    }
};

// Scene + array + assignment + constraints assembled for one experiment.
struct ExperimentSetup {
    Scene scene;
    ReflectorArray array;
    Assignment assignment;
    FocalConstraints constraints;
    EnvConfig env_cfg;

    Environment make_env() const { return Environment(scene, array, assignment, constraints, env_cfg); }
};

inline ExperimentSetup build_setup(const ExperimentConfig& cfg, bool eval_mode) {
    ExperimentSetup s;
    s.scene = build_l_hallway(cfg.scene);
    const MountPose mount = default_reflector_mount(cfg.scene);
    s.array = hex_layout(cfg.scene.reflector_rows, cfg.scene.reflector_cols,
                         cfg.scene.reflector_pitch_m, mount.center, mount.base_normal);
    s.assignment = (cfg.grouping == Grouping::shifted)
                       ? assign_shifted(s.array.rows, s.array.cols, cfg.agents, cfg.group_shift)
                       : assign_columns(s.array.rows, s.array.cols, cfg.agents);

    Box3 fbox = s.scene.user_region.inflated(cfg.focal_inflate_xy, cfg.focal_inflate_xy, 0.0);
    fbox.min.z = cfg.focal_z_min;
    fbox.max.z = cfg.focal_z_max;
    s.constraints.boxes.assign(cfg.agents, fbox);
    s.constraints.delta_max = cfg.delta_max;
    s.constraints.theta_min = -cfg.theta_limit;
    s.constraints.theta_max = cfg.theta_limit;
    s.constraints.phi_min = -cfg.phi_limit;
    s.constraints.phi_max = cfg.phi_limit;

    s.env_cfg.num_users = cfg.users;
    s.env_cfg.num_agents = cfg.agents;
    s.env_cfg.episode_length = eval_mode ? cfg.eval_steps : cfg.episode_length;
    s.env_cfg.mobility = true;
    s.env_cfg.mobility_period = cfg.mobility_period;
    s.env_cfg.max_bounces = cfg.max_bounces;
    s.env_cfg.noise_sigma_m = cfg.noise_sigma;
    s.env_cfg.reward_mode = cfg.reward_mode;
    s.env_cfg.reward_exponent = cfg.reward_n;
    s.env_cfg.control_mode =
        (cfg.scheme == Scheme::col_ma) ? ControlMode::column_azimuth : ControlMode::per_tile;
    switch (cfg.scheme) {
        case Scheme::none: s.env_cfg.tile_policy = TilePolicy::off; break;
        case Scheme::flat: s.env_cfg.tile_policy = TilePolicy::flat; break;
        default: s.env_cfg.tile_policy = TilePolicy::learned; break;
    }
    return s;
}

inline bool scheme_is_learned(Scheme s) {
    return s == Scheme::sa_focus || s == Scheme::col_ma || s == Scheme::ma_focus;
}

// Trains the scheme's model and writes checkpoint + metrics CSV under out_dir.
struct TrainedRun {
    std::string checkpoint;
    TrainResult result;
};

inline TrainedRun train_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    if (!scheme_is_learned(cfg.scheme)) {
        throw std::invalid_argument("train_experiment: scheme has no policy to train");
    }
    ExperimentSetup setup = build_setup(cfg, /*eval_mode=*/false);
    Environment env = setup.make_env();

    const bool single = (cfg.scheme == Scheme::sa_focus);
    Rng init_rng(derive_seed(cfg.seed, 0x6d6f64656c));
    Hyperparameters hp = cfg.hp;
    hp.episodes = cfg.episodes;
    MappoModel model = single
                           ? MappoModel::make(env.global_state_dim(), 3 * cfg.agents, 1,
                                              env.global_state_dim(), hp, init_rng)
                           : MappoModel::make(Environment::observation_dim(), 3, cfg.agents,
                                              env.global_state_dim(), hp, init_rng);

    TrainOptions opt;
    opt.seed = cfg.seed;
    opt.metrics_csv = out_dir + "/metrics.csv";
    opt.checkpoint_path = out_dir + "/model.ckpt";
    const TrainMode mode = single ? TrainMode::single_agent
                                  : (cfg.scheme == Scheme::col_ma ? TrainMode::column_ma
                                                                  : TrainMode::multi_agent);
    TrainedRun run;
    run.result = train(env, model, hp, mode, opt);
    run.checkpoint = opt.checkpoint_path;
    return run;
}

// Per-step record of one evaluation rollout.
struct EvalReport {
    std::vector<std::vector<double>> rssi;    // [step][user], dBm
    std::vector<double> step_mean;            // dB-mean over users per step
    std::vector<double> rewards;
    std::vector<std::vector<Vec3>> focals;    // [step][agent]
    std::vector<int> move_steps;              // indices into the arrays above
    double temporal_mean_dbm = 0.0;
    double temporal_std_dbm = 0.0;

    void finalize() {
        temporal_mean_dbm = 0.0;
        for (double m : step_mean) temporal_mean_dbm += m;
        temporal_mean_dbm /= std::max<std::size_t>(step_mean.size(), 1);
        double var = 0.0;
        for (double m : step_mean) var += (m - temporal_mean_dbm) * (m - temporal_mean_dbm);
        temporal_std_dbm = std::sqrt(var / std::max<std::size_t>(step_mean.size(), 1));
    }
};

// Decentralized execution: actors act on local observations with their mean
// action; the critic is not used. Static schemes take zero actions.
inline EvalReport run_eval(const ExperimentConfig& cfg, const MappoModel* model,
                           std::uint64_t eval_seed) {
    ExperimentSetup setup = build_setup(cfg, /*eval_mode=*/true);
    Environment env = setup.make_env();
    env.reset(derive_seed(eval_seed, 0x6576616c));

    const bool single = (cfg.scheme == Scheme::sa_focus);
    const int L = cfg.agents;
    EvalReport report;
    for (int step = 0; step < cfg.eval_steps; ++step) {
        std::vector<Vec3> actions(L, Vec3{0, 0, 0});
        if (model != nullptr) {
            const Snapshot snap = env.snapshot();
            if (single) {
                const Eigen::VectorXd a =
                    model->actors[0].mean_action(detail::to_eigen(snap.global_state));
                for (int l = 0; l < L; ++l) actions[l] = {a[3 * l], a[3 * l + 1], a[3 * l + 2]};
            } else {
                for (int l = 0; l < L; ++l) {
                    const Eigen::VectorXd a =
                        model->actors[l].mean_action(detail::to_eigen(snap.agent_obs[l]));
                    actions[l] = {a[0], a[1], a[2]};
                }
            }
        }
        const StepResult sr = env.step(actions);
        if (sr.users_moved) report.move_steps.push_back(step);
        double mean = 0.0;
        for (double r : sr.per_user_rssi) mean += r;
        mean /= sr.per_user_rssi.size();
        report.rssi.push_back(sr.per_user_rssi);
        report.step_mean.push_back(mean);
        report.rewards.push_back(sr.reward);
        report.focals.push_back(env.focals());
    }
    report.finalize();
    return report;
}

inline EvalReport run_baseline(const ExperimentConfig& cfg, const std::string& checkpoint,
                               std::uint64_t eval_seed) {
    if (!scheme_is_learned(cfg.scheme)) return run_eval(cfg, nullptr, eval_seed);
    if (checkpoint.empty()) {
        throw std::invalid_argument("run_baseline: RL scheme requires a trained checkpoint");
    }
    const MappoModel model = load_checkpoint(checkpoint);
    return run_eval(cfg, &model, eval_seed);
}

struct AdaptationStats {
    double mean_recovery_steps = 0.0;
    double post_move_dip_db = 0.0;
    int events = 0;
};

// Per move event: steps until the step-mean RSSI returns within threshold_db
// of the mean over the `window` steps preceding the move. Events that never
// recover before the next move are censored at the mobility period.
inline AdaptationStats adaptation_stats(const EvalReport& report, int window = 4,
                                        double threshold_db = 3.0) {
    AdaptationStats st;
    if (report.move_steps.empty()) return st;
    double rec_sum = 0.0, dip_sum = 0.0;
    for (std::size_t e = 0; e < report.move_steps.size(); ++e) {
        const int m = report.move_steps[e];
        if (m < window) continue;
        double pre = 0.0;
        for (int i = m - window; i < m; ++i) pre += report.step_mean[i];
        pre /= window;
        const int horizon = (e + 1 < report.move_steps.size())
                                ? report.move_steps[e + 1]
                                : static_cast<int>(report.step_mean.size());
        int rec = horizon - m;  // censored value
        for (int i = m; i < horizon; ++i) {
            if (report.step_mean[i] >= pre - threshold_db) {
                rec = i - m;
                break;
            }
        }
        rec_sum += rec;
        dip_sum += pre - report.step_mean[m];
        ++st.events;
    }
    if (st.events > 0) {
        st.mean_recovery_steps = rec_sum / st.events;
        st.post_move_dip_db = dip_sum / st.events;
    }
    return st;
}

// {episode, step, per-user RSSI, reward, focal coordinates} per row.
inline void write_trace_csv(const EvalReport& report, const std::string& path, int episode = 0) {
    ensure_parent_dir(path);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    const std::size_t K = report.rssi.empty() ? 0 : report.rssi[0].size();
    const std::size_t L = report.focals.empty() ? 0 : report.focals[0].size();
    f << "episode,step";
    for (std::size_t k = 0; k < K; ++k) f << ",rssi_user" << (k + 1) << "_dbm";
    f << ",reward";
    for (std::size_t l = 0; l < L; ++l) {
        f << ",focal" << (l + 1) << "_x,focal" << (l + 1) << "_y,focal" << (l + 1) << "_z";
    }
    f << "\n";
    for (std::size_t s = 0; s < report.rssi.size(); ++s) {
        f << episode << "," << s;
        for (double r : report.rssi[s]) f << "," << fmt_double(r, 4);
        f << "," << fmt_double(report.rewards[s], 4);
        for (const Vec3& fc : report.focals[s]) {
            f << "," << fmt_double(fc.x, 4) << "," << fmt_double(fc.y, 4) << ","
              << fmt_double(fc.z, 4);
        }
        f << "\n";
    }
}

inline void write_summary_json(const std::string& path, Scheme scheme, const EvalReport& report,
                               const AdaptationStats& stats) {
    ensure_parent_dir(path);
    nlohmann::ordered_json j;
    j["scheme"] = to_string(scheme);
    j["mean_dbm"] = report.temporal_mean_dbm;
    j["std_dbm"] = report.temporal_std_dbm;
    j["recovery_steps"] = stats.mean_recovery_steps;
    j["move_events"] = stats.events;
    std::ofstream f(path);
    f << j.dump(2) << "\n";
}

// Per-tile {row, col, theta, phi} dump for inspection and replay.
inline void write_array_json(const ReflectorArray& array, const std::string& path) {
    ensure_parent_dir(path);
    nlohmann::ordered_json j;
    j["rows"] = array.rows;
    j["cols"] = array.cols;
    j["pitch_m"] = array.pitch;
    j["tiles"] = nlohmann::ordered_json::array();
    for (const TileState& t : array.tiles) {
        j["tiles"].push_back({{"row", t.row}, {"col", t.col}, {"theta", t.theta}, {"phi", t.phi}});
    }
    std::ofstream f(path);
    f << j.dump(2) << "\n";
}

// Positions the reflector for the current users (a few settled policy steps
// for learned schemes), then rasterizes RSSI over the configured grid.
// Writes <prefix>.csv, <prefix>.pgm and <prefix>_users.csv.
inline Heatmap emit_heatmap(const ExperimentConfig& cfg, const MappoModel* model,
                            const std::string& out_prefix, int settle_steps = 8,
                            unsigned threads = 0) {
    ExperimentConfig hm_cfg = cfg;
    ExperimentSetup setup = build_setup(hm_cfg, /*eval_mode=*/true);
    setup.env_cfg.mobility = false;  // freeze users while settling and rasterizing
    Environment env = setup.make_env();
    env.reset(derive_seed(cfg.seed, 0x6865617421));

    const bool single = (cfg.scheme == Scheme::sa_focus);
    const int L = cfg.agents;
    if (model != nullptr) {
        for (int step = 0; step < settle_steps; ++step) {
            const Snapshot snap = env.snapshot();
            std::vector<Vec3> actions(L, Vec3{0, 0, 0});
            if (single) {
                const Eigen::VectorXd a =
                    model->actors[0].mean_action(detail::to_eigen(snap.global_state));
                for (int l = 0; l < L; ++l) actions[l] = {a[3 * l], a[3 * l + 1], a[3 * l + 2]};
            } else {
                for (int l = 0; l < L; ++l) {
                    const Eigen::VectorXd a =
                        model->actors[l].mean_action(detail::to_eigen(snap.agent_obs[l]));
                    actions[l] = {a[0], a[1], a[2]};
                }
            }
            env.step(actions);
        }
    }

    const Heatmap hm = rssi_heatmap(env.scene(), cfg.heatmap, cfg.max_bounces, threads);
    write_heatmap_csv(hm, out_prefix + ".csv");
    write_heatmap_pgm(hm, out_prefix + ".pgm", cfg.heatmap_min_dbm, cfg.heatmap_max_dbm);
    {
        std::ofstream f(out_prefix + "_users.csv");
        f << "user,x,y,z\n";
        for (std::size_t k = 0; k < env.users().size(); ++k) {
            const Vec3& u = env.users()[k];
            f << (k + 1) << "," << fmt_double(u.x, 4) << "," << fmt_double(u.y, 4) << ","
              << fmt_double(u.z, 4) << "\n";
        }
    }
    return hm;
}

// Fixed checkpoint evaluated across user counts (cyclic agent-user mapping).
inline std::map<int, EvalReport> sweep_users(const ExperimentConfig& base,
                                             const std::string& checkpoint,
                                             const std::vector<int>& k_list = {2, 3, 4}) {
    const MappoModel model = load_checkpoint(checkpoint);
    std::map<int, EvalReport> out;
    for (int k : k_list) {
        ExperimentConfig cfg = base;
        cfg.users = k;
        out[k] = run_eval(cfg, &model, base.seed);
    }
    return out;
}

// Fixed checkpoint evaluated across reflector row counts; observation layout
// is unchanged, segment centroids are recomputed per size.
inline std::map<int, EvalReport> sweep_reflector_rows(const ExperimentConfig& base,
                                                      const std::string& checkpoint,
                                                      const std::vector<int>& rows_list = {5, 7, 9,
                                                                                           11}) {
    const MappoModel model = load_checkpoint(checkpoint);
    std::map<int, EvalReport> out;
    for (int rows : rows_list) {
        ExperimentConfig cfg = base;
        cfg.scene.reflector_rows = rows;
        out[rows] = run_eval(cfg, &model, base.seed);
    }
    return out;
}

struct NoiseSweepEntry {
    TrainResult training;
    EvalReport eval;
};

// Trains and evaluates one configuration per noise level (noise active in
// both phases).
inline std::map<double, NoiseSweepEntry> sweep_noise(
    const ExperimentConfig& base, const std::string& out_dir,
    const std::vector<double>& sigma_list = {0.0, 0.1, 0.3, 0.5, 1.0}) {
    std::map<double, NoiseSweepEntry> out;
    for (double sigma : sigma_list) {
        ExperimentConfig cfg = base;
        cfg.noise_sigma = sigma;
        const std::string dir = out_dir + "/noise_" + fmt_double(sigma, 2);
        const TrainedRun run = train_experiment(cfg, dir);
        NoiseSweepEntry e;
        e.training = run.result;
        e.eval = run_baseline(cfg, run.checkpoint, cfg.seed);
        out[sigma] = std::move(e);
    }
    return out;
}

// Trains/evaluates both grouping patterns with identical seeds.
inline std::map<Grouping, EvalReport> ablate_grouping(const ExperimentConfig& base,
                                                      const std::string& out_dir) {
    std::map<Grouping, EvalReport> out;
    for (Grouping g : {Grouping::columns, Grouping::shifted}) {
        ExperimentConfig cfg = base;
        cfg.grouping = g;
        const std::string dir =
            out_dir + std::string("/group_") + (g == Grouping::columns ? "columns" : "shifted");
        const TrainedRun run = train_experiment(cfg, dir);
        out[g] = run_baseline(cfg, run.checkpoint, cfg.seed);
    }
    return out;
}

// Trains/evaluates the distance-normalized reward variants.
inline std::map<int, EvalReport> ablate_reward(const ExperimentConfig& base,
                                               const std::string& out_dir,
                                               const std::vector<int>& n_list = {2, 3, 4}) {
    std::map<int, EvalReport> out;
    for (int n : n_list) {
        ExperimentConfig cfg = base;
        cfg.reward_mode = RewardMode::dist_norm;
        cfg.reward_n = n;
        const std::string dir = out_dir + "/reward_n" + std::to_string(n);
        const TrainedRun run = train_experiment(cfg, dir);
        out[n] = run_baseline(cfg, run.checkpoint, cfg.seed);
    }
    return out;
}

}  // namespace refsim
