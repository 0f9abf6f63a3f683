#pragma once

// The multi-agent MDP around the ray tracer: per-agent focal point control
// with box/velocity constraints, RSSI reward, periodic user relocation and
// optional position-sensing noise. One instance is single-threaded; run
// independent instances for parallel rollouts.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "refsim/raytrace.hpp"
#include "refsim/reflector.hpp"
#include "refsim/rng.hpp"
#include "refsim/scene.hpp"

namespace refsim {

enum class RewardMode { mean, dist_norm };

// mean: arithmetic mean of RSSI in dBm. dist_norm: each user's linear power
// is multiplied by d^n (equivalently +10 n log10(d) dB) before averaging.
inline double reward(const std::vector<double>& rssi_dbm, RewardMode mode,
                     const std::vector<double>& distances_m = {}, int n = 2) {
    if (rssi_dbm.empty()) throw std::invalid_argument("reward: empty RSSI list");
    double sum = 0.0;
    for (std::size_t k = 0; k < rssi_dbm.size(); ++k) {
        double r = rssi_dbm[k];
        if (mode == RewardMode::dist_norm) {
            if (distances_m.size() != rssi_dbm.size()) {
                throw std::invalid_argument("reward: distances required for dist_norm");
            }
            if (!(distances_m[k] > 0.0)) {
                throw std::invalid_argument("reward: non-positive distance");
            }
            r += 10.0 * n * std::log10(distances_m[k]);
        }
        sum += r;
    }
    return sum / static_cast<double>(rssi_dbm.size());
}

// Gaussian N(0, sigma^2) added independently per coordinate. Used for what the
// agents see, never for RSSI ground truth.
inline std::vector<Vec3> noisy_positions(const std::vector<Vec3>& users, double sigma_m,
                                         Rng& rng) {
    if (sigma_m < 0.0) throw std::invalid_argument("noisy_positions: negative sigma");
    std::vector<Vec3> out;
    out.reserve(users.size());
    for (const Vec3& u : users) {
        if (sigma_m == 0.0) {
            out.push_back(u);
        } else {
            out.push_back({u.x + rng.normal(0.0, sigma_m), u.y + rng.normal(0.0, sigma_m),
                           u.z + rng.normal(0.0, sigma_m)});
        }
    }
    return out;
}

enum class TilePolicy { learned, flat, off };

struct EnvConfig {
    int num_users = 3;   // K
    int num_agents = 3;  // L
    int episode_length = 20;
    bool mobility = true;      // relocate users every mobility_period steps
    int mobility_period = 4;
    int max_bounces = 2;
    double noise_sigma_m = 0.0;
    RewardMode reward_mode = RewardMode::mean;
    int reward_exponent = 2;
    ControlMode control_mode = ControlMode::per_tile;
    TilePolicy tile_policy = TilePolicy::learned;
};

struct StepResult {
    double reward = 0.0;
    std::vector<double> per_user_rssi;
    bool done = false;
    bool users_moved = false;
};

// Observations and the critic's global state for one step, drawn together so
// every consumer sees the same (possibly noisy) user positions.
struct Snapshot {
    std::vector<double> global_state;            // 3K + 6L, normalized
    std::vector<std::vector<double>> agent_obs;  // L x 9, normalized
};

class Environment {
public:
    Environment(Scene scene, ReflectorArray array, Assignment assignment,
                FocalConstraints constraints, EnvConfig cfg)
        : scene_(std::move(scene)),
          array_(std::move(array)),
          assignment_(std::move(assignment)),
          constraints_(std::move(constraints)),
          cfg_(cfg) {
        if (cfg_.num_users < 1 || cfg_.num_agents < 1) {
            throw std::invalid_argument("Environment: need K, L >= 1");
        }
        if (static_cast<int>(constraints_.boxes.size()) != cfg_.num_agents) {
            throw std::invalid_argument("Environment: one focal box per agent required");
        }
        segments_.reserve(cfg_.num_agents);
        for (int l = 1; l <= cfg_.num_agents; ++l) {
            segments_.push_back(cfg_.tile_policy == TilePolicy::off
                                    ? array_.center
                                    : segment_centroid(array_, assignment_, l));
        }
        norm_box_ = scene_.bounds;
    }

    // 0-based index of the user assigned to 0-based agent l (cyclic reuse).
    int user_of_agent(int l) const { return l % cfg_.num_users; }

    void reset(std::uint64_t seed) {
        rng_ = Rng(seed);
        step_index_ = 0;
        // Tile orientations start uniformly random within the servo range.
        for (TileState& t : array_.tiles) {
            t.theta = rng_.uniform(constraints_.theta_min, constraints_.theta_max);
            t.phi = rng_.uniform(constraints_.phi_min, constraints_.phi_max);
        }
        users_.clear();
        for (int k = 0; k < cfg_.num_users; ++k) users_.push_back(scene_.user_region.sample(rng_));
        scene_.users = users_;
        // Focals start at the (sensed) assigned user positions projected into F_l.
        const auto sensed = noisy_positions(users_, cfg_.noise_sigma_m, rng_);
        focals_.clear();
        for (int l = 0; l < cfg_.num_agents; ++l) {
            focals_.push_back(clamp_focal(sensed[user_of_agent(l)], constraints_.boxes[l]));
        }
        sync_tiles();
    }

    StepResult step(const std::vector<Vec3>& actions) {
        if (static_cast<int>(actions.size()) != cfg_.num_agents) {
            throw std::invalid_argument("Environment::step: one action per agent required");
        }
        ++step_index_;
        StepResult out;
        if (cfg_.mobility && step_index_ % cfg_.mobility_period == 0) {
            move_users();
            out.users_moved = true;
        }
        for (int l = 0; l < cfg_.num_agents; ++l) {
            const Vec3 d = clip_inf(actions[l], constraints_.delta_max);
            focals_[l] = clamp_focal(focals_[l] + d, constraints_.boxes[l]);
        }
        sync_tiles();
        out.per_user_rssi = trace_all_users();
        out.reward = reward(out.per_user_rssi, cfg_.reward_mode, user_ap_distances(),
                            cfg_.reward_exponent);
        out.done = step_index_ >= cfg_.episode_length;
        return out;
    }

    // Resamples every user uniformly in the region; the agent-user mapping is
    // untouched.
    void move_users() {
        for (Vec3& u : users_) u = scene_.user_region.sample(rng_);
        scene_.users = users_;
    }

    Snapshot snapshot() {
        const auto sensed = noisy_positions(users_, cfg_.noise_sigma_m, rng_);
        Snapshot s;
        s.global_state.reserve(3 * cfg_.num_users + 6 * cfg_.num_agents);
        for (const Vec3& u : sensed) push_normalized(s.global_state, u);
        for (const Vec3& r : segments_) push_normalized(s.global_state, r);
        for (const Vec3& f : focals_) push_normalized(s.global_state, f);
        s.agent_obs.resize(cfg_.num_agents);
        for (int l = 0; l < cfg_.num_agents; ++l) {
            auto& o = s.agent_obs[l];
            o.reserve(9);
            push_normalized(o, sensed[user_of_agent(l)]);
            push_normalized(o, segments_[l]);
            push_normalized(o, focals_[l]);
        }
        return s;
    }

    // Single-agent observation (draws fresh sensing noise).
    std::vector<double> observe(int agent_1based) {
        if (agent_1based < 1 || agent_1based > cfg_.num_agents) {
            throw std::invalid_argument("observe: invalid agent id");
        }
        const auto sensed = noisy_positions(users_, cfg_.noise_sigma_m, rng_);
        std::vector<double> o;
        o.reserve(9);
        push_normalized(o, sensed[user_of_agent(agent_1based - 1)]);
        push_normalized(o, segments_[agent_1based - 1]);
        push_normalized(o, focals_[agent_1based - 1]);
        return o;
    }

    Vec3 denormalize(double nx, double ny, double nz) const {
        const Vec3 e = norm_box_.extent();
        return {norm_box_.min.x + (nx + 1.0) * 0.5 * e.x, norm_box_.min.y + (ny + 1.0) * 0.5 * e.y,
                norm_box_.min.z + (nz + 1.0) * 0.5 * e.z};
    }

    std::vector<double> trace_all_users() const {
        std::vector<double> rssi;
        rssi.reserve(users_.size());
        for (const Vec3& u : users_) rssi.push_back(rssi_at(scene_, u, cfg_.max_bounces));
        return rssi;
    }

    std::vector<double> user_ap_distances() const {
        std::vector<double> d;
        d.reserve(users_.size());
        for (const Vec3& u : users_) d.push_back((u - scene_.ap_position).norm());
        return d;
    }

    int global_state_dim() const { return 3 * cfg_.num_users + 6 * cfg_.num_agents; }
    static constexpr int observation_dim() { return 9; }

    const Scene& scene() const { return scene_; }
    const ReflectorArray& array() const { return array_; }
    const std::vector<Vec3>& users() const { return users_; }
    const std::vector<Vec3>& focals() const { return focals_; }
    const std::vector<Vec3>& segments() const { return segments_; }
    const FocalConstraints& constraints() const { return constraints_; }
    const EnvConfig& config() const { return cfg_; }
    int step_index() const { return step_index_; }
    Rng& rng() { return rng_; }

private:
    static Vec3 clip_inf(const Vec3& v, double lim) {
        return {std::clamp(v.x, -lim, lim), std::clamp(v.y, -lim, lim),
                std::clamp(v.z, -lim, lim)};
    }

    void push_normalized(std::vector<double>& out, const Vec3& v) const {
        const Vec3 e = norm_box_.extent();
        out.push_back(2.0 * (v.x - norm_box_.min.x) / e.x - 1.0);
        out.push_back(2.0 * (v.y - norm_box_.min.y) / e.y - 1.0);
        out.push_back(2.0 * (v.z - norm_box_.min.z) / e.z - 1.0);
    }

    void sync_tiles() {
        switch (cfg_.tile_policy) {
            case TilePolicy::off:
                scene_.clear_tile_surfaces();
                return;
            case TilePolicy::flat:
                for (TileState& t : array_.tiles) t.theta = t.phi = 0.0;
                break;
            case TilePolicy::learned:
                apply_focal_points(array_, focals_, assignment_, scene_.ap_position, constraints_,
                                   cfg_.control_mode);
                break;
        }
        scene_.set_tile_surfaces(array_.make_surfaces());
    }

    Scene scene_;
    ReflectorArray array_;
    Assignment assignment_;
    FocalConstraints constraints_;
    EnvConfig cfg_;
    Rng rng_{0};
    std::vector<Vec3> users_;
    std::vector<Vec3> focals_;
    std::vector<Vec3> segments_;
    Box3 norm_box_;
    int step_index_ = 0;
};

}  // namespace refsim
