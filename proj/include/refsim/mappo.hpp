#pragma once

// MAPPO with centralized training and decentralized execution: per-agent
// Gaussian actors on local observations, one critic on the global state,
// GAE advantages shared across agents, clipped surrogate updates.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "refsim/environment.hpp"
#include "refsim/io.hpp"
#include "refsim/nn.hpp"
#include "refsim/rng.hpp"

namespace refsim {

struct Hyperparameters {
    double gamma = 0.985;
    double lambda_gae = 0.9;
    double clip_eps = 0.2;
    double c1 = 0.5;    // value loss coefficient
    double c2 = 1e-4;   // entropy coefficient
    double lr = 2e-4;
    int buffer = 1000;
    int minibatch = 200;
    int epochs_per_update = 4;
    int episodes = 300;
    int hidden = 256;
    double init_std = 0.15;  // initial policy stddev, metres
    double kl_stop = 0.05;

    void validate() const {
        if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("hp: gamma out of (0,1]");
        if (!(lambda_gae > 0.0 && lambda_gae <= 1.0)) {
            throw std::invalid_argument("hp: lambda out of (0,1]");
        }
        if (!(clip_eps > 0.0)) throw std::invalid_argument("hp: clip_eps must be > 0");
        if (buffer < minibatch) throw std::invalid_argument("hp: buffer must hold >= 1 minibatch");
    }
};

struct Transition {
    Eigen::VectorXd global_state;
    std::vector<Eigen::VectorXd> obs;      // one per actor
    std::vector<Eigen::VectorXd> actions;  // one per actor
    std::vector<double> log_probs;         // one per actor
    double reward = 0.0;
    double value = 0.0;  // critic estimate at collection time (denormalized)
    bool done = false;
};

class TrajectoryBuffer {
public:
    explicit TrajectoryBuffer(std::size_t capacity = 1000) : capacity_(capacity) {}

    void add(Transition t) { data_.push_back(std::move(t)); }
    bool full() const { return data_.size() >= capacity_; }
    std::size_t size() const { return data_.size(); }
    void clear() { data_.clear(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return data_[i]; }

private:
    std::size_t capacity_;
    std::vector<Transition> data_;
};

// A_t = sum_l (gamma lambda)^l delta_{t+l}; returns = advantages + values.
inline std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const std::vector<double>& rewards, const std::vector<double>& values,
    double bootstrap_value, double gamma, double lambda) {
    if (rewards.empty()) throw std::invalid_argument("compute_gae: empty trajectory");
    if (rewards.size() != values.size()) {
        throw std::invalid_argument("compute_gae: rewards/values length mismatch");
    }
    const std::size_t n = rewards.size();
    std::vector<double> adv(n), ret(n);
    double acc = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        const double next_v = (i + 1 < n) ? values[i + 1] : bootstrap_value;
        const double delta = rewards[i] + gamma * next_v - values[i];
        acc = delta + gamma * lambda * acc;
        adv[i] = acc;
        ret[i] = acc + values[i];
    }
    return {adv, ret};
}

// Zero mean, unit (population) std; the 1e-8 keeps constant batches at zero.
inline std::vector<double> normalize_advantages(const std::vector<double>& adv) {
    if (adv.size() < 2) throw std::invalid_argument("normalize_advantages: need length >= 2");
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= static_cast<double>(adv.size());
    const double denom = std::sqrt(var) + 1e-8;
    std::vector<double> out(adv.size());
    for (std::size_t i = 0; i < adv.size(); ++i) out[i] = (adv[i] - mean) / denom;
    return out;
}

inline double ppo_clip_term(double ratio, double adv, double eps) {
    if (!(ratio > 0.0)) throw std::invalid_argument("ppo_clip_term: ratio must be > 0");
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return std::min(ratio * adv, clipped * adv);
}

inline double critic_loss(const std::vector<double>& predicted,
                          const std::vector<double>& targets) {
    if (predicted.empty() || predicted.size() != targets.size()) {
        throw std::invalid_argument("critic_loss: length mismatch or empty");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - targets[i];
        s += d * d;
    }
    return s / static_cast<double>(predicted.size());
}

// Running mean/std used to keep critic regression targets O(1) regardless of
// the reward scale (dBm returns are large and negative).
struct RunningNorm {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void update(const std::vector<double>& xs) {
        for (double x : xs) {
            count += 1.0;
            const double d = x - mean;
            mean += d / count;
            m2 += d * (x - mean);
        }
    }

    double stddev() const { return count > 1.0 ? std::sqrt(m2 / count) : 1.0; }
    double normalize(double x) const { return count > 0.0 ? (x - mean) / (stddev() + 1e-8) : x; }
    double denormalize(double y) const {
        return count > 0.0 ? y * (stddev() + 1e-8) + mean : y;
    }
};

struct MappoModel {
    std::vector<GaussianPolicy> actors;  // unshared parameters
    DenseNet critic;
    std::vector<NetAdam> actor_opt;
    std::vector<AdamState> log_std_opt;
    NetAdam critic_opt;
    RunningNorm value_norm;

    static MappoModel make(int obs_dim, int action_dim, int num_actors, int global_dim,
                           const Hyperparameters& hp, Rng& rng) {
        MappoModel m;
        for (int a = 0; a < num_actors; ++a) {
            m.actors.push_back(make_gaussian_policy(obs_dim, action_dim, hp.hidden, rng,
                                                    hp.init_std));
        }
        m.critic = DenseNet::mlp(global_dim, {hp.hidden, hp.hidden}, 1, rng, 1.0);
        m.actor_opt.resize(num_actors);
        m.log_std_opt.resize(num_actors);
        for (int a = 0; a < num_actors; ++a) {
            m.actor_opt[a].init(m.actors[a].net);
            m.log_std_opt[a].init(action_dim);
        }
        m.critic_opt.init(m.critic);
        return m;
    }

    double value_of(const Eigen::VectorXd& global_state) const {
        return value_norm.denormalize(critic.forward(global_state)[0]);
    }
};

struct UpdateStats {
    double actor_loss = 0.0;   // mean clipped surrogate (ascended)
    double critic_loss = 0.0;  // MSE in normalized units
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double kl = 0.0;
    int minibatches = 0;
    bool early_stopped = false;
};

// One PPO update over the whole buffer: epochs_per_update passes of shuffled
// minibatches, advantages normalized per minibatch, KL early stop.
inline UpdateStats mappo_update(MappoModel& model, const TrajectoryBuffer& buffer,
                                const Hyperparameters& hp, Rng& rng) {
    hp.validate();
    const int T = static_cast<int>(buffer.size());
    if (T < hp.minibatch) throw std::invalid_argument("mappo_update: buffer underfull");
    const int num_actors = static_cast<int>(model.actors.size());

    // GAE per episode (done flags bound episodes; truncation bootstraps 0).
    std::vector<double> advantages(T), returns(T);
    int pos = 0;
    while (pos < T) {
        int end = pos;
        while (end < T - 1 && !buffer[end].done) ++end;
        std::vector<double> rew, val;
        for (int i = pos; i <= end; ++i) {
            rew.push_back(buffer[i].reward);
            val.push_back(buffer[i].value);
        }
        auto [adv, ret] = compute_gae(rew, val, 0.0, hp.gamma, hp.lambda_gae);
        for (int i = pos; i <= end; ++i) {
            advantages[i] = adv[i - pos];
            returns[i] = ret[i - pos];
        }
        pos = end + 1;
    }
    model.value_norm.update(returns);

    const AdamConfig adam{hp.lr, 0.9, 0.999, 1e-8};
    UpdateStats stats;
    std::vector<int> perm(T);
    for (int i = 0; i < T; ++i) perm[i] = i;

    bool stop = false;
    for (int epoch = 0; epoch < hp.epochs_per_update && !stop; ++epoch) {
        for (int i = T - 1; i > 0; --i) {
            std::swap(perm[i], perm[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
        }
        for (int start = 0; start + hp.minibatch <= T && !stop; start += hp.minibatch) {
            const int B = hp.minibatch;
            std::vector<double> mb_adv(B);
            for (int i = 0; i < B; ++i) mb_adv[i] = advantages[perm[start + i]];
            const std::vector<double> advn = normalize_advantages(mb_adv);

            // Critic: regress normalized returns.
            {
                Eigen::MatrixXd X(buffer[0].global_state.size(), B);
                for (int i = 0; i < B; ++i) X.col(i) = buffer[perm[start + i]].global_state;
                DenseNet::BatchCache cache;
                const Eigen::MatrixXd V = model.critic.forward_batch(X, &cache);
                Eigen::MatrixXd up(1, B);
                double loss = 0.0;
                for (int i = 0; i < B; ++i) {
                    const double target = model.value_norm.normalize(returns[perm[start + i]]);
                    const double d = V(0, i) - target;
                    loss += d * d;
                    up(0, i) = hp.c1 * 2.0 * d / B;
                }
                stats.critic_loss += loss / B;
                const NetGrads g = model.critic.backward_batch(cache, up);
                model.critic_opt.step(model.critic, g, adam);
            }

            // Actors: ascend clipped surrogate + entropy bonus.
            double mb_kl = 0.0;
            for (int a = 0; a < num_actors; ++a) {
                GaussianPolicy& pol = model.actors[a];
                const int adim = pol.action_dim();
                Eigen::MatrixXd X(pol.net.input_dim(), B);
                for (int i = 0; i < B; ++i) X.col(i) = buffer[perm[start + i]].obs[a];
                DenseNet::BatchCache cache;
                const Eigen::MatrixXd M = pol.net.forward_batch(X, &cache);

                Eigen::MatrixXd up = Eigen::MatrixXd::Zero(adim, B);
                Eigen::ArrayXd dlogstd = Eigen::ArrayXd::Zero(adim);
                double surrogate = 0.0, kl = 0.0, clipped = 0.0;
                for (int i = 0; i < B; ++i) {
                    const Transition& tr = buffer[perm[start + i]];
                    const Eigen::VectorXd& act = tr.actions[a];
                    const double lp_new = pol.log_prob(M.col(i), act);
                    const double ratio = std::exp(lp_new - tr.log_probs[a]);
                    const double A = advn[i];
                    surrogate += ppo_clip_term(ratio, A, hp.clip_eps);
                    kl += tr.log_probs[a] - lp_new;
                    if (std::abs(ratio - 1.0) > hp.clip_eps) clipped += 1.0;
                    const bool pass = (A >= 0.0 && ratio <= 1.0 + hp.clip_eps)
                                      || (A < 0.0 && ratio >= 1.0 - hp.clip_eps);
                    if (!pass) continue;
                    const double coeff = ratio * A / B;
                    for (int d = 0; d < adim; ++d) {
                        const double sd = std::exp(pol.log_std[d]);
                        const double z = (act[d] - M(d, i)) / sd;
                        up(d, i) = -coeff * z / sd;  // descend -(surrogate)
                        dlogstd[d] += coeff * (z * z - 1.0);
                    }
                }
                dlogstd += hp.c2;  // dH/dlog_std = 1 per dim
                const NetGrads g = pol.net.backward_batch(cache, up);
                model.actor_opt[a].step(pol.net, g, adam);
                Eigen::ArrayXd neg = -dlogstd;
                adam_step(flat(pol.log_std), neg, model.log_std_opt[a], adam);
                for (int d = 0; d < adim; ++d) {
                    pol.log_std[d] = std::clamp(pol.log_std[d], -10.0, 2.0);
                }

                stats.actor_loss += surrogate / B;
                stats.entropy += pol.entropy();
                stats.clip_fraction += clipped / B;
                mb_kl += kl / B;
            }
            mb_kl /= num_actors;
            stats.kl += mb_kl;
            ++stats.minibatches;
            if (mb_kl > hp.kl_stop) {
                stats.early_stopped = true;
                stop = true;
            }
        }
    }
    if (stats.minibatches > 0) {
        const double n = stats.minibatches;
        stats.actor_loss /= n * num_actors;
        stats.critic_loss /= n;
        stats.entropy /= n * num_actors;
        stats.clip_fraction /= n * num_actors;
        stats.kl /= n;
    }
    return stats;
}

inline void save_checkpoint(const MappoModel& model, const std::string& path,
                            const std::string& rng_state = "") {
    BinaryWriter w(path);
    w.str("RFSCKPT1");
    auto write_net = [&](const DenseNet& net) {
        w.u64(net.layers.size());
        for (const auto& l : net.layers) {
            w.matrix(l.W);
            w.vector(l.b);
            w.i64(l.act == Activation::relu ? 1 : 0);
        }
    };
    auto write_net_adam = [&](const NetAdam& o) {
        w.u64(o.w_states.size());
        for (std::size_t i = 0; i < o.w_states.size(); ++i) {
            w.array(o.w_states[i].m);
            w.array(o.w_states[i].v);
            w.i64(o.w_states[i].t);
            w.array(o.b_states[i].m);
            w.array(o.b_states[i].v);
            w.i64(o.b_states[i].t);
        }
    };
    w.u64(model.actors.size());
    for (std::size_t a = 0; a < model.actors.size(); ++a) {
        write_net(model.actors[a].net);
        w.vector(model.actors[a].log_std);
        write_net_adam(model.actor_opt[a]);
        w.array(model.log_std_opt[a].m);
        w.array(model.log_std_opt[a].v);
        w.i64(model.log_std_opt[a].t);
    }
    write_net(model.critic);
    write_net_adam(model.critic_opt);
    w.f64(model.value_norm.count);
    w.f64(model.value_norm.mean);
    w.f64(model.value_norm.m2);
    w.str(rng_state);
}

inline MappoModel load_checkpoint(const std::string& path, std::string* rng_state = nullptr) {
    BinaryReader r(path);
    if (r.str() != "RFSCKPT1") throw std::runtime_error("checkpoint: bad magic");
    auto read_net = [&]() {
        DenseNet net;
        const auto n = r.u64();
        for (std::uint64_t i = 0; i < n; ++i) {
            DenseLayer l;
            l.W = r.matrix();
            l.b = r.vector();
            l.act = r.i64() == 1 ? Activation::relu : Activation::identity;
            net.layers.push_back(std::move(l));
        }
        return net;
    };
    auto read_net_adam = [&]() {
        NetAdam o;
        const auto n = r.u64();
        o.w_states.resize(n);
        o.b_states.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            o.w_states[i].m = r.array();
            o.w_states[i].v = r.array();
            o.w_states[i].t = r.i64();
            o.b_states[i].m = r.array();
            o.b_states[i].v = r.array();
            o.b_states[i].t = r.i64();
        }
        return o;
    };
    MappoModel m;
    const auto actors = r.u64();
    for (std::uint64_t a = 0; a < actors; ++a) {
        GaussianPolicy p;
        p.net = read_net();
        p.log_std = r.vector();
        m.actors.push_back(std::move(p));
        m.actor_opt.push_back(read_net_adam());
        AdamState ls;
        ls.m = r.array();
        ls.v = r.array();
        ls.t = r.i64();
        m.log_std_opt.push_back(std::move(ls));
    }
    m.critic = read_net();
    m.critic_opt = read_net_adam();
    m.value_norm.count = r.f64();
    m.value_norm.mean = r.f64();
    m.value_norm.m2 = r.f64();
    const std::string rs = r.str();
    if (rng_state) *rng_state = rs;
    return m;
}

enum class TrainMode { multi_agent, single_agent, column_ma };

struct TrainOptions {
    std::uint64_t seed = 1;
    std::string metrics_csv;      // per-episode metrics stream, empty = off
    std::string checkpoint_path;  // final checkpoint, empty = off
    int checkpoint_every = 0;     // episodes; 0 = final only
};

struct TrainResult {
    std::vector<double> episode_mean_reward;
    UpdateStats last_update;
    int updates = 0;
};

namespace detail {

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    Eigen::VectorXd x(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) x[i] = v[i];
    return x;
}

}  // namespace detail

// Collects full episodes into the rollout buffer and updates whenever it is
// full. In single_agent mode the lone actor observes the global state and
// emits one displacement per agent slot of the environment.
inline TrainResult train(Environment& env, MappoModel& model, const Hyperparameters& hp,
                         TrainMode mode, const TrainOptions& opt) {
    hp.validate();
    const bool single = (mode == TrainMode::single_agent);
    const int L = env.config().num_agents;
    TrajectoryBuffer buffer(static_cast<std::size_t>(hp.buffer));
    Rng rng(derive_seed(opt.seed, 0x7261696e));
    TrainResult result;

    std::ofstream metrics;
    if (!opt.metrics_csv.empty()) {
        ensure_parent_dir(opt.metrics_csv);
        metrics.open(opt.metrics_csv);
        metrics << "episode,mean_reward,actor_loss,critic_loss,entropy,clip_fraction,kl\n";
    }

    UpdateStats last{};
    for (int ep = 0; ep < hp.episodes; ++ep) {
        env.reset(derive_seed(opt.seed, static_cast<std::uint64_t>(ep) + 1));
        double ep_reward = 0.0;
        int steps = 0;
        bool done = false;
        while (!done) {
            Snapshot snap = env.snapshot();
            Transition tr;
            tr.global_state = detail::to_eigen(snap.global_state);
            tr.value = model.value_of(tr.global_state);
            std::vector<Vec3> actions(L);
            if (single) {
                const auto s = model.actors[0].sample(tr.global_state, rng);
                tr.obs.push_back(tr.global_state);
                tr.actions.push_back(s.action);
                tr.log_probs.push_back(s.log_prob);
                for (int l = 0; l < L; ++l) {
                    actions[l] = {s.action[3 * l], s.action[3 * l + 1], s.action[3 * l + 2]};
                }
            } else {
                for (int l = 0; l < L; ++l) {
                    const auto obs = detail::to_eigen(snap.agent_obs[l]);
                    const auto s = model.actors[l].sample(obs, rng);
                    tr.obs.push_back(obs);
                    tr.actions.push_back(s.action);
                    tr.log_probs.push_back(s.log_prob);
                    actions[l] = {s.action[0], s.action[1], s.action[2]};
                }
            }
            const StepResult sr = env.step(actions);
            tr.reward = sr.reward;
            tr.done = sr.done;
            done = sr.done;
            ep_reward += sr.reward;
            ++steps;
            buffer.add(std::move(tr));
        }
        result.episode_mean_reward.push_back(ep_reward / std::max(steps, 1));

        if (buffer.full()) {
            last = mappo_update(model, buffer, hp, rng);
            buffer.clear();
            ++result.updates;
        }
        if (metrics.is_open()) {
            metrics << ep << "," << fmt_double(result.episode_mean_reward.back(), 6) << ","
                    << fmt_double(last.actor_loss, 6) << "," << fmt_double(last.critic_loss, 6)
                    << "," << fmt_double(last.entropy, 6) << ","
                    << fmt_double(last.clip_fraction, 6) << "," << fmt_double(last.kl, 6)
                    << "\n";
        }
        if (!opt.checkpoint_path.empty() && opt.checkpoint_every > 0
            && (ep + 1) % opt.checkpoint_every == 0) {
            save_checkpoint(model, opt.checkpoint_path, rng.serialize());
        }
    }
    if (!opt.checkpoint_path.empty()) save_checkpoint(model, opt.checkpoint_path, rng.serialize());
    result.last_update = last;
    return result;
}

}  // namespace refsim
