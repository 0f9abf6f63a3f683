#pragma once

// Minimal dense feedforward networks with exact reverse-mode gradients, the
// Adam optimizer, and a diagonal-Gaussian policy head. Everything is double
// precision and deterministic given the Rng.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "refsim/rng.hpp"

namespace refsim {

enum class Activation { relu, identity };

struct DenseLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;
    Activation act = Activation::identity;
};

// Gain-scaled orthogonal initialization (QR of a Gaussian matrix).
inline Eigen::MatrixXd orthogonal_init(int rows, int cols, double gain, Rng& rng) {
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    Eigen::MatrixXd a(big, small);
    for (int j = 0; j < small; ++j) {
        for (int i = 0; i < big; ++i) a(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (int j = 0; j < small; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    Eigen::MatrixXd w = (rows >= cols) ? q : Eigen::MatrixXd(q.transpose());
    return gain * w;
}

struct NetGrads {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;
    Eigen::MatrixXd dX;  // input gradients, in_dim x batch

    Eigen::VectorXd dx() const { return dX.col(0); }
};

class DenseNet {
public:
    std::vector<DenseLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }

    // Two ReLU hidden layers by default; hidden gain sqrt(2), output gain
    // configurable (small for policy means).
    static DenseNet mlp(int in, const std::vector<int>& hidden, int out, Rng& rng,
                        double output_gain = 1.0) {
        DenseNet net;
        int prev = in;
        for (int h : hidden) {
            DenseLayer l;
            l.W = orthogonal_init(h, prev, std::sqrt(2.0), rng);
            l.b = Eigen::VectorXd::Zero(h);
            l.act = Activation::relu;
            net.layers.push_back(std::move(l));
            prev = h;
        }
        DenseLayer lo;
        lo.W = orthogonal_init(out, prev, output_gain, rng);
        lo.b = Eigen::VectorXd::Zero(out);
        lo.act = Activation::identity;
        net.layers.push_back(std::move(lo));
        return net;
    }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
        check_input(x.size());
        Eigen::VectorXd h = x;
        for (const DenseLayer& l : layers) {
            h = (l.W * h + l.b).eval();
            if (l.act == Activation::relu) h = h.cwiseMax(0.0);
        }
        return h;
    }

    struct BatchCache {
        std::vector<Eigen::MatrixXd> acts;     // acts[0] = input, acts[i] = layer i output
        std::vector<Eigen::MatrixXd> preacts;  // pre-activation per layer
    };

    // X is in_dim x batch.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X, BatchCache* cache = nullptr) const {
        check_input(X.rows());
        Eigen::MatrixXd h = X;
        if (cache) {
            cache->acts.clear();
            cache->preacts.clear();
            cache->acts.push_back(h);
        }
        for (const DenseLayer& l : layers) {
            Eigen::MatrixXd z = (l.W * h).colwise() + l.b;
            if (cache) cache->preacts.push_back(z);
            h = (l.act == Activation::relu) ? z.cwiseMax(0.0).eval() : std::move(z);
            if (cache) cache->acts.push_back(h);
        }
        return h;
    }

    // Sum of per-sample gradients; upstream is out_dim x batch.
    NetGrads backward_batch(const BatchCache& cache, const Eigen::MatrixXd& upstream) const {
        NetGrads g;
        g.dW.resize(layers.size());
        g.db.resize(layers.size());
        Eigen::MatrixXd delta = upstream;
        for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
            const DenseLayer& l = layers[i];
            if (l.act == Activation::relu) {
                delta = delta.cwiseProduct(
                    (cache.preacts[i].array() > 0.0).cast<double>().matrix());
            }
            g.dW[i] = delta * cache.acts[i].transpose();
            g.db[i] = delta.rowwise().sum();
            delta = (l.W.transpose() * delta).eval();
        }
        g.dX = std::move(delta);
        return g;
    }

    // Exact reverse-mode gradients of forward for a single sample.
    NetGrads grad(const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) const {
        if (upstream.size() != output_dim()) {
            throw std::invalid_argument("DenseNet::grad: upstream dimension mismatch");
        }
        BatchCache cache;
        forward_batch(x, &cache);
        return backward_batch(cache, upstream);
    }

    NetGrads zero_grads() const {
        NetGrads g;
        for (const DenseLayer& l : layers) {
            g.dW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
            g.db.push_back(Eigen::VectorXd::Zero(l.b.size()));
        }
        g.dX = Eigen::MatrixXd::Zero(input_dim(), 1);
        return g;
    }

private:
    void check_input(Eigen::Index n) const {
        if (layers.empty()) throw std::invalid_argument("DenseNet: empty network");
        if (n != layers.front().W.cols()) {
            throw std::invalid_argument("DenseNet: input dimension mismatch");
        }
    }
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment state for one parameter tensor.
struct AdamState {
    Eigen::ArrayXd m;
    Eigen::ArrayXd v;
    long t = 0;

    void init(Eigen::Index n) {
        m = Eigen::ArrayXd::Zero(n);
        v = Eigen::ArrayXd::Zero(n);
        t = 0;
    }
};

// Standard bias-corrected Adam update, in place.
inline void adam_step(Eigen::Map<Eigen::ArrayXd> param, const Eigen::ArrayXd& grad,
                      AdamState& state, const AdamConfig& cfg) {
    if (param.size() != grad.size() || param.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    state.t += 1;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.square();
    const double mc = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double vc = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    param -= cfg.lr * (state.m / mc) / ((state.v / vc).sqrt() + cfg.epsilon);
}

inline Eigen::Map<Eigen::ArrayXd> flat(Eigen::MatrixXd& m) {
    return Eigen::Map<Eigen::ArrayXd>(m.data(), m.size());
}
inline Eigen::Map<Eigen::ArrayXd> flat(Eigen::VectorXd& v) {
    return Eigen::Map<Eigen::ArrayXd>(v.data(), v.size());
}
inline Eigen::ArrayXd flat_copy(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::ArrayXd>(m.data(), m.size());
}
inline Eigen::ArrayXd flat_copy(const Eigen::VectorXd& v) {
    return Eigen::Map<const Eigen::ArrayXd>(v.data(), v.size());
}

// Adam across all tensors of one DenseNet.
struct NetAdam {
    std::vector<AdamState> w_states;
    std::vector<AdamState> b_states;

    void init(const DenseNet& net) {
        w_states.resize(net.layers.size());
        b_states.resize(net.layers.size());
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            w_states[i].init(net.layers[i].W.size());
            b_states[i].init(net.layers[i].b.size());
        }
    }

    void step(DenseNet& net, const NetGrads& grads, const AdamConfig& cfg) {
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            adam_step(flat(net.layers[i].W), flat_copy(grads.dW[i]), w_states[i], cfg);
            adam_step(flat(net.layers[i].b), flat_copy(grads.db[i]), b_states[i], cfg);
        }
    }
};

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Diagonal Gaussian policy: mean from the net, state-independent learnable
// log standard deviations.
struct GaussianPolicy {
    DenseNet net;
    Eigen::VectorXd log_std;

    int action_dim() const { return static_cast<int>(log_std.size()); }

    struct Sample {
        Eigen::VectorXd action;
        double log_prob = 0.0;
    };

    // log density of the pre-clip sample under N(mean, diag(exp(log_std))^2).
    double log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& action) const {
        double lp = 0.0;
        for (Eigen::Index i = 0; i < log_std.size(); ++i) {
            const double s = std::exp(log_std[i]);
            const double z = (action[i] - mean[i]) / s;
            lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
        }
        return lp;
    }

    Sample sample(const Eigen::VectorXd& obs, Rng& rng) const {
        const Eigen::VectorXd mean = net.forward(obs);
        Eigen::VectorXd a(mean.size());
        for (Eigen::Index i = 0; i < mean.size(); ++i) {
            a[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
        }
        return {a, log_prob(mean, a)};
    }

    Eigen::VectorXd mean_action(const Eigen::VectorXd& obs) const { return net.forward(obs); }

    // sum_d 0.5 ln(2 pi e sigma_d^2); independent of the mean.
    double entropy() const {
        double h = 0.0;
        for (Eigen::Index i = 0; i < log_std.size(); ++i) {
            h += 0.5 * (kLog2Pi + 1.0) + log_std[i];
        }
        return h;
    }
};

inline GaussianPolicy make_gaussian_policy(int obs_dim, int action_dim, int hidden, Rng& rng,
                                           double init_std) {
    GaussianPolicy p;
    p.net = DenseNet::mlp(obs_dim, {hidden, hidden}, action_dim, rng, 0.01);
    p.log_std = Eigen::VectorXd::Constant(action_dim, std::log(init_std));
    return p;
}

}  // namespace refsim
