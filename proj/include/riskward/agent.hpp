#pragma once

// Desk-scale policy-gradient trainer: linear Gaussian policy with tanh
// squashing, a linear value head, GAE advantages and the clipped surrogate
// objective, optimized by analytic stochastic gradient ascent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskward/env.hpp"

namespace riskward {

// min(r*A, clip(r, 1-eps, 1+eps)*A)
inline double ppo_clip_objective(double ratio, double advantage, double epsilon = 0.2) {
    if (ratio <= 0.0) throw std::domain_error("ppo_clip_objective: nonpositive ratio");
    if (epsilon <= 0.0 || epsilon >= 1.0) {
        throw std::invalid_argument("ppo_clip_objective: epsilon must be in (0, 1)");
    }
    double clipped = std::min(std::max(ratio, 1.0 - epsilon), 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

// Generalized advantage estimates. values has one trailing bootstrap entry
// (values.size() == rewards.size() + 1); pass zeros for a value-free run.
inline std::vector<double> advantages(const std::vector<double>& rewards,
                                      const std::vector<double>& values, double gamma,
                                      double lambda) {
    if (values.size() != rewards.size() + 1) {
        throw std::invalid_argument("advantages: values must have length rewards+1");
    }
    if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0) {
        throw std::invalid_argument("advantages: gamma and lambda must be in [0, 1]");
    }
    std::vector<double> adv(rewards.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        double delta = rewards[i] + gamma * values[i + 1] - values[i];
        acc = delta + gamma * lambda * acc;
        adv[i] = acc;
    }
    return adv;
}

// Linear map state -> per-asset Gaussian mean, learnable per-asset log-std,
// tanh squashing into [-1,1]. Parameter layout: W (n x d) row-major, b (n),
// log_std (n); count = (d+1)*n + n.
class Policy {
public:
    Policy(std::size_t state_dim, std::size_t stock_dim)
        : d_(state_dim), n_(stock_dim), params_((state_dim + 1) * stock_dim + stock_dim, 0.0) {
        for (std::size_t i = 0; i < n_; ++i) log_std()[i] = std::log(0.5);
    }

    std::size_t state_dim() const { return d_; }
    std::size_t stock_dim() const { return n_; }
    std::size_t param_count() const { return params_.size(); }
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    // Fixed per-feature scales applied before the linear map so that raw
    // currency-sized state entries do not swamp the optimizer.
    void set_feature_scales(std::vector<double> scales) {
        if (scales.size() != d_) throw std::invalid_argument("bad feature scale length");
        scales_ = std::move(scales);
    }

    std::vector<double> features(const std::vector<double>& state) const {
        if (state.size() != d_) throw std::invalid_argument("policy: state length mismatch");
        std::vector<double> f = state;
        if (!scales_.empty()) {
            for (std::size_t i = 0; i < d_; ++i) f[i] *= scales_[i];
        }
        return f;
    }

    std::vector<double> mean(const std::vector<double>& feat) const {
        std::vector<double> m(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = bias()[i];
            const double* row = weights() + i * d_;
            for (std::size_t j = 0; j < d_; ++j) acc += row[j] * feat[j];
            m[i] = acc;
        }
        return m;
    }

    struct Sample {
        std::vector<double> pre_squash;  // z
        std::vector<double> action;      // tanh(z)
        double log_prob = 0.0;
    };

    Sample sample(const std::vector<double>& feat, std::mt19937_64& rng) const {
        std::normal_distribution<double> normal(0.0, 1.0);
        Sample s;
        auto m = mean(feat);
        s.pre_squash.resize(n_);
        s.action.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double sd = std::exp(log_std()[i]);
            s.pre_squash[i] = m[i] + sd * normal(rng);
            s.action[i] = std::tanh(s.pre_squash[i]);
        }
        s.log_prob = log_prob(feat, s.pre_squash);
        return s;
    }

    std::vector<double> deterministic_action(const std::vector<double>& feat) const {
        auto m = mean(feat);
        for (double& v : m) v = std::tanh(v);
        return m;
    }

    // Density of the squashed action evaluated through the stored pre-squash
    // sample; includes the tanh change-of-variables term.
    double log_prob(const std::vector<double>& feat, const std::vector<double>& z) const {
        static const double log_sqrt_2pi = 0.5 * std::log(2.0 * M_PI);
        auto m = mean(feat);
        double lp = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double ls = log_std()[i];
            double sd = std::exp(ls);
            double u = (z[i] - m[i]) / sd;
            lp += -0.5 * u * u - ls - log_sqrt_2pi;
            double a = std::tanh(z[i]);
            lp -= std::log(std::max(1.0 - a * a, 1e-12));
        }
        return lp;
    }

    // grad of log_prob w.r.t. parameters, accumulated as coeff * grad into out
    void accumulate_log_prob_grad(const std::vector<double>& feat,
                                  const std::vector<double>& z, double coeff,
                                  std::vector<double>& out) const {
        auto m = mean(feat);
        for (std::size_t i = 0; i < n_; ++i) {
            double ls = log_std()[i];
            double inv_var = std::exp(-2.0 * ls);
            double dm = (z[i] - m[i]) * inv_var;  // d logp / d mean_i
            double* wrow = out.data() + i * d_;
            for (std::size_t j = 0; j < d_; ++j) wrow[j] += coeff * dm * feat[j];
            out[n_ * d_ + i] += coeff * dm;  // bias
            double u = (z[i] - m[i]);
            out[n_ * d_ + n_ + i] += coeff * (u * u * inv_var - 1.0);  // log_std
        }
    }

    double* weights() { return params_.data(); }
    const double* weights() const { return params_.data(); }
    double* bias() { return params_.data() + n_ * d_; }
    const double* bias() const { return params_.data() + n_ * d_; }
    double* log_std() { return params_.data() + n_ * d_ + n_; }
    const double* log_std() const { return params_.data() + n_ * d_ + n_; }

private:
    std::size_t d_, n_;
    std::vector<double> params_;
    std::vector<double> scales_;
};

// Linear value head, fit by SGD regression on reward-to-go targets.
class ValueHead {
public:
    explicit ValueHead(std::size_t state_dim) : d_(state_dim), params_(state_dim + 1, 0.0) {}

    double value(const std::vector<double>& feat) const {
        double acc = params_[d_];
        for (std::size_t j = 0; j < d_; ++j) acc += params_[j] * feat[j];
        return acc;
    }

    void sgd_step(const std::vector<double>& feat, double target, double lr) {
        double err = value(feat) - target;
        for (std::size_t j = 0; j < d_; ++j) params_[j] -= lr * err * feat[j];
        params_[d_] -= lr * err;
    }

    std::vector<double>& parameters() { return params_; }

private:
    std::size_t d_;
    std::vector<double> params_;
};

struct Trajectory {
    std::vector<std::vector<double>> features;
    std::vector<std::vector<double>> pre_squash;
    std::vector<std::vector<double>> actions;
    std::vector<double> rewards;
    std::vector<double> log_probs;
    std::vector<double> advantage;
    std::vector<double> value_targets;
};

struct TrainHyperparameters {
    std::size_t iterations = 200;
    std::size_t epochs = 4;
    double learning_rate = 0.05;
    double lr_decay = 0.995;          // multiplicative per iteration
    double value_learning_rate = 1e-3;
    double gamma = 0.99;
    double lambda = 0.95;
    double clip_epsilon = 0.2;
    std::uint64_t seed = 0;
    bool normalize_advantages = true;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double mean_reward = 0.0;   // mean episode composite reward
    double objective = 0.0;     // mean clipped surrogate at epoch end
    double step_size = 0.0;
};

struct TrainReport {
    std::vector<IterationRecord> iterations;
    double final_mean_reward = 0.0;
    double last_quartile_slope = 0.0;  // diminishing-gains statistic
    std::uint64_t seed = 0;
    bool diverged = false;
};

namespace detail {

inline double linear_slope(const std::vector<double>& y) {
    if (y.size() < 2) return 0.0;
    double n = static_cast<double>(y.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double x = static_cast<double>(i);
        sx += x; sy += y[i]; sxx += x * x; sxy += x * y[i];
    }
    double denom = n * sxx - sx * sx;
    return denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

}  // namespace detail

class PpoTrainer {
public:
    PpoTrainer(TradingEnv& env, Policy& policy, TrainHyperparameters hp)
        : env_(env), policy_(policy), value_(policy.state_dim()), hp_(std::move(hp)),
          rng_(hp_.seed) {}

    TrainReport train(std::size_t window_start, std::size_t window_end) {
        TrainReport report;
        report.seed = hp_.seed;
        double lr = hp_.learning_rate;

        for (std::size_t it = 0; it < hp_.iterations; ++it) {
            Trajectory traj = collect(window_start, window_end);
            compute_advantages(traj);

            double objective = 0.0;
            for (std::size_t epoch = 0; epoch < hp_.epochs; ++epoch) {
                objective = update_policy(traj, lr);
                if (std::isnan(objective)) {
                    report.diverged = true;
                    return report;
                }
            }
            update_value(traj);

            double episode_reward =
                std::accumulate(traj.rewards.begin(), traj.rewards.end(), 0.0);
            report.iterations.push_back({it, episode_reward, objective, lr});
            lr *= hp_.lr_decay;
        }

        if (!report.iterations.empty()) {
            report.final_mean_reward = mean_of_tail(report.iterations, 10);
            std::vector<double> tail;
            std::size_t q = std::max<std::size_t>(2, report.iterations.size() / 4);
            for (std::size_t i = report.iterations.size() - q; i < report.iterations.size(); ++i) {
                tail.push_back(report.iterations[i].mean_reward);
            }
            report.last_quartile_slope = detail::linear_slope(tail);
        }
        return report;
    }

    Trajectory collect(std::size_t window_start, std::size_t window_end) {
        Trajectory traj;
        EnvState s = env_.reset(window_start, window_end);
        bool done = false;
        while (!done) {
            auto feat = policy_.features(s.flatten());
            auto sample = policy_.sample(feat, rng_);
            StepOutcome out = env_.step(sample.action);
            traj.features.push_back(std::move(feat));
            traj.pre_squash.push_back(std::move(sample.pre_squash));
            traj.actions.push_back(std::move(sample.action));
            traj.rewards.push_back(out.reward);
            traj.log_probs.push_back(sample.log_prob);
            done = out.done;
            s = out.state;
        }
        return traj;
    }

    void compute_advantages(Trajectory& traj) {
        std::vector<double> values;
        values.reserve(traj.rewards.size() + 1);
        for (const auto& f : traj.features) values.push_back(value_.value(f));
        values.push_back(0.0);  // terminal bootstrap
        traj.advantage = advantages(traj.rewards, values, hp_.gamma, hp_.lambda);

        traj.value_targets.resize(traj.rewards.size());
        for (std::size_t i = 0; i < traj.rewards.size(); ++i) {
            traj.value_targets[i] = traj.advantage[i] + values[i];
        }

        if (hp_.normalize_advantages && traj.advantage.size() >= 2) {
            double mean = std::accumulate(traj.advantage.begin(), traj.advantage.end(), 0.0) /
                          traj.advantage.size();
            double var = 0.0;
            for (double a : traj.advantage) var += (a - mean) * (a - mean);
            var /= traj.advantage.size();
            double sd = std::sqrt(var) + 1e-8;
            for (double& a : traj.advantage) a = (a - mean) / sd;
        }
    }

    // one gradient-ascent step over the whole batch; returns mean objective
    double update_policy(const Trajectory& traj, double lr) {
        const std::size_t T = traj.rewards.size();
        std::vector<double> grad(policy_.param_count(), 0.0);
        double objective = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            double lp_new = policy_.log_prob(traj.features[t], traj.pre_squash[t]);
            // exp can underflow to 0 after a large parameter move; keep the
            // ratio strictly positive so the surrogate stays defined
            double ratio = std::max(std::exp(lp_new - traj.log_probs[t]), 1e-300);
            double adv = traj.advantage[t];
            objective += ppo_clip_objective(ratio, adv, hp_.clip_epsilon);
            // zero-gradient region of the clipped surrogate
            bool clipped_out = (adv > 0.0 && ratio > 1.0 + hp_.clip_epsilon) ||
                               (adv < 0.0 && ratio < 1.0 - hp_.clip_epsilon);
            if (clipped_out) continue;
            policy_.accumulate_log_prob_grad(traj.features[t], traj.pre_squash[t],
                                             adv * ratio, grad);
        }
        double scale = lr / static_cast<double>(T);
        for (std::size_t k = 0; k < grad.size(); ++k) policy_.parameters()[k] += scale * grad[k];
        return objective / static_cast<double>(T);
    }

    void update_value(const Trajectory& traj) {
        for (std::size_t t = 0; t < traj.rewards.size(); ++t) {
            value_.sgd_step(traj.features[t], traj.value_targets[t], hp_.value_learning_rate);
        }
    }

    ValueHead& value_head() { return value_; }

private:
    static double mean_of_tail(const std::vector<IterationRecord>& recs, std::size_t k) {
        std::size_t n = std::min(k, recs.size());
        double s = 0.0;
        for (std::size_t i = recs.size() - n; i < recs.size(); ++i) s += recs[i].mean_reward;
        return s / static_cast<double>(n);
    }

    TradingEnv& env_;
    Policy& policy_;
    ValueHead value_;
    TrainHyperparameters hp_;
    std::mt19937_64 rng_;
};

enum class BaselineKind { BuyAndHold, Random, Flat, GreedyComposite };

inline BaselineKind baseline_kind_from_string(const std::string& s) {
    if (s == "buy_and_hold") return BaselineKind::BuyAndHold;
    if (s == "random") return BaselineKind::Random;
    if (s == "flat") return BaselineKind::Flat;
    if (s == "greedy") return BaselineKind::GreedyComposite;
    throw std::invalid_argument("unknown baseline policy '" + s + "'");
}

// Fixed reference actors. buy_and_hold spreads a maximal buy across assets at
// t = 0 and holds; greedy retargets each step toward the asset with the best
// trailing composite score under the configured weights.
class BaselineActor {
public:
    BaselineActor(BaselineKind kind, std::size_t stock_dim, std::uint64_t seed = 0,
                  const AlignedPanel* panel = nullptr, const RewardWeights* weights = nullptr,
                  const MetricContext* ctx = nullptr, std::size_t window_start = 0,
                  int greedy_lookback = 20)
        : kind_(kind), n_(stock_dim), rng_(seed), panel_(panel), weights_(weights),
          ctx_(ctx), window_start_(window_start), lookback_(greedy_lookback) {
        if (kind_ == BaselineKind::GreedyComposite &&
            (panel_ == nullptr || weights_ == nullptr || ctx_ == nullptr)) {
            throw std::invalid_argument("greedy baseline needs panel, weights and context");
        }
    }

    std::vector<double> operator()(const std::vector<double>& /*state*/) {
        std::vector<double> a(n_, 0.0);
        switch (kind_) {
            case BaselineKind::Flat:
                break;
            case BaselineKind::BuyAndHold:
                if (step_ == 0) a.assign(n_, 1.0);
                break;
            case BaselineKind::Random: {
                std::uniform_real_distribution<double> u(-1.0, 1.0);
                for (double& v : a) v = u(rng_);
                break;
            }
            case BaselineKind::GreedyComposite: {
                std::size_t best = greedy_pick();
                for (std::size_t i = 0; i < n_; ++i) a[i] = (i == best) ? 1.0 : -1.0;
                break;
            }
        }
        ++step_;
        return a;
    }

private:
    // Per-asset composite score over the trailing lookback of panel returns
    // ending just before the current step.
    std::size_t greedy_pick() const {
        std::size_t t = window_start_ + step_;
        std::size_t lb = std::min<std::size_t>(lookback_, t);
        if (lb < 2) return 0;
        std::size_t best = 0;
        double best_score = -1e300;
        for (std::size_t asset = 0; asset < n_; ++asset) {
            std::vector<double> r, b, m;
            for (std::size_t j = t - lb; j < t; ++j) {
                r.push_back(panel_->asset_returns[asset][j]);
                b.push_back(panel_->benchmark_returns[j]);
                m.push_back(panel_->market_returns[j]);
            }
            double score = prefix_composite(r, b, m, *weights_, *ctx_,
                                            AnnualizationMode::Approx);
            if (score > best_score) {
                best_score = score;
                best = asset;
            }
        }
        return best;
    }

    BaselineKind kind_;
    std::size_t n_;
    std::mt19937_64 rng_;
    std::size_t step_ = 0;
    const AlignedPanel* panel_;
    const RewardWeights* weights_;
    const MetricContext* ctx_;
    std::size_t window_start_;
    int lookback_;
};

// Checkpoint format: one header line `riskward-checkpoint d stock_dim seed`
// followed by the flat parameter vector, one value per line, full precision.
inline void save_checkpoint(std::ostream& out, const Policy& policy, std::uint64_t seed) {
    out << "riskward-checkpoint " << policy.state_dim() << ' ' << policy.stock_dim() << ' '
        << seed << '\n';
    char buf[64];
    for (double v : policy.parameters()) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        out << buf;
    }
}

struct Checkpoint {
    std::size_t state_dim = 0;
    std::size_t stock_dim = 0;
    std::uint64_t seed = 0;
    std::vector<double> parameters;
};

inline Checkpoint load_checkpoint(std::istream& in) {
    Checkpoint c;
    std::string magic;
    in >> magic >> c.state_dim >> c.stock_dim >> c.seed;
    if (in.fail() || magic != "riskward-checkpoint") {
        throw std::runtime_error("bad checkpoint header");
    }
    std::size_t count = (c.state_dim + 1) * c.stock_dim + c.stock_dim;
    c.parameters.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        in >> c.parameters[i];
        if (in.fail()) throw std::runtime_error("truncated checkpoint");
    }
    return c;
}

}  // namespace riskward
