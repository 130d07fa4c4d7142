#pragma once

// Deterministic multi-asset daily trading environment: [-1,1]^n actions
// scaled by h_max, integer share fills, 0.1% transaction costs, composite
// reward emitted either terminally or potential-shaped (telescoping).

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskward/indicators.hpp"
#include "riskward/marketdata.hpp"
#include "riskward/metrics.hpp"
#include "riskward/reward.hpp"

namespace riskward {

enum class RewardMode { Terminal, Potential };

struct EnvConfig {
    double initial_amount = 1e6;
    double transaction_cost_rate = 0.001;
    std::vector<std::string> indicator_names = IndicatorConfig::names();
    RewardWeights weights;
    MetricContext metric_ctx;
    RewardMode reward_mode = RewardMode::Potential;
    AnnualizationMode ann_mode = AnnualizationMode::Approx;

    void validate(std::size_t stock_dim) const {
        if (initial_amount <= 0.0) throw std::invalid_argument("initial_amount must be > 0");
        if (transaction_cost_rate < 0.0 || transaction_cost_rate > 0.1) {
            throw std::invalid_argument("transaction cost rate must be in [0, 0.1]");
        }
        if (stock_dim < 1) throw std::invalid_argument("need at least one asset");
        weights.validate();
        metric_ctx.validate();
    }
};

inline long h_max(double initial_amount, double max_price) {
    if (max_price <= 0.0) throw std::invalid_argument("h_max: nonpositive max_price");
    return static_cast<long>(std::floor(initial_amount / max_price));
}

// d = 1 + 2*stock_dim + indicator_count*stock_dim
inline std::size_t state_dimension(std::size_t stock_dim, std::size_t indicator_count) {
    return 1 + 2 * stock_dim + indicator_count * stock_dim;
}

struct EnvState {
    double portfolio_value = 0.0;
    double cash = 0.0;
    std::vector<long> holdings;
    std::vector<double> prices;
    std::vector<double> indicator_block;  // per asset, configured order
    std::size_t t = 0;

    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(1 + 2 * holdings.size() + indicator_block.size());
        out.push_back(portfolio_value);
        for (long h : holdings) out.push_back(static_cast<double>(h));
        for (double p : prices) out.push_back(p);
        for (double v : indicator_block) out.push_back(v);
        return out;
    }
};

struct StepOutcome {
    EnvState state;
    double reward = 0.0;
    bool done = false;
    std::vector<long> fills;          // signed executed shares per asset
    double fees = 0.0;
    double portfolio_return = 0.0;    // R_pt for this step
    std::vector<double> trade_pnls;   // realized on sells this step
};

// Composite reward over a realized-return prefix. Empty prefix reads 0; a
// single point has beta-dependent terms 0 by convention.
inline double prefix_composite(const std::vector<double>& realized,
                               const std::vector<double>& benchmark,
                               const std::vector<double>& market,
                               const RewardWeights& weights, const MetricContext& ctx,
                               AnnualizationMode mode) {
    if (realized.empty()) return 0.0;
    ReturnSeries p{realized};
    ReturnSeries b{std::vector<double>(benchmark.begin(), benchmark.begin() + realized.size())};
    ReturnSeries m{std::vector<double>(market.begin(), market.begin() + realized.size())};
    return composite_reward(p, b, m, weights, ctx, mode).total;
}

class TradingEnv {
public:
    TradingEnv(const AlignedPanel& panel, EnvConfig config,
               const IndicatorSet* indicators = nullptr)
        : panel_(panel), config_(std::move(config)), indicators_(indicators) {
        config_.validate(panel.num_assets());
        n_ = panel.num_assets();
        for (const auto& name : config_.indicator_names) {
            if (indicators_ == nullptr) {
                throw std::invalid_argument("indicator '" + name +
                                            "' configured but no indicator set supplied");
            }
            (void)indicators_->per_asset.front().by_name(name);  // name check
        }
    }

    std::size_t stock_dim() const { return n_; }
    std::size_t dimension() const {
        return state_dimension(n_, config_.indicator_names.size());
    }
    long position_cap() const { return h_max_; }
    const EnvConfig& config() const { return config_; }
    std::size_t window_start() const { return start_; }
    std::size_t window_end() const { return end_; }
    const std::vector<double>& realized_returns() const { return realized_; }
    const std::vector<double>& trade_pnls() const { return all_trade_pnls_; }
    const std::vector<double>& equity_curve() const { return equity_; }
    double total_fees() const { return total_fees_; }

    // Window is [start, end] in panel indices; trading stops at `end`.
    EnvState reset(std::size_t start, std::size_t end) {
        if (end >= panel_.length() || start >= end) {
            throw std::invalid_argument("reset: window out of panel bounds");
        }
        std::size_t warm = indicators_ != nullptr && !config_.indicator_names.empty()
                               ? indicators_->first_live()
                               : 0;
        if (start < warm) {
            throw std::invalid_argument("reset: episode starts inside indicator warm-up");
        }
        start_ = start;
        end_ = end;
        double max_price = 0.0;
        for (std::size_t a = 0; a < n_; ++a) {
            for (std::size_t i = start; i <= end; ++i) {
                max_price = std::max(max_price, panel_.asset_closes[a][i]);
            }
        }
        h_max_ = h_max(config_.initial_amount, max_price);

        state_ = EnvState{};
        state_.cash = config_.initial_amount;
        state_.holdings.assign(n_, 0);
        state_.prices.resize(n_);
        for (std::size_t a = 0; a < n_; ++a) state_.prices[a] = panel_.asset_closes[a][start];
        state_.portfolio_value = config_.initial_amount;
        state_.t = 0;
        fill_indicators(start);
        avg_cost_.assign(n_, 0.0);
        realized_.clear();
        all_trade_pnls_.clear();
        equity_.assign(1, state_.portfolio_value);
        total_fees_ = 0.0;
        prev_prefix_reward_ = 0.0;
        done_ = false;
        return state_;
    }

    StepOutcome step(const std::vector<double>& action) {
        if (done_) throw std::logic_error("step: episode already done");
        if (action.size() != n_) throw std::invalid_argument("step: action length mismatch");
        for (double a : action) {
            if (std::isnan(a)) throw std::invalid_argument("step: NaN in action");
        }

        StepOutcome out;
        out.fills.assign(n_, 0);
        const double rate = config_.transaction_cost_rate;
        const double value_before = state_.cash + holdings_value();

        // sells first to free cash
        for (std::size_t i = 0; i < n_; ++i) {
            long desired = desired_shares(action[i]);
            if (desired >= 0) continue;
            long shares = std::min(-desired, state_.holdings[i]);
            if (shares == 0) continue;
            double notional = shares * state_.prices[i];
            double fee = notional * rate;
            state_.cash += notional - fee;
            state_.holdings[i] -= shares;
            out.fills[i] = -shares;
            out.fees += fee;
            out.trade_pnls.push_back((state_.prices[i] - avg_cost_[i]) * shares - fee);
        }
        // buys in ascending index, partial fill to the largest affordable count
        for (std::size_t i = 0; i < n_; ++i) {
            long desired = desired_shares(action[i]);
            if (desired <= 0) continue;
            double unit_cost = state_.prices[i] * (1.0 + rate);
            long affordable = static_cast<long>(std::floor(state_.cash / unit_cost));
            long shares = std::min(desired, affordable);
            if (shares <= 0) continue;
            double notional = shares * state_.prices[i];
            double fee = notional * rate;
            state_.cash -= notional + fee;
            long prev = state_.holdings[i];
            avg_cost_[i] = (avg_cost_[i] * prev + notional + fee) / (prev + shares);
            state_.holdings[i] += shares;
            out.fills[i] = shares;
            out.fees += fee;
        }
        total_fees_ += out.fees;
        for (double pnl : out.trade_pnls) all_trade_pnls_.push_back(pnl);

        // advance prices to the next panel index
        std::size_t next = start_ + state_.t + 1;
        for (std::size_t a = 0; a < n_; ++a) state_.prices[a] = panel_.asset_closes[a][next];
        fill_indicators(next);
        state_.t += 1;
        state_.portfolio_value = state_.cash + holdings_value();
        out.portfolio_return = (state_.portfolio_value - value_before) / value_before;
        realized_.push_back(out.portfolio_return);
        equity_.push_back(state_.portfolio_value);

        out.done = (next == end_);
        done_ = out.done;
        out.reward = compute_reward(out.done);
        out.state = state_;
        return out;
    }

    const EnvState& state() const { return state_; }

    // benchmark/market return slices matching realized_ indexing
    std::vector<double> benchmark_slice() const { return slice(panel_.benchmark_returns); }
    std::vector<double> market_slice() const { return slice(panel_.market_returns); }

private:
    long desired_shares(double a) const {
        double clipped = std::max(-1.0, std::min(1.0, a));
        return static_cast<long>(std::llround(clipped * static_cast<double>(h_max_)));
    }

    double holdings_value() const {
        double v = 0.0;
        for (std::size_t a = 0; a < n_; ++a) v += state_.holdings[a] * state_.prices[a];
        return v;
    }

    void fill_indicators(std::size_t panel_index) {
        state_.indicator_block.clear();
        if (config_.indicator_names.empty()) return;
        state_.indicator_block.reserve(config_.indicator_names.size() * n_);
        for (std::size_t a = 0; a < n_; ++a) {
            for (const auto& name : config_.indicator_names) {
                state_.indicator_block.push_back(
                    indicators_->per_asset[a].by_name(name)[panel_index]);
            }
        }
    }

    std::vector<double> slice(const ReturnSeries& rs) const {
        std::vector<double> out;
        out.reserve(realized_.size());
        for (std::size_t j = 0; j < realized_.size(); ++j) {
            out.push_back(rs[start_ + 1 + j]);
        }
        return out;
    }

    double compute_reward(bool done) {
        auto bench = benchmark_slice();
        auto mkt = market_slice();
        if (config_.reward_mode == RewardMode::Terminal) {
            if (!done) return 0.0;
            return prefix_composite(realized_, bench, mkt, config_.weights,
                                    config_.metric_ctx, config_.ann_mode);
        }
        double now = prefix_composite(realized_, bench, mkt, config_.weights,
                                      config_.metric_ctx, config_.ann_mode);
        double delta = now - prev_prefix_reward_;
        prev_prefix_reward_ = now;
        return delta;
    }

    const AlignedPanel& panel_;
    EnvConfig config_;
    const IndicatorSet* indicators_ = nullptr;
    std::size_t n_ = 0;
    std::size_t start_ = 0, end_ = 0;
    long h_max_ = 0;
    EnvState state_;
    std::vector<double> avg_cost_;
    std::vector<double> realized_;
    std::vector<double> all_trade_pnls_;
    std::vector<double> equity_;
    double total_fees_ = 0.0;
    double prev_prefix_reward_ = 0.0;
    bool done_ = false;
};

struct EpisodeLog {
    std::vector<std::vector<double>> states;   // flattened, before each action
    std::vector<std::vector<double>> actions;
    std::vector<std::vector<long>> fills;
    std::vector<double> fees;
    std::vector<double> cash;
    std::vector<double> value;
    std::vector<double> returns;   // R_pt per step
    std::vector<double> rewards;
    std::vector<double> trade_pnls;
    std::vector<double> equity;    // length steps+1
    double total_reward = 0.0;
};

// Runs one full episode driven by `actor(flattened state) -> action`.
inline EpisodeLog run_episode(TradingEnv& env, std::size_t start, std::size_t end,
                              const std::function<std::vector<double>(const std::vector<double>&)>& actor) {
    EpisodeLog log;
    EnvState s = env.reset(start, end);
    bool done = false;
    while (!done) {
        std::vector<double> flat = s.flatten();
        std::vector<double> a = actor(flat);
        StepOutcome out = env.step(a);
        log.states.push_back(std::move(flat));
        log.actions.push_back(std::move(a));
        log.fills.push_back(out.fills);
        log.fees.push_back(out.fees);
        log.cash.push_back(out.state.cash);
        log.value.push_back(out.state.portfolio_value);
        log.returns.push_back(out.portfolio_return);
        log.rewards.push_back(out.reward);
        log.total_reward += out.reward;
        done = out.done;
        s = out.state;
    }
    log.trade_pnls = env.trade_pnls();
    log.equity = env.equity_curve();
    return log;
}

}  // namespace riskward
