#pragma once

// Reward components and evaluation metrics. All variance-like quantities use
// population (1/T) normalization.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "riskward/marketdata.hpp"

namespace riskward {

struct MetricContext {
    double risk_free_rate = 0.0;     // annualized
    double annualization = 252.0;    // trading periods per year
    double r_max = 3.0;              // |R_ann| guard bound
    double beta_min = 0.3;
    double beta_max = 3.0;

    void validate() const {
        if (annualization <= 0.0) throw std::invalid_argument("annualization must be > 0");
        if (beta_min <= 0.0 || beta_min > beta_max) {
            throw std::invalid_argument("need 0 < beta_min <= beta_max");
        }
        if (r_max <= 0.0) throw std::invalid_argument("r_max must be > 0");
    }

    double per_period_rf() const { return risk_free_rate / annualization; }
};

enum class AnnualizationMode { Exact, Approx };

struct ComponentValues {
    double r_ann = 0.0;
    double sigma_down = 0.0;
    double d_ret = 0.0;
    double t_ry = 0.0;
    double beta_raw = 0.0;
    double beta_clamped = 0.0;
    double mu_p = 0.0;
    double mu_b = 0.0;
    bool beta_clamp_applied = false;
    bool beta_degenerate = false;  // zero market variance; raw beta undefined
};

inline double annualized_return(const ReturnSeries& returns, const MetricContext& ctx,
                                AnnualizationMode mode) {
    if (returns.size() < 1) throw std::invalid_argument("annualized_return: empty series");
    const double T = static_cast<double>(returns.size());
    if (mode == AnnualizationMode::Approx) {
        double sum = 0.0;
        for (double r : returns.values) sum += r;
        return ctx.annualization / T * sum;
    }
    double log_growth = 0.0;
    for (double r : returns.values) {
        if (r <= -1.0) {
            throw std::domain_error("annualized_return: return <= -1 in exact mode");
        }
        log_growth += std::log1p(r);
    }
    return std::expm1(ctx.annualization / T * log_growth);
}

// sqrt((1/T) sum max(0,-R_t)^2)
inline double downside_deviation(const ReturnSeries& returns) {
    if (returns.size() < 1) throw std::invalid_argument("downside_deviation: empty series");
    double acc = 0.0;
    for (double r : returns.values) {
        if (r < 0.0) acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(returns.size()));
}

struct BetaResult {
    double raw = 0.0;
    double clamped = 0.0;
    bool clamp_applied = false;
};

// Cov(p, m)/Var(m) with population normalization; the clamped copy is what
// ratio denominators use.
inline BetaResult beta(const ReturnSeries& portfolio, const ReturnSeries& market,
                       const MetricContext& ctx) {
    if (portfolio.size() != market.size()) {
        throw std::invalid_argument("beta: length mismatch");
    }
    if (portfolio.size() < 2) throw std::invalid_argument("beta: need T >= 2");
    const double T = static_cast<double>(portfolio.size());
    const double mp = portfolio.mean();
    const double mm = market.mean();
    double cov = 0.0, var = 0.0, msq = 0.0;
    for (std::size_t t = 0; t < market.size(); ++t) {
        double dm = market[t] - mm;
        cov += (portfolio[t] - mp) * dm;
        var += dm * dm;
        msq += market[t] * market[t];
    }
    cov /= T;
    var /= T;
    msq /= T;
    // relative guard: a constant series leaves only rounding noise in var
    if (var <= 1e-20 * msq) throw std::domain_error("beta: zero market variance");
    BetaResult b;
    b.raw = cov / var;
    b.clamped = std::min(std::max(b.raw, ctx.beta_min), ctx.beta_max);
    b.clamp_applied = b.clamped != b.raw;
    return b;
}

// (mu_p - mu_b)/beta, means per period
inline double differential_return(const ReturnSeries& portfolio,
                                  const ReturnSeries& benchmark, double beta_clamped) {
    if (portfolio.size() != benchmark.size()) {
        throw std::invalid_argument("differential_return: length mismatch");
    }
    if (beta_clamped <= 0.0) {
        throw std::domain_error("differential_return: nonpositive beta");
    }
    return (portfolio.mean() - benchmark.mean()) / beta_clamped;
}

// (R_ann - R_f)/beta
inline double treynor(double r_ann, const MetricContext& ctx, double beta_clamped) {
    if (beta_clamped <= 0.0) throw std::domain_error("treynor: nonpositive beta");
    return (r_ann - ctx.risk_free_rate) / beta_clamped;
}

inline double sharpe(const ReturnSeries& returns, const MetricContext& ctx) {
    if (returns.size() < 2) throw std::invalid_argument("sharpe: need T >= 2");
    const double T = static_cast<double>(returns.size());
    const double mean = returns.mean();
    double var = 0.0;
    for (double r : returns.values) {
        double d = r - mean;
        var += d * d;
    }
    var /= T;
    if (var <= 0.0) throw std::domain_error("sharpe: zero volatility");
    return (mean - ctx.per_period_rf()) / std::sqrt(var) * std::sqrt(ctx.annualization);
}

struct SortinoResult {
    double value = 0.0;
    bool infinite = false;  // zero downside deviation, all-gain series
};

inline SortinoResult sortino(const ReturnSeries& returns, const MetricContext& ctx) {
    const double dd = downside_deviation(returns);
    const double excess = returns.mean() - ctx.per_period_rf();
    SortinoResult out;
    if (dd <= 0.0) {
        out.infinite = true;
        out.value = excess >= 0.0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
        return out;
    }
    out.value = excess / dd * std::sqrt(ctx.annualization);
    return out;
}

// max over t of (peak - equity_t)/peak; in [0, 1)
inline double max_drawdown(const std::vector<double>& equity) {
    if (equity.empty()) throw std::invalid_argument("max_drawdown: empty curve");
    double peak = 0.0;
    double mdd = 0.0;
    for (double v : equity) {
        if (v <= 0.0) throw std::domain_error("max_drawdown: nonpositive equity value");
        peak = std::max(peak, v);
        mdd = std::max(mdd, (peak - v) / peak);
    }
    return mdd;
}

// Zero-pnl trades count as losses.
inline double win_rate(const std::vector<double>& trade_pnls) {
    if (trade_pnls.empty()) throw std::invalid_argument("win_rate: no trades");
    std::size_t wins = 0;
    for (double p : trade_pnls) {
        if (p > 0.0) ++wins;
    }
    return static_cast<double>(wins) / static_cast<double>(trade_pnls.size());
}

}  // namespace riskward
