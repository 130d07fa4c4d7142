#pragma once

// Composite reward R = w1*R_ann - w2*sigma_down + w3*D_ret + w4*T_ry, its
// return/risk/benchmark decomposition, analytic gradients and a central
// finite-difference verifier. Beta is treated as locally constant in all
// gradients; the hinge at R_pt = 0 uses subgradient 0.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskward/marketdata.hpp"
#include "riskward/metrics.hpp"

#include "json.hpp"

namespace riskward {

struct RewardWeights {
    double w1 = 0.25;  // annualized return
    double w2 = 0.25;  // downside deviation penalty
    double w3 = 0.25;  // differential return
    double w4 = 0.25;  // Treynor ratio

    void validate() const {
        if (w1 < 0 || w2 < 0 || w3 < 0 || w4 < 0) {
            throw std::invalid_argument("reward weights must be nonnegative");
        }
    }

    double sum() const { return w1 + w2 + w3 + w4; }

    RewardWeights normalized() const {
        validate();
        double s = sum();
        if (s <= 0.0) throw std::invalid_argument("cannot normalize all-zero weights");
        return {w1 / s, w2 / s, w3 / s, w4 / s};
    }
};

struct RewardBreakdown {
    RewardWeights weights;
    ComponentValues components;
    double term_ann = 0.0;      // w1 * R_ann
    double term_down = 0.0;     // -w2 * sigma_down
    double term_dret = 0.0;     // w3 * D_ret
    double term_treynor = 0.0;  // w4 * T_ry
    double total = 0.0;
    // risk-return decomposition
    double return_reward = 0.0;   // w1*R_ann + w4*T_ry
    double risk_penalty = 0.0;    // -w2*sigma_down
    double benchmark_bonus = 0.0; // w3*D_ret

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"weights", {{"w1", weights.w1}, {"w2", weights.w2},
                         {"w3", weights.w3}, {"w4", weights.w4}}},
            {"components",
             {{"r_ann", components.r_ann},
              {"sigma_down", components.sigma_down},
              {"d_ret", components.d_ret},
              {"t_ry", components.t_ry},
              {"beta_raw", components.beta_raw},
              {"beta_clamped", components.beta_clamped},
              {"beta_clamp_applied", components.beta_clamp_applied},
              {"beta_degenerate", components.beta_degenerate},
              {"mu_p", components.mu_p},
              {"mu_b", components.mu_b}}},
            {"terms",
             {{"ann", term_ann}, {"down", term_down},
              {"dret", term_dret}, {"treynor", term_treynor}}},
            {"total", total},
            {"decomposition",
             {{"return_reward", return_reward},
              {"risk_penalty", risk_penalty},
              {"benchmark_bonus", benchmark_bonus}}}};
    }
};

namespace detail {

// Total-by-construction component evaluation: zero market variance or T < 2
// yields raw beta 0 clamped to beta_min and zero beta-dependent terms.
inline ComponentValues components_total(const ReturnSeries& portfolio,
                                        const ReturnSeries& benchmark,
                                        const ReturnSeries& market,
                                        const MetricContext& ctx,
                                        AnnualizationMode mode) {
    ComponentValues c;
    c.mu_p = portfolio.mean();
    c.mu_b = benchmark.mean();
    c.r_ann = annualized_return(portfolio, ctx, mode);
    c.sigma_down = downside_deviation(portfolio);

    bool beta_ok = portfolio.size() >= 2 && market.size() == portfolio.size();
    if (beta_ok) {
        try {
            BetaResult b = beta(portfolio, market, ctx);
            c.beta_raw = b.raw;
            c.beta_clamped = b.clamped;
            c.beta_clamp_applied = b.clamp_applied;
        } catch (const std::domain_error&) {
            beta_ok = false;
        }
    }
    if (!beta_ok) {
        c.beta_raw = 0.0;
        c.beta_clamped = ctx.beta_min;
        c.beta_clamp_applied = true;
        c.beta_degenerate = true;
    }

    if (portfolio.size() >= 2 && benchmark.size() == portfolio.size()) {
        c.d_ret = (c.mu_p - c.mu_b) / c.beta_clamped;
        c.t_ry = treynor(c.r_ann, ctx, c.beta_clamped);
    }
    return c;
}

}  // namespace detail

inline RewardBreakdown composite_reward(const ReturnSeries& portfolio,
                                        const ReturnSeries& benchmark,
                                        const ReturnSeries& market,
                                        const RewardWeights& weights,
                                        const MetricContext& ctx,
                                        AnnualizationMode mode = AnnualizationMode::Exact) {
    weights.validate();
    ctx.validate();
    if (portfolio.size() < 1) throw std::invalid_argument("composite_reward: empty series");

    RewardBreakdown b;
    b.weights = weights;
    b.components = detail::components_total(portfolio, benchmark, market, ctx, mode);
    b.term_ann = weights.w1 * b.components.r_ann;
    b.term_down = -weights.w2 * b.components.sigma_down;
    b.term_dret = weights.w3 * b.components.d_ret;
    b.term_treynor = weights.w4 * b.components.t_ry;
    b.total = b.term_ann + b.term_down + b.term_dret + b.term_treynor;
    b.return_reward = b.term_ann + b.term_treynor;
    b.risk_penalty = b.term_down;
    b.benchmark_bonus = b.term_dret;
    return b;
}

struct Decomposition {
    double return_reward = 0.0;
    double risk_penalty = 0.0;
    double benchmark_bonus = 0.0;
};

inline Decomposition decompose(const RewardBreakdown& b) {
    return {b.return_reward, b.risk_penalty, b.benchmark_bonus};
}

struct RewardGradient {
    std::vector<double> d_total_d_rpt;  // length T
    double d_total_d_mu = 0.0;          // uniform-shift sensitivity, sigma fixed
    double d_total_d_sigma_down = 0.0;  // -w2
    double d_total_d_mu_b = 0.0;        // -w3/beta
    std::vector<bool> kink_mask;        // R_pt == 0 coordinates
    double beta_clamped = 0.0;
    // per-component per-period partials, before weighting
    std::vector<double> d_ann;
    std::vector<double> d_down;
    std::vector<double> d_dret;
    std::vector<double> d_treynor;
};

inline RewardGradient reward_gradient(const ReturnSeries& portfolio,
                                      const ReturnSeries& benchmark,
                                      const ReturnSeries& market,
                                      const RewardWeights& weights,
                                      const MetricContext& ctx,
                                      AnnualizationMode mode = AnnualizationMode::Approx) {
    weights.validate();
    const std::size_t n = portfolio.size();
    if (n < 1) throw std::invalid_argument("reward_gradient: empty series");
    const double T = static_cast<double>(n);

    ComponentValues c = detail::components_total(portfolio, benchmark, market, ctx, mode);
    const double beta_c = c.beta_clamped;
    const double sigma = c.sigma_down;

    RewardGradient g;
    g.beta_clamped = beta_c;
    g.d_total_d_rpt.resize(n);
    g.kink_mask.resize(n);
    g.d_ann.resize(n);
    g.d_down.resize(n);
    g.d_dret.resize(n);
    g.d_treynor.resize(n);

    double d_mu_ann = 0.0;  // d R_ann / d mu (uniform shift), approx: 252
    for (std::size_t t = 0; t < n; ++t) {
        const double r = portfolio[t];
        g.kink_mask[t] = (r == 0.0);

        double dann;
        if (mode == AnnualizationMode::Approx) {
            dann = ctx.annualization / T;
        } else {
            // d/dr_t [(prod(1+r))^(252/T) - 1] = (252/T)(1 + R_ann)/(1 + r_t)
            dann = ctx.annualization / T * (1.0 + c.r_ann) / (1.0 + r);
        }
        g.d_ann[t] = dann;

        double ddown = 0.0;
        if (sigma > 0.0 && r < 0.0) ddown = r / (T * sigma);  // d sigma / d r_t
        g.d_down[t] = ddown;

        g.d_dret[t] = 1.0 / (beta_c * T);
        g.d_treynor[t] = dann / beta_c;

        g.d_total_d_rpt[t] = weights.w1 * dann - weights.w2 * ddown +
                             weights.w3 * g.d_dret[t] + weights.w4 * g.d_treynor[t];
        d_mu_ann += dann;
    }

    g.d_total_d_mu = weights.w1 * d_mu_ann + weights.w3 / beta_c +
                     weights.w4 * d_mu_ann / beta_c;
    g.d_total_d_sigma_down = -weights.w2;
    g.d_total_d_mu_b = -weights.w3 / beta_c;
    return g;
}

struct ComponentCheck {
    std::string name;
    bool checked = false;
    double max_rel_err = 0.0;
    std::size_t worst_coord = 0;
};

struct GradCheckReport {
    std::vector<ComponentCheck> components;
    double max_rel_err = 0.0;
    std::string worst_component;
    bool pass = false;
    double tolerance = 1e-6;
};

namespace detail {

// Component values with an externally frozen clamped beta, matching the
// locally-constant-beta convention of the analytic gradients.
inline double component_value_fixed_beta(const ReturnSeries& portfolio,
                                         const ReturnSeries& benchmark,
                                         const MetricContext& ctx, AnnualizationMode mode,
                                         double beta_fixed, int which) {
    switch (which) {
        case 0: return annualized_return(portfolio, ctx, mode);
        case 1: return downside_deviation(portfolio);
        case 2: return (portfolio.mean() - benchmark.mean()) / beta_fixed;
        case 3: return treynor(annualized_return(portfolio, ctx, mode), ctx, beta_fixed);
        default: throw std::logic_error("bad component index");
    }
}

inline double rel_err(double a, double b) {
    double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-12) return std::abs(a - b);
    return std::abs(a - b) / scale;
}

}  // namespace detail

// Central finite differences against the analytic per-component gradients,
// with beta frozen at the base point. Kink coordinates are skipped.
inline GradCheckReport finite_difference_check(const ReturnSeries& portfolio,
                                               const ReturnSeries& benchmark,
                                               const ReturnSeries& market,
                                               const RewardWeights& weights,
                                               const MetricContext& ctx, double h = 1e-7,
                                               AnnualizationMode mode = AnnualizationMode::Approx) {
    if (h <= 0.0) throw std::invalid_argument("finite_difference_check: h must be > 0");
    const std::size_t n = portfolio.size();
    RewardGradient g = reward_gradient(portfolio, benchmark, market, weights, ctx, mode);
    const double beta_fixed = g.beta_clamped;

    const char* names[4] = {"r_ann", "sigma_down", "d_ret", "t_ry"};
    const double wts[4] = {weights.w1, weights.w2, weights.w3, weights.w4};
    const std::vector<double>* analytic[4] = {&g.d_ann, &g.d_down, &g.d_dret, &g.d_treynor};

    GradCheckReport report;
    for (int comp = 0; comp < 4; ++comp) {
        ComponentCheck check;
        check.name = names[comp];
        if (wts[comp] == 0.0) {
            report.components.push_back(check);  // skipped, noted unchecked
            continue;
        }
        check.checked = true;
        ReturnSeries perturbed = portfolio;
        for (std::size_t t = 0; t < n; ++t) {
            if (g.kink_mask[t]) continue;
            const double base = portfolio[t];
            perturbed.values[t] = base + h;
            double up = detail::component_value_fixed_beta(perturbed, benchmark, ctx, mode,
                                                           beta_fixed, comp);
            perturbed.values[t] = base - h;
            double dn = detail::component_value_fixed_beta(perturbed, benchmark, ctx, mode,
                                                           beta_fixed, comp);
            perturbed.values[t] = base;
            double numeric = (up - dn) / (2.0 * h);
            double analytic_t = (*analytic[comp])[t];
            double err = detail::rel_err(analytic_t, numeric);
            if (err > check.max_rel_err) {
                check.max_rel_err = err;
                check.worst_coord = t;
            }
        }
        report.components.push_back(check);
    }

    // benchmark-mean partial: shift every benchmark return by +-h
    {
        ComponentCheck check;
        check.name = "mu_b";
        if (weights.w3 > 0.0) {
            check.checked = true;
            auto shifted = [&](double delta) {
                ReturnSeries b = benchmark;
                for (double& v : b.values) v += delta;
                return weights.w3 *
                       detail::component_value_fixed_beta(portfolio, b, ctx, mode,
                                                          beta_fixed, 2);
            };
            double numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
            check.max_rel_err = detail::rel_err(g.d_total_d_mu_b, numeric);
        }
        report.components.push_back(check);
    }

    for (const auto& c : report.components) {
        if (c.checked && c.max_rel_err > report.max_rel_err) {
            report.max_rel_err = c.max_rel_err;
            report.worst_component = c.name;
        }
    }
    report.pass = report.max_rel_err < report.tolerance;
    return report;
}

}  // namespace riskward
