#pragma once

// Grid search over the weight simplex: exhaustive enumeration at a fixed
// resolution, per-configuration backtests, and the Pareto frontier in
// (return, risk) space.

#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskward/agent.hpp"
#include "riskward/env.hpp"
#include "riskward/metrics.hpp"
#include "riskward/reward.hpp"

namespace riskward {

struct SimplexGrid {
    double step = 0.1;
    std::vector<RewardWeights> points;
};

// Integer compositions of m = 1/step into four parts, divided out at the
// end: exact in rational arithmetic, so the emitted doubles sum to 1 up to
// a final rounding.
inline SimplexGrid simplex_grid(double step) {
    if (step <= 0.0) throw std::invalid_argument("simplex_grid: step must be > 0");
    double m_real = 1.0 / step;
    long m = std::lround(m_real);
    if (m < 1 || std::abs(m_real - static_cast<double>(m)) > 1e-9) {
        throw std::invalid_argument("simplex_grid: 1/step must be a positive integer");
    }
    SimplexGrid grid;
    grid.step = step;
    for (long a = m; a >= 0; --a) {
        for (long b = m - a; b >= 0; --b) {
            for (long c = m - a - b; c >= 0; --c) {
                long d = m - a - b - c;
                grid.points.push_back({static_cast<double>(a) / m, static_cast<double>(b) / m,
                                       static_cast<double>(c) / m, static_cast<double>(d) / m});
            }
        }
    }
    return grid;
}

struct TuneRecord {
    RewardWeights weights;
    double ann_return = 0.0;
    double max_dd = 0.0;
    double sharpe = 0.0;
    double sortino = 0.0;
    double beta = 0.0;
    double win_rate = 0.0;
    double composite = 0.0;
    std::uint64_t seed = 0;
    std::size_t window_start = 0;
    std::size_t window_end = 0;
    std::vector<std::string> flags;  // degenerate metrics, sentinels
    // mean fraction of wealth held in each asset across the episode
    std::vector<double> mean_exposure;

    bool flagged() const { return !flags.empty(); }
    std::string flags_joined() const {
        std::string out;
        for (const auto& f : flags) {
            if (!out.empty()) out += '|';
            out += f;
        }
        return out;
    }
};

struct EvalSettings {
    EnvConfig env_config;
    std::size_t window_start = 0;
    std::size_t window_end = 0;
    BaselineKind policy_kind = BaselineKind::GreedyComposite;
    std::uint64_t seed = 0;
    AnnualizationMode ann_mode = AnnualizationMode::Exact;  // for reported metrics
};

// One full backtest under a weight configuration. Metric failures become
// flagged sentinels; the record is always produced.
inline TuneRecord evaluate_config(const RewardWeights& weights, const AlignedPanel& panel,
                                  const IndicatorSet* indicators, const EvalSettings& settings) {
    TuneRecord rec;
    rec.weights = weights;
    rec.seed = settings.seed;
    rec.window_start = settings.window_start;
    rec.window_end = settings.window_end;

    EnvConfig cfg = settings.env_config;
    cfg.weights = weights;
    TradingEnv env(panel, cfg, indicators);
    BaselineActor actor(settings.policy_kind, panel.num_assets(), settings.seed, &panel,
                        &weights, &cfg.metric_ctx, settings.window_start);
    EpisodeLog log = run_episode(env, settings.window_start, settings.window_end,
                                 [&actor](const std::vector<double>& s) { return actor(s); });

    ReturnSeries realized{log.returns};
    const MetricContext& ctx = cfg.metric_ctx;
    try {
        rec.ann_return = annualized_return(realized, ctx, settings.ann_mode);
    } catch (const std::exception&) {
        rec.flags.push_back("ann_return_degenerate");
    }
    rec.max_dd = max_drawdown(log.equity);
    try {
        rec.sharpe = sharpe(realized, ctx);
    } catch (const std::exception&) {
        rec.flags.push_back("sharpe_degenerate");
    }
    SortinoResult so = sortino(realized, ctx);
    rec.sortino = so.value;
    if (so.infinite) rec.flags.push_back("sortino_infinite");
    try {
        auto bench = env.benchmark_slice();
        auto mkt = env.market_slice();
        ReturnSeries market{mkt};
        rec.beta = beta(realized, market, ctx).raw;
        ReturnSeries benchmark{bench};
        rec.composite = composite_reward(realized, benchmark, market, weights, ctx,
                                         cfg.ann_mode).total;
    } catch (const std::exception&) {
        rec.flags.push_back("beta_degenerate");
        auto bench = env.benchmark_slice();
        auto mkt = env.market_slice();
        rec.composite = prefix_composite(log.returns, bench, mkt, weights, ctx, cfg.ann_mode);
    }
    if (log.trade_pnls.empty()) {
        rec.flags.push_back("no_trades");
    } else {
        rec.win_rate = win_rate(log.trade_pnls);
    }

    // exposure diagnostics
    std::size_t n = panel.num_assets();
    rec.mean_exposure.assign(n, 0.0);
    for (std::size_t t = 0; t < log.value.size(); ++t) {
        // states[t] layout: value, holdings(n), prices(n), ...
        for (std::size_t a = 0; a < n; ++a) {
            double holding = t + 1 < log.states.size() ? log.states[t + 1][1 + a]
                                                       : static_cast<double>(env.state().holdings[a]);
            double price = t + 1 < log.states.size() ? log.states[t + 1][1 + n + a]
                                                     : env.state().prices[a];
            rec.mean_exposure[a] += holding * price / log.value[t];
        }
    }
    for (double& e : rec.mean_exposure) e /= static_cast<double>(log.value.size());
    return rec;
}

struct Frontier {
    std::vector<std::size_t> frontier_indices;  // into the record vector
    std::vector<bool> dominated;
};

// Non-dominated set under (maximize return key, minimize risk key); ties kept.
inline Frontier pareto_frontier(const std::vector<TuneRecord>& records,
                                const std::function<double(const TuneRecord&)>& return_key,
                                const std::function<double(const TuneRecord&)>& risk_key) {
    if (records.empty()) throw std::invalid_argument("pareto_frontier: no records");
    const std::size_t n = records.size();
    Frontier f;
    f.dominated.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        double ri = return_key(records[i]);
        double ki = risk_key(records[i]);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double rj = return_key(records[j]);
            double kj = risk_key(records[j]);
            bool weakly_better = rj >= ri && kj <= ki;
            bool strictly_better = rj > ri || kj < ki;
            if (weakly_better && strictly_better) {
                f.dominated[i] = true;
                break;
            }
        }
        if (!f.dominated[i]) f.frontier_indices.push_back(i);
    }
    return f;
}

inline Frontier pareto_frontier(const std::vector<TuneRecord>& records) {
    return pareto_frontier(
        records, [](const TuneRecord& r) { return r.ann_return; },
        [](const TuneRecord& r) { return r.max_dd; });
}

// Full sweep; configurations run concurrently, results in grid order.
inline std::vector<TuneRecord> sweep(const SimplexGrid& grid, const AlignedPanel& panel,
                                     const IndicatorSet* indicators,
                                     const EvalSettings& settings, bool parallel = true) {
    std::vector<TuneRecord> records(grid.points.size());
    if (!parallel) {
        for (std::size_t i = 0; i < grid.points.size(); ++i) {
            records[i] = evaluate_config(grid.points[i], panel, indicators, settings);
        }
        return records;
    }
    std::vector<std::future<TuneRecord>> futures;
    futures.reserve(grid.points.size());
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        futures.push_back(std::async(std::launch::async | std::launch::deferred,
                                     [&, i] {
                                         return evaluate_config(grid.points[i], panel,
                                                                indicators, settings);
                                     }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) records[i] = futures[i].get();
    return records;
}

}  // namespace riskward
