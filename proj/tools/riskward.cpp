// riskward: ingest / backtest / gradcheck / tune / train command-line front end.
//
// Exit codes: 0 ok, 1 config error, 2 data error, 3 runtime error,
// 4 gradient check failure, 5 training divergence.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "riskward/riskward.hpp"

namespace {

using namespace riskward;

struct CliOverrides {
    std::string config_path;
    std::vector<std::string> data;
    std::vector<std::string> tickers;
    std::string benchmark;
    std::string from, to;
    std::string weights;  // "w1,w2,w3,w4"
    double step = -1.0;
    long seed = -1;
    std::string mode;
    std::string out;
    std::string policy;
    std::string checkpoint;
    long iterations = -1;
    double learning_rate = -1.0;
    long instances = 100;
};

RunConfig build_config(const CliOverrides& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = RunConfig::from_toml(TomlTable::parse_file(o.config_path));
    if (!o.data.empty()) cfg.data_paths = o.data;
    if (!o.tickers.empty()) cfg.tickers = o.tickers;
    if (!o.benchmark.empty()) cfg.benchmark = o.benchmark;
    if (cfg.market.empty()) cfg.market = cfg.benchmark;
    if (!o.from.empty()) cfg.from_date = o.from;
    if (!o.to.empty()) cfg.to_date = o.to;
    if (!o.weights.empty()) {
        std::istringstream ss(o.weights);
        std::string item;
        std::vector<double> w;
        while (std::getline(ss, item, ',')) w.push_back(std::stod(item));
        if (w.size() != 4) throw std::runtime_error("--weights needs w1,w2,w3,w4");
        cfg.env.weights = {w[0], w[1], w[2], w[3]};
    }
    if (o.step > 0) cfg.tuner_step = o.step;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.mode.empty()) {
        if (o.mode != "terminal" && o.mode != "potential") {
            throw std::runtime_error("--mode must be terminal or potential");
        }
        cfg.reward_mode = o.mode;
        cfg.env.reward_mode =
            o.mode == "terminal" ? RewardMode::Terminal : RewardMode::Potential;
    }
    if (!o.out.empty()) {
        cfg.out_dir = o.out;
    } else if (const char* env_out = std::getenv("RISKWARD_OUT"); env_out != nullptr &&
               cfg.out_dir == "out") {
        cfg.out_dir = env_out;
    }
    if (o.iterations > 0) cfg.agent.iterations = static_cast<std::size_t>(o.iterations);
    if (o.learning_rate > 0) cfg.agent.learning_rate = o.learning_rate;
    cfg.agent.seed = cfg.seed;
    cfg.env.weights.validate();
    if (!cfg.from_date.empty() && !cfg.to_date.empty()) {
        if (Date::parse(cfg.to_date) < Date::parse(cfg.from_date)) {
            throw std::runtime_error("empty date range: --to precedes --from");
        }
    }
    return cfg;
}

PriceSeries restrict_dates(const PriceSeries& s, const std::string& from,
                           const std::string& to) {
    if (from.empty() && to.empty()) return s;
    PriceSeries out{s.ticker, {}};
    std::optional<Date> lo, hi;
    if (!from.empty()) lo = Date::parse(from);
    if (!to.empty()) hi = Date::parse(to);
    for (const auto& b : s.bars) {
        if (lo && b.date < *lo) continue;
        if (hi && *hi < b.date) continue;
        out.bars.push_back(b);
    }
    return out;
}

struct LoadedData {
    std::vector<PriceSeries> all;      // every ticker found
    std::vector<PriceSeries> assets;   // selected tradeable tickers
    PriceSeries benchmark;
    PriceSeries market;
};

LoadedData load_data(const RunConfig& cfg) {
    if (cfg.data_paths.empty()) throw std::runtime_error("no data paths configured");
    std::map<std::string, std::map<int, Bar>> merged;  // dedup across files
    for (const auto& path : cfg.data_paths) {
        std::istringstream in(read_file(path));
        for (auto& series : parse_ohlcv_csv(in)) {
            for (const auto& bar : series.bars) merged[series.ticker][bar.date.key()] = bar;
        }
    }
    LoadedData data;
    for (auto& [ticker, bars] : merged) {
        PriceSeries s{ticker, {}};
        for (auto& [key, bar] : bars) s.bars.push_back(bar);
        s = restrict_dates(s, cfg.from_date, cfg.to_date);
        if (!s.bars.empty()) data.all.push_back(std::move(s));
    }
    if (data.all.empty()) throw std::runtime_error("no rows in configured date range");

    auto find = [&data](const std::string& ticker) -> const PriceSeries& {
        for (const auto& s : data.all) {
            if (s.ticker == ticker) return s;
        }
        throw std::runtime_error("ticker not found in data: " + ticker);
    };

    std::set<std::string> excluded;
    if (!cfg.benchmark.empty()) excluded.insert(cfg.benchmark);
    if (!cfg.market.empty()) excluded.insert(cfg.market);
    if (!cfg.tickers.empty()) {
        for (const auto& t : cfg.tickers) data.assets.push_back(find(t));
    } else {
        for (const auto& s : data.all) {
            if (!excluded.count(s.ticker)) data.assets.push_back(s);
        }
    }
    if (data.assets.empty()) throw std::runtime_error("no tradeable tickers selected");
    data.benchmark = cfg.benchmark.empty() ? data.assets.front() : find(cfg.benchmark);
    data.market = cfg.market.empty() ? data.benchmark : find(cfg.market);
    return data;
}

nlohmann::json run_stamp(const RunConfig& cfg) {
    return {{"config_hash", cfg.config_hash()}, {"seed", cfg.seed}};
}

int cmd_ingest(const RunConfig& cfg) {
    LoadedData data = load_data(cfg);
    std::size_t total_rows = 0;
    for (const auto& s : data.all) {
        total_rows += s.bars.size();
        std::cout << s.ticker << ": " << s.bars.size() << " rows, "
                  << s.bars.front().date.to_string() << " .. "
                  << s.bars.back().date.to_string() << "\n";
    }
    std::cout << data.all.size() << " tickers, " << total_rows << " rows total\n";

    std::ostringstream cache;
    write_ohlcv_csv(cache, data.all);
    std::string cache_path = cfg.out_dir + "/ingested.csv";
    write_file_atomic(cache_path, cache.str());
    nlohmann::json summary = run_stamp(cfg);
    summary["tickers"] = nlohmann::json::array();
    for (const auto& s : data.all) {
        summary["tickers"].push_back({{"ticker", s.ticker},
                                      {"rows", s.bars.size()},
                                      {"from", s.bars.front().date.to_string()},
                                      {"to", s.bars.back().date.to_string()}});
    }
    write_file_atomic(cfg.out_dir + "/ingest_summary.json", summary.dump(2) + "\n");
    std::cout << "wrote " << cache_path << "\n";
    return 0;
}

struct Workspace {
    AlignedPanel panel;
    IndicatorSet indicators;
    bool has_indicators = false;
    std::size_t start = 0, end = 0;
};

Workspace build_workspace(const RunConfig& cfg, const LoadedData& data) {
    Workspace ws;
    ws.panel = align(data.assets, data.benchmark, data.market);
    ws.end = ws.panel.length() - 1;
    if (!cfg.env.indicator_names.empty()) {
        ws.indicators = extended_indicators(ws.panel, cfg.indicators);
        ws.has_indicators = true;
        ws.start = ws.indicators.first_live();
        if (ws.start >= ws.end) {
            throw std::runtime_error("date range too short: all dates inside warm-up");
        }
    }
    return ws;
}

int cmd_backtest(const RunConfig& cfg, const std::string& policy_name,
                 const std::string& checkpoint_path) {
    LoadedData data = load_data(cfg);
    Workspace ws = build_workspace(cfg, data);
    TradingEnv env(ws.panel, cfg.env, ws.has_indicators ? &ws.indicators : nullptr);

    EpisodeLog log;
    if (!checkpoint_path.empty()) {
        std::ifstream in(checkpoint_path);
        if (!in) throw std::runtime_error("cannot open checkpoint: " + checkpoint_path);
        Checkpoint ck = load_checkpoint(in);
        Policy policy(ck.state_dim, ck.stock_dim);
        policy.parameters() = ck.parameters;
        log = run_episode(env, ws.start, ws.end, [&policy](const std::vector<double>& s) {
            return policy.deterministic_action(policy.features(s));
        });
    } else {
        BaselineActor actor(baseline_kind_from_string(policy_name), ws.panel.num_assets(),
                            cfg.seed, &ws.panel, &cfg.env.weights, &cfg.env.metric_ctx,
                            ws.start);
        log = run_episode(env, ws.start, ws.end,
                          [&actor](const std::vector<double>& s) { return actor(s); });
    }

    write_file_atomic(cfg.out_dir + "/episode.csv", episode_to_csv(log, ws.panel.num_assets()));

    ReturnSeries realized{log.returns};
    ReturnSeries bench{env.benchmark_slice()};
    ReturnSeries market{env.market_slice()};
    const MetricContext& ctx = cfg.env.metric_ctx;

    nlohmann::json metrics = run_stamp(cfg);
    metrics["steps"] = log.returns.size();
    metrics["final_value"] = log.value.back();
    metrics["total_fees"] = env.total_fees();
    metrics["max_drawdown"] = max_drawdown(log.equity);
    try {
        metrics["annualized_return"] = annualized_return(realized, ctx, AnnualizationMode::Exact);
    } catch (const std::exception& e) {
        metrics["annualized_return_flag"] = e.what();
    }
    try {
        metrics["sharpe"] = sharpe(realized, ctx);
    } catch (const std::exception& e) {
        metrics["sharpe_flag"] = e.what();
    }
    SortinoResult so = sortino(realized, ctx);
    if (so.infinite) {
        metrics["sortino_flag"] = "infinite (no downside)";
    } else {
        metrics["sortino"] = so.value;
    }
    try {
        metrics["beta"] = beta(realized, market, ctx).raw;
    } catch (const std::exception& e) {
        metrics["beta_flag"] = e.what();
    }
    if (!log.trade_pnls.empty()) metrics["win_rate"] = win_rate(log.trade_pnls);
    write_file_atomic(cfg.out_dir + "/metrics.json", metrics.dump(2) + "\n");

    RewardBreakdown breakdown = composite_reward(realized, bench, market, cfg.env.weights,
                                                 ctx, cfg.env.ann_mode);
    nlohmann::json reward_json = breakdown.to_json();
    reward_json.update(run_stamp(cfg));
    write_file_atomic(cfg.out_dir + "/reward_breakdown.json", reward_json.dump(2) + "\n");

    if (ws.has_indicators) {
        write_file_atomic(cfg.out_dir + "/indicators.csv",
                          indicators_to_csv(ws.panel, ws.indicators));
    }
    std::cout << "backtest: " << log.returns.size() << " steps, final value "
              << log.value.back() << ", composite R " << breakdown.total << "\n";
    return 0;
}

int cmd_gradcheck(const RunConfig& cfg, long instances) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> ret_dist(-0.02, 0.02);
    const std::size_t T = 50;
    bool all_pass = true;
    double worst = 0.0;
    std::string worst_component;
    std::size_t worst_instance = 0, worst_coord = 0;

    nlohmann::json instances_json = nlohmann::json::array();
    for (long k = 0; k < instances; ++k) {
        ReturnSeries p, b, m;
        for (std::size_t t = 0; t < T; ++t) {
            auto draw = [&](ReturnSeries& s) {
                double r;
                do {
                    r = ret_dist(rng);
                } while (std::abs(r) < 1e-6);  // keep clear of the hinge
                s.values.push_back(r);
            };
            draw(p);
            draw(b);
            draw(m);
        }
        GradCheckReport report = finite_difference_check(p, b, m, cfg.env.weights,
                                                         cfg.env.metric_ctx, 1e-7);
        if (!report.pass) all_pass = false;
        for (const auto& c : report.components) {
            if (c.checked && c.max_rel_err > worst) {
                worst = c.max_rel_err;
                worst_component = c.name;
                worst_instance = static_cast<std::size_t>(k);
                worst_coord = c.worst_coord;
            }
        }
        if (!report.pass) {
            instances_json.push_back({{"instance", k},
                                      {"max_rel_err", report.max_rel_err},
                                      {"component", report.worst_component}});
        }
    }

    nlohmann::json out = run_stamp(cfg);
    out["instances"] = instances;
    out["pass"] = all_pass;
    out["max_rel_err"] = worst;
    out["worst_component"] = worst_component;
    out["worst_instance"] = worst_instance;
    out["worst_coordinate"] = worst_coord;
    if (cfg.env.weights.w2 == 0.0) out["note"] = "sigma_down component skipped (w2 = 0)";
    out["failures"] = instances_json;
    write_file_atomic(cfg.out_dir + "/gradcheck.json", out.dump(2) + "\n");

    std::cout << (all_pass ? "gradcheck PASS" : "gradcheck FAIL") << " (max rel err "
              << worst << " in " << worst_component << ")\n";
    return all_pass ? 0 : 4;
}

int cmd_tune(const RunConfig& cfg) {
    LoadedData data = load_data(cfg);
    Workspace ws = build_workspace(cfg, data);
    SimplexGrid grid = simplex_grid(cfg.tuner_step);

    EvalSettings settings;
    settings.env_config = cfg.env;
    settings.window_start = ws.start;
    settings.window_end = ws.end;
    settings.policy_kind = baseline_kind_from_string(cfg.tuner_policy);
    settings.seed = cfg.seed;

    std::vector<TuneRecord> records =
        sweep(grid, ws.panel, ws.has_indicators ? &ws.indicators : nullptr, settings);
    Frontier frontier = pareto_frontier(records);

    write_file_atomic(cfg.out_dir + "/sweep.csv", sweep_to_csv(records));
    nlohmann::json summary = frontier_to_json(records, frontier);
    summary.update(run_stamp(cfg));
    summary["step"] = cfg.tuner_step;
    write_file_atomic(cfg.out_dir + "/frontier.json", summary.dump(2) + "\n");
    std::cout << "tune: " << records.size() << " configurations, "
              << frontier.frontier_indices.size() << " on the frontier\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& resume_path) {
    LoadedData data = load_data(cfg);
    Workspace ws = build_workspace(cfg, data);
    TradingEnv env(ws.panel, cfg.env, ws.has_indicators ? &ws.indicators : nullptr);

    std::size_t d = env.dimension();
    Policy policy(d, ws.panel.num_assets());
    if (!resume_path.empty()) {
        std::ifstream in(resume_path);
        if (!in) throw std::runtime_error("cannot open checkpoint: " + resume_path);
        Checkpoint ck = load_checkpoint(in);
        if (ck.state_dim != d || ck.stock_dim != ws.panel.num_assets()) {
            throw std::runtime_error("checkpoint dimensions do not match data");
        }
        policy.parameters() = ck.parameters;
    }

    // scale currency-sized features down to O(1)
    std::vector<double> scales(d, 1.0);
    scales[0] = 1.0 / cfg.env.initial_amount;
    env.reset(ws.start, ws.end);
    for (std::size_t a = 0; a < ws.panel.num_assets(); ++a) {
        scales[1 + a] = 1.0 / std::max<double>(1, env.position_cap());
        scales[1 + ws.panel.num_assets() + a] = 1.0 / env.state().prices[a];
    }
    for (std::size_t j = 1 + 2 * ws.panel.num_assets(); j < d; ++j) scales[j] = 1e-2;
    policy.set_feature_scales(scales);

    PpoTrainer trainer(env, policy, cfg.agent);
    TrainReport report = trainer.train(ws.start, ws.end);

    std::ostringstream jsonl;
    for (const auto& rec : report.iterations) {
        nlohmann::json row = {{"iteration", rec.iteration},
                              {"mean_reward", rec.mean_reward},
                              {"objective", rec.objective},
                              {"step_size", rec.step_size},
                              {"seed", cfg.seed},
                              {"config_hash", cfg.config_hash()}};
        jsonl << row.dump() << "\n";
    }
    write_file_atomic(cfg.out_dir + "/training.jsonl", jsonl.str());

    std::ostringstream ck;
    save_checkpoint(ck, policy, cfg.seed);
    write_file_atomic(cfg.out_dir + "/checkpoint.txt", ck.str());

    nlohmann::json summary = run_stamp(cfg);
    summary["iterations"] = report.iterations.size();
    summary["final_mean_reward"] = report.final_mean_reward;
    summary["last_quartile_slope"] = report.last_quartile_slope;
    summary["diverged"] = report.diverged;
    write_file_atomic(cfg.out_dir + "/train_summary.json", summary.dump(2) + "\n");

    if (report.diverged) {
        std::cerr << "training diverged (NaN objective)\n";
        return 5;
    }
    std::cout << "train: " << report.iterations.size() << " iterations, final mean reward "
              << report.final_mean_reward << ", last-quartile slope "
              << report.last_quartile_slope << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-aware composite-reward trading toolkit"};
    app.require_subcommand(1);

    CliOverrides o;
    app.add_option("--config", o.config_path, "TOML config file");
    app.add_option("--data", o.data, "OHLCV CSV path(s), .gz accepted");
    app.add_option("--tickers", o.tickers, "tradeable tickers");
    app.add_option("--benchmark", o.benchmark, "benchmark (and default market) ticker");
    app.add_option("--from", o.from, "start date, ISO-8601");
    app.add_option("--to", o.to, "end date, ISO-8601");
    app.add_option("--weights", o.weights, "reward weights w1,w2,w3,w4");
    app.add_option("--step", o.step, "tuner grid step");
    app.add_option("--seed", o.seed, "seed for all stochastic work");
    app.add_option("--mode", o.mode, "reward mode: terminal|potential");
    app.add_option("--out", o.out, "output directory (RISKWARD_OUT fallback)");

    auto* ingest = app.add_subcommand("ingest", "parse and cache OHLCV data");
    auto* backtest = app.add_subcommand("backtest", "run one episode and report metrics");
    backtest->add_option("--policy", o.policy, "flat|buy_and_hold|random|greedy")
        ->default_val("buy_and_hold");
    backtest->add_option("--checkpoint", o.checkpoint, "trained policy checkpoint");
    auto* gradcheck = app.add_subcommand("gradcheck", "verify analytic reward gradients");
    gradcheck->add_option("--instances", o.instances, "random instances")->default_val(100);
    auto* tune = app.add_subcommand("tune", "simplex grid search over reward weights");
    auto* train = app.add_subcommand("train", "PPO training run");
    train->add_option("--resume", o.checkpoint, "checkpoint to resume from");
    train->add_option("--iterations", o.iterations, "training iterations");
    train->add_option("--learning-rate", o.learning_rate, "initial step size");

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try {
        cfg = build_config(o);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (gradcheck->parsed()) return cmd_gradcheck(cfg, o.instances);
        try {
            if (ingest->parsed()) return cmd_ingest(cfg);
            if (backtest->parsed()) return cmd_backtest(cfg, o.policy, o.checkpoint);
            if (tune->parsed()) return cmd_tune(cfg);
            if (train->parsed()) return cmd_train(cfg, o.checkpoint);
        } catch (const std::runtime_error& e) {
            // data-shaped failures: missing files, parse errors, bad ranges
            std::cerr << "data error: " << e.what() << "\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
