#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "riskward/env.hpp"

using namespace riskward;

namespace {

// Panel straight from close paths; benchmark/market are the first asset.
AlignedPanel panel_from_closes(const std::vector<std::vector<double>>& closes) {
    AlignedPanel p;
    std::size_t T = closes[0].size() - 1;
    for (std::size_t t = 0; t < T; ++t) {
        p.dates.push_back(Date{2023, 1 + static_cast<int>(t) / 28,
                               1 + static_cast<int>(t) % 28});
    }
    for (std::size_t a = 0; a < closes.size(); ++a) {
        p.tickers.push_back("A" + std::to_string(a));
        ReturnSeries rs;
        std::vector<double> c, h, l, v;
        for (std::size_t i = 1; i < closes[a].size(); ++i) {
            rs.values.push_back(closes[a][i] / closes[a][i - 1] - 1.0);
            c.push_back(closes[a][i]);
            h.push_back(closes[a][i]);
            l.push_back(closes[a][i]);
            v.push_back(100.0);
        }
        p.asset_returns.push_back(rs);
        p.asset_closes.push_back(c);
        p.asset_highs.push_back(h);
        p.asset_lows.push_back(l);
        p.asset_volumes.push_back(v);
    }
    p.benchmark_returns = p.asset_returns[0];
    p.market_returns = p.asset_returns[0];
    return p;
}

std::vector<std::vector<double>> random_closes(std::mt19937_64& rng, std::size_t assets,
                                               std::size_t days) {
    std::uniform_real_distribution<double> step(-0.03, 0.03);
    std::vector<std::vector<double>> out(assets);
    for (auto& path : out) {
        path.push_back(100.0);
        for (std::size_t i = 1; i < days; ++i) path.push_back(path.back() * (1.0 + step(rng)));
    }
    return out;
}

EnvConfig bare_config(double cost = 0.001) {
    EnvConfig cfg;
    cfg.initial_amount = 1e5;
    cfg.transaction_cost_rate = cost;
    cfg.indicator_names.clear();
    return cfg;
}

}  // namespace

TEST_CASE("h_max floor arithmetic") {
    CHECK(h_max(100000, 250) == 400);
    CHECK(h_max(100, 250) == 0);
    CHECK(h_max(1000, 1000) == 1);
    CHECK_THROWS_AS(h_max(1000, 0.0), std::invalid_argument);
}

TEST_CASE("state dimension formula") {
    CHECK(state_dimension(1, 0) == 3);
    CHECK(state_dimension(5, 10) == 61);
    CHECK(state_dimension(3, 9) == 34);
}

TEST_CASE("reset starts flat and is deterministic") {
    auto panel = panel_from_closes({{100, 101, 102, 103, 104}});
    TradingEnv env(panel, bare_config(), nullptr);
    EnvState s1 = env.reset(0, 3);
    CHECK(s1.cash == 1e5);
    CHECK(s1.portfolio_value == 1e5);
    CHECK(s1.holdings == std::vector<long>{0});
    EnvState s2 = env.reset(0, 3);
    CHECK(s1.flatten() == s2.flatten());
    CHECK_THROWS_AS(env.reset(3, 3), std::invalid_argument);
    CHECK_THROWS_AS(env.reset(0, 10), std::invalid_argument);
}

TEST_CASE("flattened state length matches the dimension formula") {
    auto panel = panel_from_closes({{100, 101, 102, 103}, {50, 51, 52, 53}});
    TradingEnv env(panel, bare_config(), nullptr);
    CHECK(env.dimension() == state_dimension(2, 0));
    EnvState s = env.reset(0, 2);
    CHECK(s.flatten().size() == env.dimension());
}

TEST_CASE("zero action on flat prices yields zero return and no fees") {
    auto panel = panel_from_closes({{100, 100, 100, 100}});
    TradingEnv env(panel, bare_config(), nullptr);
    env.reset(0, 2);
    auto out = env.step({0.0});
    CHECK(out.fills == std::vector<long>{0});
    CHECK(out.fees == 0.0);
    CHECK(out.portfolio_return == 0.0);
}

TEST_CASE("buy fee arithmetic is exact") {
    auto panel = panel_from_closes({{10, 10, 10, 10}});
    EnvConfig cfg = bare_config(0.001);
    cfg.initial_amount = 100000;
    TradingEnv env(panel, cfg, nullptr);
    env.reset(0, 2);
    // h_max = 100000/10 = 10000; a = 0.01 -> desired 100 shares
    auto out = env.step({0.01});
    CHECK(out.fills == std::vector<long>{100});
    CHECK(out.fees == 100 * 10.0 * 0.001);  // 1.00 fee
    CHECK(env.state().cash == 100000 - 1000.0 - 1.0);
}

TEST_CASE("sells are clipped to holdings") {
    auto panel = panel_from_closes({{10, 10, 10, 10}});
    TradingEnv env(panel, bare_config(0.0), nullptr);
    env.reset(0, 2);
    env.step({0.001});  // buy 10 shares (h_max = 1e4)
    REQUIRE(env.state().holdings[0] == 10);
    auto out = env.step({-1.0});  // sell request far beyond holdings
    CHECK(out.fills == std::vector<long>{-10});
    CHECK(env.state().holdings[0] == 0);
}

TEST_CASE("NaN action rejected, done at window end") {
    auto panel = panel_from_closes({{100, 101, 102, 103}});
    TradingEnv env(panel, bare_config(), nullptr);
    env.reset(0, 2);
    CHECK_THROWS_AS(env.step({std::nan("")}), std::invalid_argument);
    auto a = env.step({0.0});
    CHECK_FALSE(a.done);
    auto b = env.step({0.0});
    CHECK(b.done);
    CHECK_THROWS_AS(env.step({0.0}), std::logic_error);
}

TEST_CASE("zero-cost trading conserves value across the trade half") {
    std::mt19937_64 rng(1);
    auto panel = panel_from_closes(random_closes(rng, 3, 40));
    TradingEnv env(panel, bare_config(0.0), nullptr);
    env.reset(0, 39 - 1);
    std::uniform_real_distribution<double> act(-1.0, 1.0);
    bool done = false;
    while (!done) {
        double value_pre = env.state().cash;
        for (std::size_t a = 0; a < 3; ++a) {
            value_pre += env.state().holdings[a] * env.state().prices[a];
        }
        std::vector<double> action = {act(rng), act(rng), act(rng)};
        // replay the trade half at old prices: cash + holdings*old_prices
        auto old_prices = env.state().prices;
        auto out = env.step(action);
        double value_post_trade = out.state.cash;
        for (std::size_t a = 0; a < 3; ++a) {
            value_post_trade += out.state.holdings[a] * old_prices[a];
        }
        CHECK_THAT(value_post_trade, Catch::Matchers::WithinRel(value_pre, 1e-9));
        done = out.done;
    }
}

TEST_CASE("fees accumulate as executed notional times the rate") {
    std::mt19937_64 rng(2);
    auto panel = panel_from_closes(random_closes(rng, 2, 30));
    TradingEnv env(panel, bare_config(0.001), nullptr);
    env.reset(0, 28);
    std::uniform_real_distribution<double> act(-1.0, 1.0);
    double expected_fees = 0.0;
    bool done = false;
    while (!done) {
        auto prices = env.state().prices;
        auto out = env.step({act(rng), act(rng)});
        for (std::size_t a = 0; a < 2; ++a) {
            expected_fees += std::abs(out.fills[a]) * prices[a] * 0.001;
        }
        done = out.done;
    }
    CHECK_THAT(env.total_fees(), Catch::Matchers::WithinRel(expected_fees, 1e-12));
}

TEST_CASE("no negative cash or holdings under random action streams") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> act(-1.5, 1.5);  // exercises clipping too
    std::size_t steps_done = 0;
    while (steps_done < 100000) {
        auto panel = panel_from_closes(random_closes(rng, 2, 60));
        TradingEnv env(panel, bare_config(0.001), nullptr);
        env.reset(0, 58);
        bool done = false;
        while (!done) {
            auto out = env.step({act(rng), act(rng)});
            REQUIRE(out.state.cash >= 0.0);
            for (long h : out.state.holdings) REQUIRE(h >= 0);
            ++steps_done;
            done = out.done;
        }
    }
}

TEST_CASE("identical inputs give bit-identical outcome streams") {
    std::vector<std::vector<double>> closes;
    {
        std::mt19937_64 rng(4);
        closes = random_closes(rng, 2, 30);
    }
    auto run = [&closes]() {
        auto panel = panel_from_closes(closes);
        TradingEnv env(panel, bare_config(), nullptr);
        env.reset(0, 28);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> act(-1.0, 1.0);
        std::vector<double> trace;
        bool done = false;
        while (!done) {
            auto out = env.step({act(rng), act(rng)});
            trace.push_back(out.state.cash);
            trace.push_back(out.state.portfolio_value);
            trace.push_back(out.reward);
            done = out.done;
        }
        return trace;
    };
    CHECK(run() == run());
}

TEST_CASE("terminal mode pays the full composite at the end") {
    std::mt19937_64 rng(6);
    auto panel = panel_from_closes(random_closes(rng, 1, 30));
    EnvConfig cfg = bare_config();
    cfg.reward_mode = RewardMode::Terminal;
    TradingEnv env(panel, cfg, nullptr);
    env.reset(0, 28);
    std::uniform_real_distribution<double> act(-1.0, 1.0);
    double total = 0.0;
    bool done = false;
    std::vector<double> rewards;
    while (!done) {
        auto out = env.step({act(rng)});
        rewards.push_back(out.reward);
        total += out.reward;
        done = out.done;
    }
    for (std::size_t i = 0; i + 1 < rewards.size(); ++i) CHECK(rewards[i] == 0.0);
    double expected = prefix_composite(env.realized_returns(), env.benchmark_slice(),
                                       env.market_slice(), cfg.weights, cfg.metric_ctx,
                                       cfg.ann_mode);
    CHECK_THAT(total, Catch::Matchers::WithinAbs(expected, 1e-9));
}

TEST_CASE("potential mode telescopes to the terminal composite") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto panel = panel_from_closes(random_closes(rng, 2, 40));
        EnvConfig cfg = bare_config();
        cfg.reward_mode = RewardMode::Potential;
        TradingEnv env(panel, cfg, nullptr);
        env.reset(0, 38);
        std::uniform_real_distribution<double> act(-1.0, 1.0);
        double total = 0.0;
        bool done = false;
        while (!done) {
            auto out = env.step({act(rng), act(rng)});
            total += out.reward;
            done = out.done;
        }
        double expected = prefix_composite(env.realized_returns(), env.benchmark_slice(),
                                           env.market_slice(), cfg.weights, cfg.metric_ctx,
                                           cfg.ann_mode);
        CHECK_THAT(total, Catch::Matchers::WithinAbs(expected, 1e-9));
    }
}

TEST_CASE("one-step episode pays the length-1 composite") {
    auto panel = panel_from_closes({{100, 101, 102}});
    EnvConfig cfg = bare_config();
    TradingEnv env(panel, cfg, nullptr);
    env.reset(0, 1);
    auto out = env.step({0.5});
    CHECK(out.done);
    double expected = prefix_composite(env.realized_returns(), env.benchmark_slice(),
                                       env.market_slice(), cfg.weights, cfg.metric_ctx,
                                       cfg.ann_mode);
    CHECK_THAT(out.reward, Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("run_episode collects a consistent log") {
    std::mt19937_64 rng(8);
    auto panel = panel_from_closes(random_closes(rng, 2, 25));
    TradingEnv env(panel, bare_config(), nullptr);
    auto log = run_episode(env, 0, 23,
                           [](const std::vector<double>& s) {
                               return std::vector<double>(2, 0.2);
                           });
    CHECK(log.states.size() == 23);
    CHECK(log.actions.size() == log.rewards.size());
    CHECK(log.equity.size() == log.rewards.size() + 1);
    CHECK_THAT(log.total_reward,
               Catch::Matchers::WithinAbs(
                   prefix_composite(log.returns, env.benchmark_slice(), env.market_slice(),
                                    env.config().weights, env.config().metric_ctx,
                                    env.config().ann_mode),
               1e-9));
}
