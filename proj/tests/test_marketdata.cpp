#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "riskward/marketdata.hpp"

using namespace riskward;

namespace {

std::string row(const std::string& date, double close, const std::string& ticker,
                double volume = 1000) {
    std::ostringstream ss;
    ss << date << ',' << close << ',' << close << ',' << close << ',' << close << ','
       << volume << ',' << ticker << '\n';
    return ss.str();
}

const std::string kHeader = "date,open,high,low,close,volume,ticker\n";

PriceSeries make_series(const std::string& ticker, const std::vector<double>& closes,
                        int start_day = 1) {
    PriceSeries s{ticker, {}};
    for (std::size_t i = 0; i < closes.size(); ++i) {
        Bar b;
        int day = start_day + static_cast<int>(i);
        b.date = Date{2024, 1 + day / 28, 1 + day % 28};
        b.open = b.high = b.low = b.close = closes[i];
        b.volume = 1000;
        b.ticker = ticker;
        s.bars.push_back(b);
    }
    return s;
}

}  // namespace

TEST_CASE("date parse and order") {
    Date d = Date::parse("2024-03-07");
    CHECK(d.to_string() == "2024-03-07");
    CHECK(Date::parse("2024-03-07") < Date::parse("2024-03-08"));
    CHECK(Date::parse("2023-12-31") < Date::parse("2024-01-01"));
    CHECK_THROWS_AS(Date::parse("not-a-date"), std::invalid_argument);
    CHECK_THROWS_AS(Date::parse("2024-13-01"), std::invalid_argument);
}

TEST_CASE("parse two valid rows for one ticker") {
    std::istringstream in(kHeader + row("2024-01-02", 100, "AAA") +
                          row("2024-01-03", 101, "AAA"));
    auto series = parse_ohlcv_csv(in);
    REQUIRE(series.size() == 1);
    CHECK(series[0].ticker == "AAA");
    REQUIRE(series[0].bars.size() == 2);
    CHECK(series[0].bars[1].close == 101);
}

TEST_CASE("parse rejects nonpositive price with line number") {
    std::istringstream in(kHeader + row("2024-01-02", 100, "AAA") +
                          row("2024-01-03", 0, "AAA"));
    CHECK_THROWS_WITH(parse_ohlcv_csv(in),
                      Catch::Matchers::ContainsSubstring("nonpositive price") &&
                          Catch::Matchers::ContainsSubstring("line 3"));
}

TEST_CASE("parse rejects malformed row and duplicates") {
    {
        std::istringstream in(kHeader + "2024-01-02,100,100\n");
        CHECK_THROWS_WITH(parse_ohlcv_csv(in),
                          Catch::Matchers::ContainsSubstring("line 2"));
    }
    {
        std::istringstream in(kHeader + row("2024-01-02", 100, "AAA") +
                              row("2024-01-02", 101, "AAA"));
        CHECK_THROWS_WITH(parse_ohlcv_csv(in),
                          Catch::Matchers::ContainsSubstring("duplicate"));
    }
}

TEST_CASE("shuffled multi-ticker input is grouped and sorted") {
    // 3 tickers x 5 days, deliberately shuffled; oracle: sort-and-group by hand
    std::vector<std::string> days = {"2024-01-02", "2024-01-03", "2024-01-04",
                                     "2024-01-05", "2024-01-08"};
    std::vector<std::string> tickers = {"AAA", "BBB", "CCC"};
    std::vector<std::string> rows;
    for (const auto& t : tickers) {
        for (std::size_t i = 0; i < days.size(); ++i) {
            rows.push_back(row(days[i], 100.0 + i, t));
        }
    }
    std::mt19937 rng(7);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::string csv = kHeader;
    for (const auto& r : rows) csv += r;

    std::istringstream in(csv);
    auto series = parse_ohlcv_csv(in);
    REQUIRE(series.size() == 3);
    for (const auto& s : series) {
        REQUIRE(s.bars.size() == 5);
        for (std::size_t i = 1; i < s.bars.size(); ++i) {
            CHECK(s.bars[i - 1].date < s.bars[i].date);
        }
    }
}

TEST_CASE("to_returns basic arithmetic") {
    CHECK(to_returns(make_series("X", {100, 101})).values ==
          std::vector<double>{101.0 / 100.0 - 1.0});
    CHECK(to_returns(make_series("X", {50, 50, 50})).values ==
          std::vector<double>{0.0, 0.0});
    auto rs = to_returns(make_series("X", {100, 90, 99}));
    REQUIRE(rs.size() == 2);
    CHECK_THAT(rs[0], Catch::Matchers::WithinAbs(-0.10, 1e-15));
    CHECK_THAT(rs[1], Catch::Matchers::WithinAbs(0.10, 1e-15));
    CHECK_THROWS_AS(to_returns(make_series("X", {100})), std::invalid_argument);
}

TEST_CASE("csv round trip preserves series") {
    auto original = make_series("RT", {100, 101.5, 99.25, 103});
    std::ostringstream out;
    write_ohlcv_csv(out, {original});
    std::istringstream in(out.str());
    auto reparsed = parse_ohlcv_csv(in);
    REQUIRE(reparsed.size() == 1);
    REQUIRE(reparsed[0].bars.size() == original.bars.size());
    for (std::size_t i = 0; i < original.bars.size(); ++i) {
        CHECK(reparsed[0].bars[i].date == original.bars[i].date);
        CHECK(reparsed[0].bars[i].close == original.bars[i].close);
        CHECK(reparsed[0].bars[i].volume == original.bars[i].volume);
    }
}

TEST_CASE("returns rebuild the close ratio") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> step(-0.05, 0.05);
    std::vector<double> closes = {100.0};
    for (int i = 0; i < 200; ++i) closes.push_back(closes.back() * (1.0 + step(rng)));
    auto rs = to_returns(make_series("X", closes));
    double prod = 1.0;
    for (double r : rs.values) prod *= 1.0 + r;
    CHECK_THAT(prod, Catch::Matchers::WithinRel(closes.back() / closes.front(), 1e-12));
}

TEST_CASE("align with identical calendars") {
    auto a = make_series("A", {1, 2, 3, 4});
    auto b = make_series("B", {10, 11, 12, 13});
    auto panel = align({a, b}, b, b);
    CHECK(panel.length() == 3);  // input length - 1
    CHECK(panel.num_assets() == 2);
    CHECK(panel.benchmark_returns.values == panel.market_returns.values);
}

TEST_CASE("align drops missing middle dates everywhere") {
    auto a = make_series("A", {1, 2, 3, 4, 5});
    auto b = make_series("B", {10, 11, 12, 13, 14});
    b.bars.erase(b.bars.begin() + 2);  // drop the middle date of B
    auto panel = align({a, b}, a, a);
    CHECK(panel.length() == 3);  // 4 common dates -> 3 returns
    // A's return across the gap is the two-day move
    CHECK_THAT(panel.asset_returns[0][1], Catch::Matchers::WithinRel(4.0 / 2.0 - 1.0, 1e-12));
}

TEST_CASE("align rejects empty intersections") {
    auto a = make_series("A", {1, 2, 3}, 1);
    auto b = make_series("B", {1, 2, 3}, 50);
    CHECK_THROWS_AS(align({a}, b, b), std::runtime_error);
}

TEST_CASE("align output lengths match on random calendars") {
    std::mt19937 rng(23);
    std::bernoulli_distribution keep(0.8);
    for (int trial = 0; trial < 50; ++trial) {
        auto full_a = make_series("A", std::vector<double>(30, 100.0));
        auto full_b = make_series("B", std::vector<double>(30, 50.0));
        auto full_m = make_series("M", std::vector<double>(30, 10.0));
        auto thin = [&](PriceSeries s) {
            PriceSeries out{s.ticker, {}};
            for (auto& bar : s.bars) {
                if (keep(rng)) out.bars.push_back(bar);
            }
            return out;
        };
        PriceSeries a = thin(full_a), b = thin(full_b), m = thin(full_m);
        try {
            auto panel = align({a, b}, m, m);
            CHECK(panel.asset_returns[0].size() == panel.length());
            CHECK(panel.asset_returns[1].size() == panel.length());
            CHECK(panel.benchmark_returns.size() == panel.length());
            CHECK(panel.market_returns.size() == panel.length());
        } catch (const std::runtime_error&) {
            // intersection too small for this draw; acceptable outcome
        }
    }
}
