#pragma once

// OHLCV ingestion, calendar alignment and return-series construction.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskward {

// Calendar day, stored as days since epoch-ish via y/m/d packing. Only
// ordering and equality matter; ISO-8601 round trip is preserved.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    static Date parse(const std::string& iso) {
        Date d;
        char dash1 = 0, dash2 = 0;
        std::istringstream ss(iso);
        ss >> d.year >> dash1 >> d.month >> dash2 >> d.day;
        if (ss.fail() || dash1 != '-' || dash2 != '-' || d.month < 1 || d.month > 12 ||
            d.day < 1 || d.day > 31) {
            throw std::invalid_argument("invalid ISO-8601 date: '" + iso + "'");
        }
        return d;
    }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
        return buf;
    }

    int key() const { return year * 10000 + month * 100 + day; }

    friend bool operator==(const Date& a, const Date& b) { return a.key() == b.key(); }
    friend bool operator!=(const Date& a, const Date& b) { return a.key() != b.key(); }
    friend bool operator<(const Date& a, const Date& b) { return a.key() < b.key(); }
    friend bool operator<=(const Date& a, const Date& b) { return a.key() <= b.key(); }
};

struct Bar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;
    std::string ticker;

    void validate() const {
        if (open <= 0.0 || high <= 0.0 || low <= 0.0 || close <= 0.0) {
            throw std::invalid_argument("nonpositive price for " + ticker + " on " +
                                        date.to_string());
        }
        if (volume < 0.0) {
            throw std::invalid_argument("negative volume for " + ticker + " on " +
                                        date.to_string());
        }
        if (low > std::min(open, close) || high < std::max(open, close)) {
            throw std::invalid_argument("inconsistent OHLC for " + ticker + " on " +
                                        date.to_string());
        }
    }
};

struct PriceSeries {
    std::string ticker;
    std::vector<Bar> bars;  // strictly increasing dates
};

// Per-period simple returns; every value > -1 and T >= 1.
struct ReturnSeries {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    double mean() const {
        if (values.empty()) return 0.0;
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
};

// All series share one calendar and length; returns are length dates.size().
struct AlignedPanel {
    std::vector<Date> dates;          // calendar of the *return* periods (end dates)
    std::vector<std::string> tickers;
    std::vector<ReturnSeries> asset_returns;
    std::vector<std::vector<double>> asset_closes;   // close at each return end date
    std::vector<std::vector<double>> asset_highs;
    std::vector<std::vector<double>> asset_lows;
    std::vector<std::vector<double>> asset_volumes;
    ReturnSeries benchmark_returns;
    ReturnSeries market_returns;

    std::size_t length() const { return dates.size(); }
    std::size_t num_assets() const { return asset_returns.size(); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// Parses `date,open,high,low,close,volume,ticker` rows into one sorted
// PriceSeries per ticker. Duplicate (ticker, date) pairs are an error.
inline std::vector<PriceSeries> parse_ohlcv_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV input");
    if (detail::trim(line) != "date,open,high,low,close,volume,ticker") {
        throw std::runtime_error("bad CSV header, expected "
                                 "'date,open,high,low,close,volume,ticker'");
    }

    std::map<std::string, std::vector<Bar>> by_ticker;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 7) {
            throw std::runtime_error("line " + std::to_string(lineno) +
                                     ": expected 7 fields, got " +
                                     std::to_string(fields.size()));
        }
        Bar bar;
        try {
            bar.date = Date::parse(detail::trim(fields[0]));
            bar.open = std::stod(fields[1]);
            bar.high = std::stod(fields[2]);
            bar.low = std::stod(fields[3]);
            bar.close = std::stod(fields[4]);
            bar.volume = std::stod(fields[5]);
            bar.ticker = detail::trim(fields[6]);
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (bar.ticker.empty()) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": empty ticker");
        }
        try {
            bar.validate();
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
        }
        by_ticker[bar.ticker].push_back(bar);
    }

    std::vector<PriceSeries> out;
    for (auto& [ticker, bars] : by_ticker) {
        std::stable_sort(bars.begin(), bars.end(),
                         [](const Bar& a, const Bar& b) { return a.date < b.date; });
        for (std::size_t i = 1; i < bars.size(); ++i) {
            if (bars[i].date == bars[i - 1].date) {
                throw std::runtime_error("duplicate (" + ticker + ", " +
                                         bars[i].date.to_string() + ")");
            }
        }
        out.push_back(PriceSeries{ticker, std::move(bars)});
    }
    return out;
}

inline void write_ohlcv_csv(std::ostream& out, const std::vector<PriceSeries>& series) {
    out << "date,open,high,low,close,volume,ticker\n";
    char buf[256];
    for (const auto& s : series) {
        for (const auto& b : s.bars) {
            std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%.10g,%s\n",
                          b.date.to_string().c_str(), b.open, b.high, b.low, b.close,
                          b.volume, s.ticker.c_str());
            out << buf;
        }
    }
}

// values[t] = close[t+1]/close[t] - 1
inline ReturnSeries to_returns(const PriceSeries& prices) {
    if (prices.bars.size() < 2) {
        throw std::invalid_argument("need >= 2 bars to compute returns (" +
                                    prices.ticker + ")");
    }
    ReturnSeries rs;
    rs.values.reserve(prices.bars.size() - 1);
    for (std::size_t i = 1; i < prices.bars.size(); ++i) {
        rs.values.push_back(prices.bars[i].close / prices.bars[i - 1].close - 1.0);
    }
    return rs;
}

// Restricts all series to the shared date intersection, then computes returns.
inline AlignedPanel align(const std::vector<PriceSeries>& assets,
                          const PriceSeries& benchmark, const PriceSeries& market) {
    if (assets.empty()) throw std::invalid_argument("align: no asset series");

    auto dates_of = [](const PriceSeries& s) {
        std::set<int> keys;
        for (const auto& b : s.bars) keys.insert(b.date.key());
        return keys;
    };

    std::set<int> common = dates_of(assets.front());
    auto intersect = [&common](const std::set<int>& other) {
        std::set<int> next;
        std::set_intersection(common.begin(), common.end(), other.begin(), other.end(),
                              std::inserter(next, next.begin()));
        common = std::move(next);
    };
    for (std::size_t i = 1; i < assets.size(); ++i) intersect(dates_of(assets[i]));
    intersect(dates_of(benchmark));
    intersect(dates_of(market));

    if (common.empty()) throw std::runtime_error("align: empty date intersection");
    if (common.size() < 2) throw std::runtime_error("align: fewer than 2 shared dates");

    auto restrict_series = [&common](const PriceSeries& s) {
        PriceSeries out{s.ticker, {}};
        for (const auto& b : s.bars) {
            if (common.count(b.date.key())) out.bars.push_back(b);
        }
        return out;
    };

    AlignedPanel panel;
    PriceSeries b0 = restrict_series(assets.front());
    for (std::size_t i = 1; i < b0.bars.size(); ++i) panel.dates.push_back(b0.bars[i].date);

    for (const auto& a : assets) {
        PriceSeries r = restrict_series(a);
        panel.tickers.push_back(r.ticker);
        panel.asset_returns.push_back(to_returns(r));
        std::vector<double> closes, highs, lows, volumes;
        for (std::size_t i = 1; i < r.bars.size(); ++i) {
            closes.push_back(r.bars[i].close);
            highs.push_back(r.bars[i].high);
            lows.push_back(r.bars[i].low);
            volumes.push_back(r.bars[i].volume);
        }
        panel.asset_closes.push_back(std::move(closes));
        panel.asset_highs.push_back(std::move(highs));
        panel.asset_lows.push_back(std::move(lows));
        panel.asset_volumes.push_back(std::move(volumes));
    }
    panel.benchmark_returns = to_returns(restrict_series(benchmark));
    panel.market_returns = to_returns(restrict_series(market));
    return panel;
}

}  // namespace riskward
