#pragma once

// Run configuration: a small TOML-subset reader (sections, scalar and array
// values, # comments) plus the typed RunConfig the CLI commands consume.
// Precedence is flags > file > defaults; the CLI applies flag overrides after
// loading the file.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskward/agent.hpp"
#include "riskward/env.hpp"
#include "riskward/indicators.hpp"
#include "riskward/marketdata.hpp"

namespace riskward {

class TomlTable {
public:
    using Value = std::vector<std::string>;  // scalars are single-element arrays

    static TomlTable parse(std::istream& in) {
        TomlTable t;
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip_comment(line);
            s = detail::trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']') bad(lineno, "unterminated section header");
                section = detail::trim(s.substr(1, s.size() - 2));
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos) bad(lineno, "expected key = value");
            std::string key = detail::trim(s.substr(0, eq));
            std::string raw = detail::trim(s.substr(eq + 1));
            if (key.empty() || raw.empty()) bad(lineno, "empty key or value");
            std::string full = section.empty() ? key : section + "." + key;
            t.values_[full] = parse_value(raw, lineno);
        }
        return t;
    }

    static TomlTable parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        if (it == values_.end() || it->second.empty()) return fallback;
        return it->second.front();
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end() || it->second.empty()) return fallback;
        return std::stod(it->second.front());
    }

    long get_int(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end() || it->second.empty()) return fallback;
        return std::stol(it->second.front());
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end() || it->second.empty()) return fallback;
        return it->second.front() == "true";
    }

    std::vector<std::string> get_array(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return {};
        return it->second;
    }

    const std::map<std::string, Value>& entries() const { return values_; }

private:
    static void bad(std::size_t lineno, const std::string& what) {
        throw std::runtime_error("config line " + std::to_string(lineno) + ": " + what);
    }

    static std::string strip_comment(const std::string& line) {
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            if (line[i] == '#' && !in_string) return line.substr(0, i);
        }
        return line;
    }

    static std::string unquote(const std::string& s) {
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
            return s.substr(1, s.size() - 2);
        }
        return s;
    }

    static Value parse_value(const std::string& raw, std::size_t lineno) {
        if (raw.front() == '[') {
            if (raw.back() != ']') bad(lineno, "unterminated array");
            Value out;
            std::string inner = raw.substr(1, raw.size() - 2);
            std::istringstream ss(inner);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = detail::trim(item);
                if (!item.empty()) out.push_back(unquote(item));
            }
            return out;
        }
        return {unquote(raw)};
    }

    std::map<std::string, Value> values_;
};

struct RunConfig {
    std::vector<std::string> data_paths;
    std::vector<std::string> tickers;       // empty = all found in data
    std::string benchmark;                  // ticker; also market unless set
    std::string market;
    std::string from_date, to_date;         // optional ISO bounds
    EnvConfig env;
    IndicatorConfig indicators;
    TrainHyperparameters agent;
    double tuner_step = 0.1;
    std::string tuner_policy = "greedy";
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::string reward_mode = "potential";

    static RunConfig from_toml(const TomlTable& t) {
        RunConfig c;
        c.data_paths = t.get_array("data.paths");
        c.tickers = t.get_array("data.tickers");
        c.benchmark = t.get_string("data.benchmark");
        c.market = t.get_string("data.market", c.benchmark);
        c.from_date = t.get_string("data.from");
        c.to_date = t.get_string("data.to");

        c.env.initial_amount = t.get_double("env.initial_amount", c.env.initial_amount);
        c.env.transaction_cost_rate =
            t.get_double("env.transaction_cost_rate", c.env.transaction_cost_rate);
        if (t.has("env.indicators")) c.env.indicator_names = t.get_array("env.indicators");
        c.reward_mode = t.get_string("env.reward_mode", c.reward_mode);
        c.env.reward_mode =
            c.reward_mode == "terminal" ? RewardMode::Terminal : RewardMode::Potential;

        c.env.weights.w1 = t.get_double("reward.w1", c.env.weights.w1);
        c.env.weights.w2 = t.get_double("reward.w2", c.env.weights.w2);
        c.env.weights.w3 = t.get_double("reward.w3", c.env.weights.w3);
        c.env.weights.w4 = t.get_double("reward.w4", c.env.weights.w4);

        c.env.metric_ctx.risk_free_rate =
            t.get_double("metrics.risk_free_rate", c.env.metric_ctx.risk_free_rate);
        c.env.metric_ctx.annualization =
            t.get_double("metrics.annualization", c.env.metric_ctx.annualization);
        c.env.metric_ctx.r_max = t.get_double("metrics.r_max", c.env.metric_ctx.r_max);
        c.env.metric_ctx.beta_min = t.get_double("metrics.beta_min", c.env.metric_ctx.beta_min);
        c.env.metric_ctx.beta_max = t.get_double("metrics.beta_max", c.env.metric_ctx.beta_max);

        c.indicators.macd_fast = (int)t.get_int("indicators.macd_fast", c.indicators.macd_fast);
        c.indicators.macd_slow = (int)t.get_int("indicators.macd_slow", c.indicators.macd_slow);
        c.indicators.bollinger_window =
            (int)t.get_int("indicators.bollinger_window", c.indicators.bollinger_window);
        c.indicators.bollinger_k =
            t.get_double("indicators.bollinger_k", c.indicators.bollinger_k);
        c.indicators.rsi_window = (int)t.get_int("indicators.rsi_window", c.indicators.rsi_window);
        c.indicators.cci_window = (int)t.get_int("indicators.cci_window", c.indicators.cci_window);
        c.indicators.dmi_window = (int)t.get_int("indicators.dmi_window", c.indicators.dmi_window);
        c.indicators.sma_short = (int)t.get_int("indicators.sma_short", c.indicators.sma_short);
        c.indicators.sma_long = (int)t.get_int("indicators.sma_long", c.indicators.sma_long);
        c.indicators.turbulence_lookback =
            (int)t.get_int("indicators.turbulence_lookback", c.indicators.turbulence_lookback);

        c.agent.iterations = (std::size_t)t.get_int("agent.iterations", (long)c.agent.iterations);
        c.agent.epochs = (std::size_t)t.get_int("agent.epochs", (long)c.agent.epochs);
        c.agent.learning_rate = t.get_double("agent.learning_rate", c.agent.learning_rate);
        c.agent.lr_decay = t.get_double("agent.lr_decay", c.agent.lr_decay);
        c.agent.value_learning_rate =
            t.get_double("agent.value_learning_rate", c.agent.value_learning_rate);
        c.agent.gamma = t.get_double("agent.gamma", c.agent.gamma);
        c.agent.lambda = t.get_double("agent.lambda", c.agent.lambda);
        c.agent.clip_epsilon = t.get_double("agent.clip_epsilon", c.agent.clip_epsilon);

        c.tuner_step = t.get_double("tuner.step", c.tuner_step);
        c.tuner_policy = t.get_string("tuner.policy", c.tuner_policy);
        c.seed = (std::uint64_t)t.get_int("seed", (long)c.seed);
        c.out_dir = t.get_string("out", c.out_dir);
        return c;
    }

    // FNV-1a over the canonical key=value dump; embedded in every output
    std::string config_hash() const {
        std::ostringstream ss;
        ss << "data=";
        for (const auto& p : data_paths) ss << p << ';';
        for (const auto& t : tickers) ss << t << ';';
        ss << benchmark << '|' << market << '|' << from_date << '|' << to_date << '|'
           << env.initial_amount << '|' << env.transaction_cost_rate << '|'
           << env.weights.w1 << ',' << env.weights.w2 << ',' << env.weights.w3 << ','
           << env.weights.w4 << '|' << env.metric_ctx.risk_free_rate << '|'
           << (env.reward_mode == RewardMode::Terminal ? "terminal" : "potential") << '|'
           << tuner_step << '|' << tuner_policy << '|' << seed << '|'
           << agent.iterations << ',' << agent.learning_rate << ',' << agent.clip_epsilon;
        std::uint64_t h = 1469598103934665603ull;
        for (char ch : ss.str()) {
            h ^= static_cast<unsigned char>(ch);
            h *= 1099511628211ull;
        }
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

}  // namespace riskward
