#pragma once

// File plumbing for the CLI: transparent gzip reads, atomic writes
// (temp + rename) and the CSV/JSON report writers.

#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskward/env.hpp"
#include "riskward/indicators.hpp"
#include "riskward/tuner.hpp"

#include "json.hpp"

namespace riskward {

// Reads a whole file into a string; .gz paths are inflated via zlib.
inline std::string read_file(const std::string& path) {
    if (path.size() > 3 && path.substr(path.size() - 3) == ".gz") {
        gzFile gz = gzopen(path.c_str(), "rb");
        if (gz == nullptr) throw std::runtime_error("cannot open " + path);
        std::string out;
        char buf[1 << 16];
        int n;
        while ((n = gzread(gz, buf, sizeof(buf))) > 0) out.append(buf, n);
        bool err = n < 0;
        gzclose(gz);
        if (err) throw std::runtime_error("gzip read error in " + path);
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

// Long-format indicator dump: date,ticker,indicator,value
inline std::string indicators_to_csv(const AlignedPanel& panel, const IndicatorSet& set) {
    std::ostringstream out;
    out << "date,ticker,indicator,value\n";
    char buf[128];
    for (std::size_t a = 0; a < panel.num_assets(); ++a) {
        for (const auto& name : IndicatorConfig::names()) {
            const auto& vals = set.per_asset[a].by_name(name);
            for (std::size_t t = 0; t < panel.length(); ++t) {
                std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.10g\n",
                              panel.dates[t].to_string().c_str(),
                              panel.tickers[a].c_str(), name.c_str(), vals[t]);
                out << buf;
            }
        }
    }
    return out.str();
}

// Episode log: t,action...,fills...,fees,cash,value,R_pt,reward
inline std::string episode_to_csv(const EpisodeLog& log, std::size_t stock_dim) {
    std::ostringstream out;
    out << "t";
    for (std::size_t i = 0; i < stock_dim; ++i) out << ",action" << i;
    for (std::size_t i = 0; i < stock_dim; ++i) out << ",fill" << i;
    out << ",fees,cash,value,R_pt,reward\n";
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    for (std::size_t t = 0; t < log.rewards.size(); ++t) {
        out << t;
        for (std::size_t i = 0; i < stock_dim; ++i) out << ',' << num(log.actions[t][i]);
        for (std::size_t i = 0; i < stock_dim; ++i) out << ',' << log.fills[t][i];
        out << ',' << num(log.fees[t]) << ',' << num(log.cash[t]) << ','
            << num(log.value[t]) << ',' << num(log.returns[t]) << ','
            << num(log.rewards[t]) << '\n';
    }
    return out.str();
}

// Sweep CSV: w1,w2,w3,w4,ann_return,max_dd,sharpe,sortino,beta,win_rate,composite_R,flags
inline std::string sweep_to_csv(const std::vector<TuneRecord>& records) {
    std::ostringstream out;
    out << "w1,w2,w3,w4,ann_return,max_dd,sharpe,sortino,beta,win_rate,composite_R,flags\n";
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    for (const auto& r : records) {
        out << num(r.weights.w1) << ',' << num(r.weights.w2) << ',' << num(r.weights.w3)
            << ',' << num(r.weights.w4) << ',' << num(r.ann_return) << ',' << num(r.max_dd)
            << ',' << num(r.sharpe) << ',' << num(r.sortino) << ',' << num(r.beta) << ','
            << num(r.win_rate) << ',' << num(r.composite) << ',' << r.flags_joined() << '\n';
    }
    return out.str();
}

inline nlohmann::json frontier_to_json(const std::vector<TuneRecord>& records,
                                       const Frontier& frontier) {
    nlohmann::json recs = nlohmann::json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        recs.push_back({{"index", i},
                        {"weights", {r.weights.w1, r.weights.w2, r.weights.w3, r.weights.w4}},
                        {"ann_return", r.ann_return},
                        {"max_dd", r.max_dd},
                        {"composite", r.composite},
                        {"dominated", static_cast<bool>(frontier.dominated[i])}});
    }
    return nlohmann::json{{"frontier_indices", frontier.frontier_indices},
                          {"records", recs}};
}

}  // namespace riskward
