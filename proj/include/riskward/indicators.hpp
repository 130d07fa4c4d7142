#pragma once

// Technical indicators feeding the environment state vector. Every sequence
// has the same length as its input; positions without full history are zero
// and marked in a warm-up mask instead of being truncated.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskward/marketdata.hpp"

namespace riskward {

struct IndicatorConfig {
    int macd_fast = 12;
    int macd_slow = 26;
    int bollinger_window = 20;
    double bollinger_k = 2.0;
    int rsi_window = 14;
    int cci_window = 14;
    int dmi_window = 14;
    int sma_short = 30;
    int sma_long = 60;
    int turbulence_lookback = 252;

    void validate() const {
        if (macd_fast < 2 || macd_slow < 2 || bollinger_window < 2 || rsi_window < 2 ||
            cci_window < 2 || dmi_window < 2 || sma_short < 2 || sma_long < 2 ||
            turbulence_lookback < 2) {
            throw std::invalid_argument("indicator windows must be >= 2");
        }
        if (macd_fast >= macd_slow) {
            throw std::invalid_argument("macd fast span must be < slow span");
        }
    }

    // One state feature per name per asset; DMI contributes ADX only.
    static const std::vector<std::string>& names() {
        static const std::vector<std::string> n = {
            "volume", "macd", "boll_ub", "boll_lb", "rsi",
            "cci",    "adx",  "sma30",   "sma60",   "turbulence"};
        return n;
    }
    static std::size_t count() { return names().size(); }
};

struct AssetIndicators {
    std::vector<double> volume;
    std::vector<double> macd;
    std::vector<double> boll_ub;
    std::vector<double> boll_lb;
    std::vector<double> rsi;
    std::vector<double> cci;
    std::vector<double> adx;
    std::vector<double> sma30;
    std::vector<double> sma60;
    std::vector<double> turbulence;  // panel-level, replicated per asset

    const std::vector<double>& by_name(const std::string& name) const {
        if (name == "volume") return volume;
        if (name == "macd") return macd;
        if (name == "boll_ub") return boll_ub;
        if (name == "boll_lb") return boll_lb;
        if (name == "rsi") return rsi;
        if (name == "cci") return cci;
        if (name == "adx") return adx;
        if (name == "sma30") return sma30;
        if (name == "sma60") return sma60;
        if (name == "turbulence") return turbulence;
        throw std::invalid_argument("unknown indicator: " + name);
    }
};

struct IndicatorSet {
    std::vector<AssetIndicators> per_asset;
    std::vector<bool> warmup;  // true while any indicator lacks full history
    std::size_t length = 0;

    // first index where all indicators are live; length if never
    std::size_t first_live() const {
        for (std::size_t t = 0; t < warmup.size(); ++t) {
            if (!warmup[t]) return t;
        }
        return length;
    }
};

// Recursive smoothing with alpha = 2/(span+1), seeded with the first value.
inline std::vector<double> ema(const std::vector<double>& values, int span) {
    if (values.empty()) throw std::invalid_argument("ema: empty input");
    if (span < 1) throw std::invalid_argument("ema: span must be >= 1");
    const double alpha = 2.0 / (span + 1.0);
    std::vector<double> out(values.size());
    out[0] = values[0];
    for (std::size_t i = 1; i < values.size(); ++i) {
        out[i] = alpha * values[i] + (1.0 - alpha) * out[i - 1];
    }
    return out;
}

inline std::vector<double> macd(const std::vector<double>& closes,
                                const IndicatorConfig& cfg = {}) {
    cfg.validate();
    auto fast = ema(closes, cfg.macd_fast);
    auto slow = ema(closes, cfg.macd_slow);
    std::vector<double> out(closes.size());
    for (std::size_t i = 0; i < closes.size(); ++i) out[i] = fast[i] - slow[i];
    return out;
}

// Rolling SMA +/- k * population std. Leading window-1 entries are zero.
inline std::pair<std::vector<double>, std::vector<double>> bollinger(
    const std::vector<double>& closes, int window, double k) {
    if (window < 1) throw std::invalid_argument("bollinger: window must be >= 1");
    if (closes.size() < static_cast<std::size_t>(window)) {
        throw std::invalid_argument("bollinger: series shorter than window");
    }
    std::vector<double> upper(closes.size(), 0.0), lower(closes.size(), 0.0);
    for (std::size_t i = window - 1; i < closes.size(); ++i) {
        double mean = 0.0;
        for (int j = 0; j < window; ++j) mean += closes[i - j];
        mean /= window;
        double var = 0.0;
        for (int j = 0; j < window; ++j) {
            double d = closes[i - j] - mean;
            var += d * d;
        }
        var /= window;
        double sd = std::sqrt(var);
        upper[i] = mean + k * sd;
        lower[i] = mean - k * sd;
    }
    return {upper, lower};
}

// Wilder-smoothed RSI. All-gain windows read 100, all-loss 0.
inline std::vector<double> rsi(const std::vector<double>& closes, int window) {
    if (window < 1) throw std::invalid_argument("rsi: window must be >= 1");
    if (closes.size() < static_cast<std::size_t>(window) + 1) {
        throw std::invalid_argument("rsi: need at least window+1 closes");
    }
    std::vector<double> out(closes.size(), 0.0);
    double avg_gain = 0.0, avg_loss = 0.0;
    for (int i = 1; i <= window; ++i) {
        double ch = closes[i] - closes[i - 1];
        if (ch > 0) avg_gain += ch; else avg_loss -= ch;
    }
    avg_gain /= window;
    avg_loss /= window;
    auto rsi_of = [](double g, double l) {
        if (l == 0.0 && g == 0.0) return 50.0;
        if (l == 0.0) return 100.0;
        return 100.0 - 100.0 / (1.0 + g / l);
    };
    out[window] = rsi_of(avg_gain, avg_loss);
    for (std::size_t i = window + 1; i < closes.size(); ++i) {
        double ch = closes[i] - closes[i - 1];
        double gain = ch > 0 ? ch : 0.0;
        double loss = ch < 0 ? -ch : 0.0;
        avg_gain = (avg_gain * (window - 1) + gain) / window;
        avg_loss = (avg_loss * (window - 1) + loss) / window;
        out[i] = rsi_of(avg_gain, avg_loss);
    }
    return out;
}

namespace detail {

inline std::vector<double> rolling_sma(const std::vector<double>& v, int window) {
    std::vector<double> out(v.size(), 0.0);
    if (v.size() < static_cast<std::size_t>(window)) return out;
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += v[i];
        if (i >= static_cast<std::size_t>(window)) acc -= v[i - window];
        if (i + 1 >= static_cast<std::size_t>(window)) out[i] = acc / window;
    }
    return out;
}

// CCI with the 0.015 Lambert constant; 0/0 reads 0.
inline std::vector<double> cci(const std::vector<double>& highs,
                               const std::vector<double>& lows,
                               const std::vector<double>& closes, int window) {
    std::vector<double> tp(closes.size());
    for (std::size_t i = 0; i < closes.size(); ++i) {
        tp[i] = (highs[i] + lows[i] + closes[i]) / 3.0;
    }
    std::vector<double> out(closes.size(), 0.0);
    for (std::size_t i = window - 1; i < tp.size(); ++i) {
        double mean = 0.0;
        for (int j = 0; j < window; ++j) mean += tp[i - j];
        mean /= window;
        double md = 0.0;
        for (int j = 0; j < window; ++j) md += std::abs(tp[i - j] - mean);
        md /= window;
        if (md > 0.0) out[i] = (tp[i] - mean) / (0.015 * md);
    }
    return out;
}

// Wilder ADX from +DI/-DI; degenerate (flat) stretches read 0.
inline std::vector<double> adx(const std::vector<double>& highs,
                               const std::vector<double>& lows,
                               const std::vector<double>& closes, int window) {
    const std::size_t n = closes.size();
    std::vector<double> out(n, 0.0);
    if (n < static_cast<std::size_t>(2 * window)) return out;

    std::vector<double> tr(n, 0.0), pdm(n, 0.0), ndm(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double up = highs[i] - highs[i - 1];
        double down = lows[i - 1] - lows[i];
        pdm[i] = (up > down && up > 0) ? up : 0.0;
        ndm[i] = (down > up && down > 0) ? down : 0.0;
        tr[i] = std::max({highs[i] - lows[i], std::abs(highs[i] - closes[i - 1]),
                          std::abs(lows[i] - closes[i - 1])});
    }

    double str = 0.0, spdm = 0.0, sndm = 0.0;
    for (int i = 1; i <= window; ++i) {
        str += tr[i];
        spdm += pdm[i];
        sndm += ndm[i];
    }
    std::vector<double> dx(n, 0.0);
    auto dx_of = [](double s_tr, double s_p, double s_n) {
        if (s_tr <= 0.0) return 0.0;
        double pdi = 100.0 * s_p / s_tr;
        double ndi = 100.0 * s_n / s_tr;
        double sum = pdi + ndi;
        return sum > 0.0 ? 100.0 * std::abs(pdi - ndi) / sum : 0.0;
    };
    dx[window] = dx_of(str, spdm, sndm);
    for (std::size_t i = window + 1; i < n; ++i) {
        str = str - str / window + tr[i];
        spdm = spdm - spdm / window + pdm[i];
        sndm = sndm - sndm / window + ndm[i];
        dx[i] = dx_of(str, spdm, sndm);
    }
    // ADX = Wilder smoothing of DX, seeded by the first full-window mean
    double adx_val = 0.0;
    for (int i = window; i < 2 * window; ++i) adx_val += dx[i];
    adx_val /= window;
    out[2 * window - 1] = adx_val;
    for (std::size_t i = 2 * window; i < n; ++i) {
        adx_val = (adx_val * (window - 1) + dx[i]) / window;
        out[i] = adx_val;
    }
    return out;
}

}  // namespace detail

// Mahalanobis distance of each date's cross-asset return vector against the
// trailing-lookback mean and covariance (current date excluded). Covariance
// diagonal is regularized by 1e-8; a still-singular solve reads 0.
inline std::vector<double> turbulence(const AlignedPanel& panel, int lookback) {
    const std::size_t T = panel.length();
    const std::size_t n = panel.num_assets();
    std::vector<double> out(T, 0.0);
    for (std::size_t t = lookback; t < T; ++t) {
        Eigen::MatrixXd hist(lookback, n);
        for (int j = 0; j < lookback; ++j) {
            for (std::size_t a = 0; a < n; ++a) {
                hist(j, a) = panel.asset_returns[a][t - lookback + j];
            }
        }
        Eigen::VectorXd mu = hist.colwise().mean();
        Eigen::MatrixXd centered = hist.rowwise() - mu.transpose();
        Eigen::MatrixXd cov = centered.transpose() * centered / double(lookback);
        cov.diagonal().array() += 1e-8;

        Eigen::VectorXd x(n);
        for (std::size_t a = 0; a < n; ++a) x(a) = panel.asset_returns[a][t];
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
        if (ldlt.info() != Eigen::Success) continue;
        Eigen::VectorXd d = x - mu;
        double m2 = d.dot(ldlt.solve(d));
        out[t] = m2 > 0.0 ? m2 : 0.0;
    }
    return out;
}

inline IndicatorSet extended_indicators(const AlignedPanel& panel,
                                        const IndicatorConfig& cfg = {}) {
    cfg.validate();
    const std::size_t T = panel.length();
    const int max_window =
        std::max({cfg.macd_slow, cfg.bollinger_window, cfg.rsi_window + 1, cfg.cci_window,
                  2 * cfg.dmi_window, cfg.sma_long, cfg.turbulence_lookback + 1});
    if (T < static_cast<std::size_t>(max_window)) {
        throw std::invalid_argument("panel shorter than the largest indicator window");
    }

    IndicatorSet set;
    set.length = T;
    std::vector<double> turb = turbulence(panel, cfg.turbulence_lookback);

    for (std::size_t a = 0; a < panel.num_assets(); ++a) {
        const auto& closes = panel.asset_closes[a];
        AssetIndicators ind;
        ind.volume = panel.asset_volumes[a];
        ind.macd = macd(closes, cfg);
        auto bands = bollinger(closes, cfg.bollinger_window, cfg.bollinger_k);
        ind.boll_ub = std::move(bands.first);
        ind.boll_lb = std::move(bands.second);
        ind.rsi = rsi(closes, cfg.rsi_window);
        ind.cci = detail::cci(panel.asset_highs[a], panel.asset_lows[a], closes,
                              cfg.cci_window);
        ind.adx = detail::adx(panel.asset_highs[a], panel.asset_lows[a], closes,
                              cfg.dmi_window);
        ind.sma30 = detail::rolling_sma(closes, cfg.sma_short);
        ind.sma60 = detail::rolling_sma(closes, cfg.sma_long);
        ind.turbulence = turb;
        set.per_asset.push_back(std::move(ind));
    }

    set.warmup.assign(T, false);
    for (std::size_t t = 0; t < T; ++t) {
        set.warmup[t] = t + 1 < static_cast<std::size_t>(max_window);
    }
    return set;
}

}  // namespace riskward
