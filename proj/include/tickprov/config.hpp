#pragma once

#include "tickprov/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tickprov {

inline const std::vector<std::string>& all_strategies() {
    static const std::vector<std::string> names = {"tick_by_tick", "range", "delta_neutral"};
    return names;
}

/// Run parameters shared by the estimators, the solver and the backtester.
struct RunConfig {
    double d = 1e6;           // capital, stable units
    double horizon_days = 7;  // T: holding period
    double train_days = 7;    // S: estimation window
    double stride_days = 4;   // R: window stride
    double sigma = 0.8;       // annualized volatility
    double drift = 0.0;       // annualized log drift of the price model
    double range_pct = 0.10;  // half-width of the uniform range strategy
    double candidate_pct = 0; // candidate band around p0; 0 keeps every tick
    double epsilon_b = kDefaultEpsilonB;
    int quad_points = 4097;
    double quad_span = 8.0;
    std::uint64_t seed = 0;
    std::string hedge_base = "range"; // "range" or "tick_by_tick"
    std::vector<std::string> strategies = all_strategies();
    bool renormalize_volume = true;
    bool bracket_hints = true;
    bool parallel = true;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline void validate_config(const RunConfig& c) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw Error(ErrorKind::Schema, "config field '" + field + "' " + why, field);
    };
    if (!(c.d >= 0.0)) fail("d", "must be non-negative");
    if (!(c.horizon_days > 0.0)) fail("horizon_days", "must be positive");
    if (!(c.train_days > 0.0)) fail("train_days", "must be positive");
    if (!(c.stride_days > 0.0)) fail("stride_days", "must be positive");
    if (!(c.sigma > 0.0)) fail("sigma", "must be positive");
    if (!(c.range_pct > 0.0 && c.range_pct < 1.0)) fail("range_pct", "must lie in (0, 1)");
    if (!(c.candidate_pct >= 0.0 && c.candidate_pct < 1.0))
        fail("candidate_pct", "must lie in [0, 1)");
    if (!(c.epsilon_b >= 0.0)) fail("epsilon_b", "must be non-negative");
    if (c.quad_points < 3 || c.quad_points % 2 == 0) fail("quad_points", "must be odd and >= 3");
    if (!(c.quad_span > 0.0)) fail("quad_span", "must be positive");
    if (c.hedge_base != "range" && c.hedge_base != "tick_by_tick")
        fail("hedge_base", "must be 'range' or 'tick_by_tick'");
    if (c.strategies.empty()) fail("strategies", "must name at least one strategy");
    for (const auto& s : c.strategies) {
        bool known = false;
        for (const auto& k : all_strategies()) known = known || k == s;
        if (!known) fail("strategies", "has unknown strategy '" + s + "'");
    }
}

} // namespace tickprov
