#pragma once

// Market-condition estimation: fee forecast a from swap history, existing
// liquidity b from a snapshot, reserve return c from the price model.

#include "tickprov/config.hpp"
#include "tickprov/core.hpp"
#include "tickprov/reserves.hpp"
#include "tickprov/volume.hpp"

#include <algorithm>
#include <vector>

namespace tickprov {

/// Per-tick liquidity value (stable units, at the snapshot price) of every
/// tick in the pools under study.
struct LiquiditySnapshot {
    double timestamp = 0.0;
    std::vector<TickSpec> ticks;
    std::vector<double> liquidity;

    friend bool operator==(const LiquiditySnapshot&, const LiquiditySnapshot&) = default;
};

inline void validate_snapshot(const LiquiditySnapshot& s) {
    if (s.ticks.size() != s.liquidity.size()) {
        throw Error(ErrorKind::DimensionMismatch, "snapshot liquidity must align with ticks");
    }
    if (s.ticks.empty()) throw Error(ErrorKind::InsufficientData, "snapshot has no ticks", "ticks");
    for (const auto& t : s.ticks) validate_tick(t);
    check_pool_overlaps(s.ticks);
    detail::require_finite_nonneg(s.liquidity, "liquidity_value_stable");
}

/// Indices of snapshot ticks overlapping [p0 (1 - pct), p0 (1 + pct)];
/// pct = 0 selects every tick.
inline std::vector<std::size_t> candidate_ticks(const std::vector<TickSpec>& ticks, double p0,
                                                double pct) {
    std::vector<std::size_t> out;
    const double lo = p0 * (1.0 - pct);
    const double hi = p0 * (1.0 + pct);
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        if (pct <= 0.0 || (ticks[i].price_hi > lo && ticks[i].price_lo < hi) ||
            ticks[i].contains(p0)) {
            out.push_back(i);
        }
    }
    return out;
}

struct Estimates {
    std::vector<std::size_t> candidates; // indices into the snapshot ticks
    MarketConditions conditions;         // restricted to the candidates
    VolumeFit fit;
    double forecast_volume = 0.0;        // over the holding period
    PriceMass mass;
    ConsistencyReport consistency;
};

/// Fits volume over the training events, re-centers it at p0 for the fee
/// forecast, and prices reserve returns under the GBM model.
inline Estimates estimate_conditions(const std::vector<SwapEvent>& train_events,
                                     const LiquiditySnapshot& snapshot, double p0,
                                     const RunConfig& config) {
    validate_snapshot(snapshot);
    Estimates est;
    est.fit = fit_volume_shape(train_events, snapshot.ticks, snapshot.liquidity, config.train_days);
    est.forecast_volume = est.fit.total_per_period * (config.horizon_days / config.train_days);

    est.candidates = candidate_ticks(snapshot.ticks, p0, config.candidate_pct);
    if (est.candidates.empty()) {
        throw Error(ErrorKind::InsufficientData, "no candidate ticks around the current price");
    }
    auto& mc = est.conditions;
    for (std::size_t i : est.candidates) {
        mc.ticks.push_back(snapshot.ticks[i]);
        mc.b.push_back(snapshot.liquidity[i]);
    }
    mc.current_price = p0;
    mc.d = config.d;
    mc.a = predict_fees_a(p0, est.fit.sigma_volume, est.forecast_volume, mc.ticks,
                          {.renormalize = config.renormalize_volume});

    GbmGridOptions grid;
    grid.points = static_cast<std::size_t>(config.quad_points);
    grid.span_sigmas = config.quad_span;
    grid.drift = config.drift;
    est.mass = price_mass_gbm(p0, config.sigma, config.horizon_days, grid);
    mc.c = expected_return_c(est.mass, reserve_value_curves(mc.ticks, p0));
    est.consistency = consistency_check(mc.a, mc.ticks, est.mass);
    return est;
}

} // namespace tickprov
