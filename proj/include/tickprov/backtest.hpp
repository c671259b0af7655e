#pragma once

// Rolling train/test evaluation of provisioning strategies.
//
// Each window fits on [start - S, start), opens positions at the price at
// `start`, replays the swaps of [start, start + T) for fees, and closes at
// the price at start + T. Provisions do not move the replayed prices, and
// liquidity is held at the opening snapshot for the whole window.

#include "tickprov/config.hpp"
#include "tickprov/core.hpp"
#include "tickprov/estimate.hpp"
#include "tickprov/max_return.hpp"
#include "tickprov/reserves.hpp"
#include "tickprov/volume.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace tickprov {

inline constexpr double kSecondsPerDay = 86400.0;

struct MarketData {
    std::vector<LiquiditySnapshot> snapshots; // ascending timestamps
    std::vector<SwapEvent> events;            // ascending timestamps
    double start = 0.0;
    double end = 0.0;
};

struct Window {
    double train_start = 0.0;
    double test_start = 0.0;
    double test_end = 0.0;
    std::string train_label;
    std::string test_label;
    double open_price = 0.0;
    double close_price = 0.0;
};

struct PeriodResult {
    std::string strategy;
    double fee_income = 0.0;
    double reserve_pnl = 0.0; // close value of reserves - d
    double hedge_pnl = 0.0;
    double return_pct = 0.0;  // (fee_income + reserve_pnl + hedge_pnl) / d

    friend bool operator==(const PeriodResult&, const PeriodResult&) = default;
};

// ---------------------------------------------------------------------------
// Strategies

struct TickByTickPlan {
    Estimates estimates;
    Allocation allocation;   // over the candidate ticks
    std::vector<double> x;   // expanded to every snapshot tick
};

inline TickByTickPlan strategy_tick_by_tick(const std::vector<SwapEvent>& train_events,
                                            const LiquiditySnapshot& snapshot, double p0,
                                            const RunConfig& config) {
    TickByTickPlan plan;
    plan.estimates = estimate_conditions(train_events, snapshot, p0, config);
    MaxReturnOptions opts;
    opts.epsilon_b = config.epsilon_b;
    plan.allocation = solve_max_return(plan.estimates.conditions, opts);
    plan.x.assign(snapshot.ticks.size(), 0.0);
    for (std::size_t k = 0; k < plan.estimates.candidates.size(); ++k)
        plan.x[plan.estimates.candidates[k]] = plan.allocation.x[k];
    return plan;
}

/// Emulates one uniform range position on [p0 (1 - pct), p0 (1 + pct)]:
/// each tick is weighted by the fraction of its range inside the band.
/// With pct = 0 the capital goes to the tick(s) containing p0.
inline std::vector<double> strategy_uniform_range(double p0, double pct, double d,
                                                  const std::vector<TickSpec>& ticks) {
    std::vector<double> weight(ticks.size(), 0.0);
    const double lo = p0 * (1.0 - pct);
    const double hi = p0 * (1.0 + pct);
    double total = 0.0;
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        const auto& t = ticks[i];
        if (pct == 0.0) {
            weight[i] = t.contains(p0) ? 1.0 : 0.0;
        } else {
            const double overlap = std::min(hi, t.price_hi) - std::max(lo, t.price_lo);
            weight[i] = overlap > 0.0 ? overlap / t.width() : 0.0;
        }
        total += weight[i];
    }
    if (!(total > 0.0)) {
        throw Error(ErrorKind::InsufficientData, "no tick intersects the range band");
    }
    std::vector<double> x(ticks.size());
    for (std::size_t i = 0; i < ticks.size(); ++i) x[i] = d * weight[i] / total;
    return x;
}

struct HedgedAllocation {
    std::vector<double> x;
    double hedge_notional = 0.0; // short asset exposure, stable units at open
};

/// Adds a short hedge equal to the asset-side value of the opening reserves.
inline HedgedAllocation strategy_delta_neutral(const std::vector<double>& base,
                                               const std::vector<ReserveCurve>& curves) {
    if (base.size() != curves.size()) {
        throw Error(ErrorKind::DimensionMismatch, "allocation must align with reserve curves");
    }
    HedgedAllocation out{base, 0.0};
    for (std::size_t i = 0; i < base.size(); ++i)
        out.hedge_notional += base[i] * curves[i].asset_fraction();
    return out;
}

inline double hedge_pnl(double hedge_notional, double open_price, double close_price) {
    return hedge_notional * (1.0 - close_price / open_price);
}

// ---------------------------------------------------------------------------
// Accounting

/// Fees paid to all providers per tick over the test swaps.
inline std::vector<double> tick_fees(const LiquiditySnapshot& snapshot,
                                     const std::vector<SwapEvent>& test_events) {
    std::vector<double> fees(snapshot.ticks.size(), 0.0);
    for (const auto& e : test_events) {
        const auto split = attribute_swap(e, snapshot.ticks, snapshot.liquidity);
        for (std::size_t i = 0; i < split.size(); ++i) fees[i] += split[i] * snapshot.ticks[i].fee_rate;
    }
    return fees;
}

/// Accounts one window for allocation x (aligned with the snapshot ticks):
/// pro rata fees at share x / (x + b), reserves revalued at the close, and
/// the hedge if `hedge_notional` is non-zero.
inline PeriodResult run_period(const std::vector<double>& x, const LiquiditySnapshot& snapshot,
                               const std::vector<SwapEvent>& test_events, const Window& window,
                               double hedge_notional = 0.0, std::string strategy = {}) {
    if (x.size() != snapshot.ticks.size()) {
        throw Error(ErrorKind::DimensionMismatch, "allocation must align with snapshot ticks");
    }
    PeriodResult r;
    r.strategy = std::move(strategy);
    const auto fees = tick_fees(snapshot, test_events);
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        d += x[i];
        if (x[i] <= 0.0) continue;
        r.fee_income += x[i] / (x[i] + snapshot.liquidity[i]) * fees[i];
        const ReserveCurve curve(snapshot.ticks[i], window.open_price);
        r.reserve_pnl += x[i] * (curve.value_at(window.close_price) - 1.0);
    }
    r.hedge_pnl = hedge_pnl(hedge_notional, window.open_price, window.close_price);
    r.return_pct = d > 0.0 ? (r.fee_income + r.reserve_pnl + r.hedge_pnl) / d : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Rolling windows

/// Last traded price strictly before t, else the first pre-swap price.
inline double price_at(const std::vector<SwapEvent>& events, double t) {
    if (events.empty()) throw Error(ErrorKind::InsufficientData, "no swaps to read prices from");
    const auto it = std::lower_bound(events.begin(), events.end(), t,
                                     [](const SwapEvent& e, double ts) { return e.timestamp < ts; });
    if (it == events.begin()) return events.front().price_before;
    return std::prev(it)->price_after;
}

inline std::vector<SwapEvent> events_between(const std::vector<SwapEvent>& events, double from,
                                             double to) {
    std::vector<SwapEvent> out;
    for (const auto& e : events)
        if (e.timestamp >= from && e.timestamp < to) out.push_back(e);
    return out;
}

/// Latest snapshot taken at or before t (the earliest if none is).
inline const LiquiditySnapshot& snapshot_at(const MarketData& data, double t) {
    if (data.snapshots.empty()) throw Error(ErrorKind::InsufficientData, "no liquidity snapshot");
    const LiquiditySnapshot* best = &data.snapshots.front();
    for (const auto& s : data.snapshots)
        if (s.timestamp <= t) best = &s;
    return *best;
}

inline std::string window_label(const std::vector<SwapEvent>& events, double from, double to) {
    for (const auto& e : events) {
        if (e.timestamp >= from && e.timestamp < to && !e.block.empty()) return e.block;
    }
    std::ostringstream os;
    os.precision(17);
    os << from;
    return os.str();
}

/// Windows at stride R covering [start, end]: floor((span - S - T) / R) + 1.
inline std::vector<Window> make_windows(const MarketData& data, double train_days,
                                        double horizon_days, double stride_days) {
    const double span_days = (data.end - data.start) / kSecondsPerDay;
    const double needed = train_days + horizon_days;
    if (!(span_days + 1e-9 >= needed)) {
        std::ostringstream os;
        os << "data spans " << span_days << " days but train + test needs " << needed;
        throw Error(ErrorKind::InsufficientData, os.str());
    }
    const auto count =
        static_cast<std::size_t>(std::floor((span_days - needed) / stride_days + 1e-9)) + 1;
    std::vector<Window> out;
    for (std::size_t k = 0; k < count; ++k) {
        Window w;
        w.train_start = data.start + static_cast<double>(k) * stride_days * kSecondsPerDay;
        w.test_start = w.train_start + train_days * kSecondsPerDay;
        w.test_end = w.test_start + horizon_days * kSecondsPerDay;
        w.train_label = window_label(data.events, w.train_start, w.test_start);
        w.test_label = window_label(data.events, w.test_start, w.test_end);
        w.open_price = price_at(data.events, w.test_start);
        w.close_price = price_at(data.events, w.test_end);
        out.push_back(std::move(w));
    }
    return out;
}

struct WindowReport {
    Window window;
    std::vector<PeriodResult> results; // in strategy order
    bool snapshot_updated = false;     // liquidity changed inside the test window
};

struct BacktestTable {
    std::vector<std::string> strategies;
    std::vector<WindowReport> windows;
    std::vector<double> mean;   // per strategy, arithmetic mean of return_pct
    std::vector<double> stddev; // per strategy, population standard deviation
    std::vector<std::string> notes;
};

inline WindowReport evaluate_window(const MarketData& data, const Window& w,
                                    const RunConfig& config) {
    WindowReport rep;
    rep.window = w;
    const LiquiditySnapshot& snap = snapshot_at(data, w.test_start);
    validate_snapshot(snap);
    for (const auto& s : data.snapshots)
        if (s.timestamp > w.test_start && s.timestamp < w.test_end) rep.snapshot_updated = true;

    const auto train = events_between(data.events, w.train_start, w.test_start);
    const auto test = events_between(data.events, w.test_start, w.test_end);
    const double p0 = w.open_price;

    auto wants = [&](const std::string& name) {
        return std::find(config.strategies.begin(), config.strategies.end(), name) !=
               config.strategies.end();
    };
    std::vector<double> tbt;
    if (wants("tick_by_tick") || (wants("delta_neutral") && config.hedge_base == "tick_by_tick")) {
        tbt = strategy_tick_by_tick(train, snap, p0, config).x;
    }
    std::vector<double> range;
    if (wants("range") || (wants("delta_neutral") && config.hedge_base == "range")) {
        range = strategy_uniform_range(p0, config.range_pct, config.d, snap.ticks);
    }
    for (const auto& name : config.strategies) {
        if (name == "tick_by_tick") {
            rep.results.push_back(run_period(tbt, snap, test, w, 0.0, name));
        } else if (name == "range") {
            rep.results.push_back(run_period(range, snap, test, w, 0.0, name));
        } else if (name == "delta_neutral") {
            const auto& base = config.hedge_base == "range" ? range : tbt;
            const auto hedged = strategy_delta_neutral(base, reserve_value_curves(snap.ticks, p0));
            rep.results.push_back(run_period(hedged.x, snap, test, w, hedged.hedge_notional, name));
        }
    }
    return rep;
}

/// Fits and evaluates every strategy on every window; the table footer
/// holds the per-strategy mean and (population) standard deviation.
inline BacktestTable rolling_backtest(const MarketData& data, const RunConfig& config) {
    validate_config(config);
    const auto windows =
        make_windows(data, config.train_days, config.horizon_days, config.stride_days);

    BacktestTable table;
    table.strategies = config.strategies;
    if (config.parallel) {
        std::vector<std::future<WindowReport>> jobs;
        for (const auto& w : windows)
            jobs.push_back(std::async(std::launch::async, [&data, &config, w] {
                return evaluate_window(data, w, config);
            }));
        for (auto& job : jobs) table.windows.push_back(job.get());
    } else {
        for (const auto& w : windows) table.windows.push_back(evaluate_window(data, w, config));
    }

    const auto count = static_cast<double>(table.windows.size());
    for (std::size_t s = 0; s < table.strategies.size(); ++s) {
        double mean = 0.0;
        for (const auto& rep : table.windows) mean += rep.results[s].return_pct;
        mean /= count;
        double var = 0.0;
        for (const auto& rep : table.windows) {
            const double dev = rep.results[s].return_pct - mean;
            var += dev * dev;
        }
        table.mean.push_back(mean);
        table.stddev.push_back(std::sqrt(var / count));
    }
    for (const auto& rep : table.windows) {
        if (rep.snapshot_updated) {
            table.notes.push_back("liquidity snapshot changes inside test window starting at " +
                                  rep.window.test_label + " were ignored");
        }
    }
    return table;
}

} // namespace tickprov
