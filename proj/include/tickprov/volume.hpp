#pragma once

// Fee forecasts from swap history.
//
// Swaps are attributed to the ticks their price path crosses, a Gaussian is
// fit to the price location of the attributed volume, and the forecast is
// re-centered at the current price and scaled by each tick's fee tier.

#include "tickprov/core.hpp"
#include "tickprov/reserves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

namespace tickprov {

struct SwapEvent {
    double timestamp = 0.0; // seconds
    std::string pool_id;
    double price_before = 0.0;
    double price_after = 0.0;
    double volume_stable = 0.0;
    std::string block; // opaque label, may be empty

    friend bool operator==(const SwapEvent&, const SwapEvent&) = default;
};

inline void validate_swap(const SwapEvent& e) {
    if (!(e.price_before > 0.0 && e.price_after > 0.0 && std::isfinite(e.price_before) &&
          std::isfinite(e.price_after))) {
        throw Error(ErrorKind::InvalidInput, "swap prices must be positive", "price_before");
    }
    if (!(e.volume_stable > 0.0 && std::isfinite(e.volume_stable))) {
        throw Error(ErrorKind::InvalidInput, "swap volume must be positive", "volume_stable");
    }
}

struct VolumeProfile {
    std::vector<double> per_tick_volume;
    double window_days = 0.0;
    double total = 0.0;
};

namespace detail {

inline std::string range_text(double lo, double hi) {
    std::ostringstream os;
    os.precision(17);
    os << "[" << lo << ", " << hi << "]";
    return os.str();
}

/// Rescales `weights` to sum to `target` and settles the rounding remainder
/// on the last nonzero entry, so that a left-to-right sum is exact.
inline void normalize_exact(std::vector<double>& weights, double target) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w = w * (target / total);
    std::size_t last = weights.size();
    while (last > 0 && !(weights[last - 1] > 0.0)) --last;
    if (last == 0) return;
    double& w = weights[last - 1];
    // Largest earlier entry; nudged when target sits on a rounding tie.
    const auto head_end = weights.begin() + static_cast<std::ptrdiff_t>(last - 1);
    const auto nudge = std::max_element(weights.begin(), head_end);
    for (int attempt = 0; attempt < 16; ++attempt) {
        const double prefix = std::accumulate(weights.begin(), head_end, 0.0);
        w = std::max(0.0, target - prefix);
        for (int step = 0; step < 64; ++step) {
            const double s = prefix + w;
            if (s == target) return;
            w = std::nextafter(w, s < target ? std::numeric_limits<double>::infinity() : 0.0);
        }
        if (nudge == head_end) return;
        *nudge = std::nextafter(*nudge, std::numeric_limits<double>::infinity());
    }
}

} // namespace detail

/// Splits one swap's stable volume across the ticks on its price path.
///
/// Only ticks from the event's pool take part. Inside a tick with liquidity
/// L the stable amount swapped between prices s and e is L |sqrt(e) -
/// sqrt(s)|; the per-tick amounts are normalized to the reported volume.
/// The output is aligned with `ticks`.
inline std::vector<double> attribute_swap(const SwapEvent& event, const std::vector<TickSpec>& ticks,
                                          const std::vector<double>& liquidity_by_tick) {
    validate_swap(event);
    if (liquidity_by_tick.size() != ticks.size()) {
        throw Error(ErrorKind::DimensionMismatch, "liquidity must align with ticks");
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < ticks.size(); ++i)
        if (ticks[i].pool_id == event.pool_id) order.push_back(i);
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return ticks[l].price_lo < ticks[r].price_lo; });

    std::vector<double> out(ticks.size(), 0.0);
    const double lo = std::min(event.price_before, event.price_after);
    const double hi = std::max(event.price_before, event.price_after);

    if (lo == hi) {
        for (std::size_t idx = 0; idx < order.size(); ++idx) {
            const auto& t = ticks[order[idx]];
            const bool top_edge = idx + 1 == order.size() && lo == t.price_hi;
            if (t.contains(lo) || top_edge) {
                out[order[idx]] = event.volume_stable;
                return out;
            }
        }
        throw Error(ErrorKind::InsufficientData,
                    "swap price " + detail::range_text(lo, hi) + " is not covered by pool '" +
                        event.pool_id + "'");
    }

    double cursor = lo;
    std::vector<double> weights(ticks.size(), 0.0);
    for (std::size_t i : order) {
        const auto& t = ticks[i];
        const double enter = std::max(lo, t.price_lo);
        const double exit = std::min(hi, t.price_hi);
        if (!(exit > enter)) continue;
        if (enter > cursor) {
            throw Error(ErrorKind::InsufficientData,
                        "swap path sub-range " + detail::range_text(cursor, enter) +
                            " is not covered by pool '" + event.pool_id + "'");
        }
        if (!(liquidity_by_tick[i] > 0.0)) {
            throw Error(ErrorKind::InsufficientData,
                        "swap crosses tick '" + t.id + "' which has no liquidity");
        }
        weights[i] = liquidity_by_tick[i] * (std::sqrt(exit) - std::sqrt(enter));
        cursor = std::max(cursor, exit);
    }
    if (cursor < hi) {
        throw Error(ErrorKind::InsufficientData,
                    "swap path sub-range " + detail::range_text(cursor, hi) +
                        " is not covered by pool '" + event.pool_id + "'");
    }
    detail::normalize_exact(weights, event.volume_stable);
    return weights;
}

/// Per-tick volume over a window of events.
inline VolumeProfile volume_profile(const std::vector<SwapEvent>& events,
                                   const std::vector<TickSpec>& ticks,
                                   const std::vector<double>& liquidity, double window_days = 0.0) {
    VolumeProfile out;
    out.per_tick_volume.assign(ticks.size(), 0.0);
    out.window_days = window_days;
    for (const auto& e : events) {
        const auto split = attribute_swap(e, ticks, liquidity);
        for (std::size_t i = 0; i < split.size(); ++i) out.per_tick_volume[i] += split[i];
        out.total += e.volume_stable;
    }
    return out;
}

struct VolumeFit {
    double sigma_volume = 0.0;     // price units
    double total_per_period = 0.0; // stable units over the window
    double center = 0.0;           // volume-weighted mean price
    VolumeProfile profile;
};

/// Volume-weighted mean and standard deviation of tick mid-prices.
inline std::pair<double, double> weighted_price_moments(const std::vector<TickSpec>& ticks,
                                                        const std::vector<double>& weights) {
    double total = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        total += weights[i];
        mean += weights[i] * ticks[i].mid();
    }
    if (!(total > 0.0)) return {0.0, 0.0};
    mean /= total;
    double var = 0.0;
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        const double dev = ticks[i].mid() - mean;
        var += weights[i] * dev * dev;
    }
    return {mean, std::sqrt(var / total)};
}

/// Attributes every swap in the window and fits the price spread of volume.
inline VolumeFit fit_volume_shape(const std::vector<SwapEvent>& events,
                                  const std::vector<TickSpec>& ticks,
                                  const std::vector<double>& liquidity, double window_days = 0.0) {
    if (events.empty()) {
        throw Error(ErrorKind::InsufficientData, "no swap events in the estimation window",
                    "events");
    }
    VolumeFit fit;
    fit.profile = volume_profile(events, ticks, liquidity, window_days);
    fit.total_per_period = fit.profile.total;
    const auto [mean, sd] = weighted_price_moments(ticks, fit.profile.per_tick_volume);
    fit.center = mean;
    fit.sigma_volume = sd;
    return fit;
}

struct FeeForecastOptions {
    /// Rescale the Gaussian mass to sum to 1 over the candidate set. When
    /// off, mass falling outside the candidate ranges is dropped.
    bool renormalize = true;
};

/// a_i = fee_rate_i * total_volume * mass_i, where mass_i is the mass of
/// N(p0, sigma_volume^2) on tick i's range.
inline std::vector<double> predict_fees_a(double p0, double sigma_volume, double total_volume,
                                          const std::vector<TickSpec>& ticks,
                                          const FeeForecastOptions& opts = {}) {
    if (!(sigma_volume >= 0.0 && std::isfinite(sigma_volume)))
        throw Error(ErrorKind::InvalidInput, "sigma_volume must be non-negative", "sigma_volume");
    if (!(total_volume >= 0.0 && std::isfinite(total_volume)))
        throw Error(ErrorKind::InvalidInput, "total_volume must be non-negative", "total_volume");
    if (!(p0 > 0.0)) throw Error(ErrorKind::InvalidInput, "p0 must be positive", "p0");

    std::vector<double> mass(ticks.size(), 0.0);
    if (sigma_volume == 0.0) {
        for (std::size_t i = 0; i < ticks.size(); ++i)
            if (ticks[i].contains(p0)) mass[i] = 1.0;
    } else {
        for (std::size_t i = 0; i < ticks.size(); ++i) {
            const double zl = (ticks[i].price_lo - p0) / sigma_volume;
            const double zh = (ticks[i].price_hi - p0) / sigma_volume;
            // Subtract on the side where the CDF values are small.
            mass[i] = zl >= 0.0 ? normal_cdf(-zl) - normal_cdf(-zh) : normal_cdf(zh) - normal_cdf(zl);
        }
    }
    const double total_mass = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (!(total_mass > 0.0)) {
        throw Error(ErrorKind::InvalidInput,
                    "forecast volume places no mass on the candidate ticks", "sigma_volume");
    }
    std::vector<double> a(ticks.size());
    const double norm = opts.renormalize ? total_mass : 1.0;
    for (std::size_t i = 0; i < ticks.size(); ++i)
        a[i] = ticks[i].fee_rate * total_volume * (mass[i] / norm);
    return a;
}

struct ConsistencyReport {
    double volume_center = 0.0;
    double volume_spread = 0.0;
    double price_center = 0.0;
    double price_spread = 0.0;
    double tick_width = 0.0; // mean candidate tick width
    bool center_offset_flag = false;
    bool spread_ratio_flag = false;
    std::vector<std::string> warnings;

    bool ok() const { return !center_offset_flag && !spread_ratio_flag; }
};

/// Compares the location and spread implied by the fee forecast (deflated
/// by fee tier) with those of the price mass behind c. Warnings only.
inline ConsistencyReport consistency_check(const std::vector<double>& a,
                                           const std::vector<TickSpec>& ticks,
                                           const PriceMass& mass) {
    ConsistencyReport r;
    if (ticks.empty() || a.size() != ticks.size()) {
        r.warnings.push_back("fee forecast does not align with the candidate ticks");
        return r;
    }
    std::vector<double> volume(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) volume[i] = a[i] / ticks[i].fee_rate;
    std::tie(r.volume_center, r.volume_spread) = weighted_price_moments(ticks, volume);
    r.price_center = mass.mean_price();
    r.price_spread = mass.price_stddev();
    for (const auto& t : ticks) r.tick_width += t.width();
    r.tick_width /= static_cast<double>(ticks.size());

    std::ostringstream os;
    os.precision(6);
    if (std::abs(r.volume_center - r.price_center) > r.tick_width) {
        r.center_offset_flag = true;
        os << "volume center " << r.volume_center << " is more than one tick width ("
           << r.tick_width << ") from the price center " << r.price_center;
        r.warnings.push_back(os.str());
        os.str("");
    }
    const double ratio = r.price_spread > 0.0 ? r.volume_spread / r.price_spread : 0.0;
    if (!(ratio >= 1.0 / 3.0 && ratio <= 3.0)) {
        r.spread_ratio_flag = true;
        os << "volume spread " << r.volume_spread << " vs price spread " << r.price_spread
           << " (ratio " << ratio << ") is outside [1/3, 3]";
        r.warnings.push_back(os.str());
    }
    return r;
}

} // namespace tickprov
