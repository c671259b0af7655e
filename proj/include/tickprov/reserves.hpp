#pragma once

// Reserve-value curves and the expected reserve return c.
//
// A unit of capital provisioned to tick i at the open price is worth r_i(p)
// once the price reaches p. r_i depends on the price only, not on the path.
// Under a discretized next-period price mass m, c_i = sum_k m_k r_i(p_k).

#include "tickprov/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <vector>

namespace tickprov {

/// Constant-product position holdings for liquidity L on [lo, hi] at price p.
struct PositionHoldings {
    double asset = 0.0;
    double stable = 0.0;

    double value(double p) const { return p * asset + stable; }
};

inline PositionHoldings constant_product_holdings(const TickSpec& tick, double p,
                                                  double liquidity = 1.0) {
    const double clamped = std::clamp(p, tick.price_lo, tick.price_hi);
    const double root = std::sqrt(clamped);
    return {liquidity * (1.0 / root - 1.0 / std::sqrt(tick.price_hi)),
            liquidity * (root - std::sqrt(tick.price_lo))};
}

/// Stable value of a constant-product position with liquidity L at price p.
inline double constant_product_value(const TickSpec& tick, double p, double liquidity = 1.0) {
    return constant_product_holdings(tick, p, liquidity).value(p);
}

/// Value of a position per unit of liquidity, as a function of price.
/// Pluggable per tick so ticks from different swap invariants can be mixed.
using PositionValueModel = std::function<double(const TickSpec&, double price)>;

inline PositionValueModel constant_product_model() {
    return [](const TickSpec& t, double p) { return constant_product_value(t, p); };
}

/// r(p) = V(p) / V(open_price) for one tick; r(open_price) == 1.
class ReserveCurve {
public:
    ReserveCurve(TickSpec tick, double open_price,
                 PositionValueModel model = constant_product_model())
        : tick_(std::move(tick)), open_price_(open_price), model_(std::move(model)) {
        if (!(open_price_ > 0.0 && std::isfinite(open_price_))) {
            throw Error(ErrorKind::InvalidInput, "open price must be positive", "open_price");
        }
        validate_tick(tick_);
        open_value_ = model_(tick_, open_price_);
        if (!(open_value_ > 0.0)) {
            throw Error(ErrorKind::InvalidInput,
                        "position has zero value at the open price for tick '" + tick_.id + "'");
        }
    }

    double value_at(double p) const {
        if (p == open_price_) return 1.0;
        return model_(tick_, p) / open_value_;
    }

    /// Fraction of the opening value held as the risky asset.
    double asset_fraction() const {
        const auto h = constant_product_holdings(tick_, open_price_);
        return open_price_ * h.asset / h.value(open_price_);
    }

    const TickSpec& tick() const { return tick_; }
    double open_price() const { return open_price_; }

private:
    TickSpec tick_;
    double open_price_;
    PositionValueModel model_;
    double open_value_ = 0.0;
};

inline ReserveCurve reserve_value_curve(const TickSpec& tick, double open_price) {
    return ReserveCurve(tick, open_price);
}

inline std::vector<ReserveCurve> reserve_value_curves(const std::vector<TickSpec>& ticks,
                                                      double open_price) {
    std::vector<ReserveCurve> out;
    out.reserve(ticks.size());
    for (const auto& t : ticks) out.emplace_back(t, open_price);
    return out;
}

/// Discretized next-period price distribution.
struct PriceMass {
    std::vector<double> grid; // ascending log prices
    std::vector<double> mass; // sums to 1
    double horizon_days = 0.0;
    double sigma_annual = 0.0;
    double p0 = 0.0;
    double drift = 0.0;

    double price_at(std::size_t k) const { return std::exp(grid[k]); }

    double mean_price() const {
        double m = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) m += mass[k] * price_at(k);
        return m;
    }

    double price_stddev() const {
        const double m = mean_price();
        double v = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double dev = price_at(k) - m;
            v += mass[k] * dev * dev;
        }
        return std::sqrt(v);
    }

    /// Smallest grid price whose cumulative mass reaches 1/2.
    double median_price() const {
        double cumulative = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            cumulative += mass[k];
            if (cumulative >= 0.5) return price_at(k);
        }
        return price_at(grid.size() - 1);
    }
};

struct GbmGridOptions {
    std::size_t points = 4097;
    double span_sigmas = 8.0;
    double drift = 0.0;
    /// Smallest half-width of the grid in log price, so that tiny
    /// volatilities still resolve onto a grid cell.
    double min_half_width = 1e-4;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Log P_T ~ Normal(log p0 + (mu - sigma^2 / 2) tau, sigma^2 tau) with
/// tau = horizon_days / 365, binned on an evenly spaced log-price grid
/// centered on the mean. The edge cells absorb the tails.
inline PriceMass price_mass_gbm(double p0, double sigma_annual, double horizon_days,
                                const GbmGridOptions& opts = {}) {
    if (!(p0 > 0.0 && std::isfinite(p0)))
        throw Error(ErrorKind::InvalidInput, "p0 must be positive", "p0");
    if (!(sigma_annual > 0.0 && std::isfinite(sigma_annual)))
        throw Error(ErrorKind::InvalidInput, "sigma must be positive", "sigma");
    if (!(horizon_days > 0.0 && std::isfinite(horizon_days)))
        throw Error(ErrorKind::InvalidInput, "horizon must be positive", "horizon_days");
    if (opts.points < 3 || opts.points % 2 == 0)
        throw Error(ErrorKind::InvalidInput, "grid size must be odd and at least 3", "points");
    if (!(opts.span_sigmas > 0.0))
        throw Error(ErrorKind::InvalidInput, "grid span must be positive", "span");

    const double tau = horizon_days / 365.0;
    const double sd = sigma_annual * std::sqrt(tau);
    const double mean = std::log(p0) + (opts.drift - 0.5 * sigma_annual * sigma_annual) * tau;
    const double half = std::max(opts.span_sigmas * sd, opts.min_half_width);
    const std::size_t m = opts.points;
    const double step = 2.0 * half / static_cast<double>(m - 1);

    PriceMass out;
    out.horizon_days = horizon_days;
    out.sigma_annual = sigma_annual;
    out.p0 = p0;
    out.drift = opts.drift;
    out.grid.resize(m);
    out.mass.resize(m);
    const std::size_t centre = m / 2;
    for (std::size_t k = 0; k < m; ++k) {
        out.grid[k] = mean + (static_cast<double>(k) - static_cast<double>(centre)) * step;
    }
    // Cell k spans [grid_k - step/2, grid_k + step/2]; the upper half uses
    // survival functions so the tail cells keep their precision.
    for (std::size_t k = 0; k < m; ++k) {
        const double lo = (static_cast<double>(k) - static_cast<double>(centre) - 0.5) * step / sd;
        const double hi = lo + step / sd;
        double w;
        if (k == 0) {
            w = normal_cdf(hi);
        } else if (k == m - 1) {
            w = normal_cdf(-lo);
        } else if (k < centre) {
            w = normal_cdf(hi) - normal_cdf(lo);
        } else if (k > centre) {
            w = normal_cdf(-lo) - normal_cdf(-hi);
        } else {
            w = 1.0 - normal_cdf(lo) - normal_cdf(-hi);
        }
        out.mass[k] = std::max(0.0, w);
    }
    double total = 0.0;
    for (double w : out.mass) total += w;
    for (double& w : out.mass) w /= total;
    return out;
}

/// c_i = sum_k mass_k r_i(price_k), in candidate-set order.
inline std::vector<double> expected_return_c(const PriceMass& mass,
                                             const std::vector<ReserveCurve>& curves) {
    std::vector<double> prices(mass.grid.size());
    for (std::size_t k = 0; k < prices.size(); ++k) prices[k] = mass.price_at(k);
    std::vector<double> c;
    c.reserve(curves.size());
    for (const auto& curve : curves) {
        if (std::abs(curve.open_price() - mass.p0) > 1e-12 * mass.p0) {
            throw Error(ErrorKind::InvalidInput,
                        "reserve curve for tick '" + curve.tick().id +
                            "' opens at a different price than the price mass");
        }
        double ci = 0.0;
        for (std::size_t k = 0; k < prices.size(); ++k) ci += mass.mass[k] * curve.value_at(prices[k]);
        c.push_back(ci);
    }
    return c;
}

} // namespace tickprov
