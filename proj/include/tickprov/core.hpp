#pragma once

// Domain types shared by the solvers, estimators and the backtester.
//
// Every monetary quantity is denominated in stable units. On-chain liquidity
// must be converted to value at the current price before it enters `b`, so
// that the pro rata share x / (x + b) compares like with like.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tickprov {

enum class ErrorKind {
    InvalidInput,        // malformed or out-of-domain values
    DimensionMismatch,   // vectors of inconsistent length
    DegenerateObjective, // objective constant on the feasible set
    NonConvergence,      // iterative method ran out of budget
    InsufficientData,    // empty history, short data span, uncovered path
    Schema,              // file / field / usage problems
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::DegenerateObjective: return "degenerate_objective";
    case ErrorKind::NonConvergence: return "non_convergence";
    case ErrorKind::InsufficientData: return "insufficient_data";
    case ErrorKind::Schema: return "schema";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string field = {})
        : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// Offending field or file location, when one is known.
    const std::string& field() const noexcept { return field_; }

private:
    ErrorKind kind_;
    std::string field_;
};

/// Canonical fee tiers (1, 5, 30 and 100 basis points).
inline constexpr double kFeeTiers[] = {0.0001, 0.0005, 0.0030, 0.0100};
inline constexpr double kMaxFeeRate = 0.01;

/// One candidate price range.
struct TickSpec {
    std::string id;
    double price_lo = 0.0;
    double price_hi = 0.0;
    double fee_rate = 0.0005;
    std::string pool_id;

    double width() const { return price_hi - price_lo; }
    double mid() const { return 0.5 * (price_lo + price_hi); }
    /// Half-open containment [price_lo, price_hi).
    bool contains(double p) const { return p >= price_lo && p < price_hi; }

    friend bool operator==(const TickSpec&, const TickSpec&) = default;
};

/// Market conditions (a, b, c) and capital d for one solve.
///
/// `ticks` may be empty for bare solver use; otherwise it has the same
/// length as the vectors. `c` may be empty for the maximum-revenue problem.
struct MarketConditions {
    std::vector<TickSpec> ticks;
    std::vector<double> a; // forecast fee revenue per tick
    std::vector<double> b; // existing liquidity value per tick
    std::vector<double> c; // expected per-unit reserve return per tick
    double d = 0.0;        // total capital
    double current_price = 1.0;

    std::size_t size() const { return a.size(); }

    friend bool operator==(const MarketConditions&, const MarketConditions&) = default;
};

enum class SolveStatus { Optimal, Suboptimal };

/// Solver output.
///
/// `dual` is the water level u for the revenue problem and the multiplier
/// nu for the return problem.
struct Allocation {
    std::vector<double> x;
    double dual = 0.0;
    double objective = 0.0;
    double kkt_residual = 0.0;
    SolveStatus status = SolveStatus::Optimal;
    int iterations = 0;

    double total() const { return std::accumulate(x.begin(), x.end(), 0.0); }

    friend bool operator==(const Allocation&, const Allocation&) = default;
};

inline constexpr double kDefaultEpsilonB = 1e-12;

namespace detail {

inline void require_finite_nonneg(const std::vector<double>& v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] < 0.0) {
            throw Error(ErrorKind::InvalidInput,
                        std::string(name) + "[" + std::to_string(i) +
                            "] must be finite and non-negative",
                        name);
        }
    }
}

} // namespace detail

inline void validate_tick(const TickSpec& t) {
    if (!(std::isfinite(t.price_lo) && std::isfinite(t.price_hi) && t.price_lo > 0.0 &&
          t.price_hi > t.price_lo)) {
        throw Error(ErrorKind::InvalidInput,
                    "tick '" + t.id + "' needs 0 < price_lo < price_hi", "ticks");
    }
    if (!(t.fee_rate > 0.0 && t.fee_rate <= kMaxFeeRate)) {
        throw Error(ErrorKind::InvalidInput,
                    "tick '" + t.id + "' fee_rate must lie in (0, 0.01]", "ticks");
    }
}

/// Rejects overlapping ranges among ticks that share a pool.
inline void check_pool_overlaps(const std::vector<TickSpec>& ticks) {
    std::map<std::string, std::vector<std::pair<double, double>>> by_pool;
    for (const auto& t : ticks) by_pool[t.pool_id].emplace_back(t.price_lo, t.price_hi);
    for (auto& [pool, ranges] : by_pool) {
        std::sort(ranges.begin(), ranges.end());
        for (std::size_t i = 1; i < ranges.size(); ++i) {
            if (ranges[i].first < ranges[i - 1].second) {
                throw Error(ErrorKind::InvalidInput,
                            "overlapping tick ranges in pool '" + pool + "'", "ticks");
            }
        }
    }
}

/// Validates market conditions and clamps b_i up to epsilon_b * max(d, 1).
/// Tick order is preserved. Idempotent.
inline MarketConditions validate_conditions(MarketConditions raw,
                                            double epsilon_b = kDefaultEpsilonB) {
    const std::size_t n = raw.a.size();
    if (raw.b.size() != n || (!raw.c.empty() && raw.c.size() != n) ||
        (!raw.ticks.empty() && raw.ticks.size() != n)) {
        throw Error(ErrorKind::DimensionMismatch,
                    "a, b, c and ticks must have equal length (a has " + std::to_string(n) +
                        ", b has " + std::to_string(raw.b.size()) + ")");
    }
    detail::require_finite_nonneg(raw.a, "a");
    detail::require_finite_nonneg(raw.b, "b");
    detail::require_finite_nonneg(raw.c, "c");
    if (!std::isfinite(raw.d) || raw.d < 0.0) {
        throw Error(ErrorKind::InvalidInput, "d must be finite and non-negative", "d");
    }
    if (!(std::isfinite(raw.current_price) && raw.current_price > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "current_price must be positive", "current_price");
    }
    if (!(epsilon_b >= 0.0 && std::isfinite(epsilon_b))) {
        throw Error(ErrorKind::InvalidInput, "epsilon_b must be finite and non-negative",
                    "epsilon_b");
    }
    for (const auto& t : raw.ticks) validate_tick(t);
    check_pool_overlaps(raw.ticks);

    const double floor_b = epsilon_b * std::max(raw.d, 1.0);
    for (double& bi : raw.b) bi = std::max(bi, floor_b);
    return raw;
}

/// Price range of a geometric 1.0001-spaced tick starting at `index`.
inline std::pair<double, double> tick_range_from_index(long long index, int spacing) {
    if (spacing <= 0) throw Error(ErrorKind::InvalidInput, "tick spacing must be positive");
    return {std::pow(1.0001, static_cast<double>(index)),
            std::pow(1.0001, static_cast<double>(index + spacing))};
}

/// Objective of the maximum-revenue problem: sum a_i x_i / (x_i + b_i).
inline double objective_revenue(const std::vector<double>& a, const std::vector<double>& b,
                                const std::vector<double>& x) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double denom = x[i] + b[i];
        if (denom > 0.0) total += a[i] * x[i] / denom;
    }
    return total;
}

/// Indices with x_i > 0.
inline std::vector<std::size_t> support(const std::vector<double>& x) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0) out.push_back(i);
    return out;
}

} // namespace tickprov
