#pragma once

// Maximum-return provisioning.
//
//   maximize   sum_i (a_i x_i / (x_i + b_i) + c_i x_i)
//   subject to x >= 0, sum_i x_i = d
//
// Solved through its dual. For a multiplier nu each tick's stationarity
// condition has the closed form
//
//   x_i(nu) = max(0, sqrt(a_i b_i / (nu - c_i)) - b_i),   nu > c_i,
//
// so the total demand sum_i x_i(nu) is continuous and decreasing in nu and
// the optimal multiplier is the root of sum_i x_i(nu) = d.

#include "tickprov/core.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tickprov {

/// sum_i (a_i x_i / (x_i + b_i) + c_i x_i)
inline double objective_return(const std::vector<double>& a, const std::vector<double>& b,
                               const std::vector<double>& c, const std::vector<double>& x) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double denom = x[i] + b[i];
        if (denom > 0.0) total += a[i] * x[i] / denom;
        total += c[i] * x[i];
    }
    return total;
}

/// Minimization form sum_i (a_i b_i / (x_i + b_i) - c_i x_i - a_i), the
/// negation of objective_return.
inline double objective_return_standard_form(const std::vector<double>& a,
                                             const std::vector<double>& b,
                                             const std::vector<double>& c,
                                             const std::vector<double>& x) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double denom = x[i] + b[i];
        total += (denom > 0.0 ? a[i] * b[i] / denom : a[i]) - c[i] * x[i] - a[i];
    }
    return total;
}

/// Marginal return a_i b_i / (x_i + b_i)^2 + c_i.
inline double marginal_return(double a, double b, double c, double x) {
    const double denom = x + b;
    return (denom > 0.0 ? a * b / (denom * denom) : 0.0) + c;
}

/// KKT residual of a candidate allocation for the maximum-return problem.
///
/// nu* is the largest marginal return over active ticks. The residual is the
/// largest of: an inactive tick's marginal above nu*, the spread of marginals
/// across the active set, and the feasibility gap relative to max(d, 1).
/// Marginal terms are relative to max(1, |nu*|). Throws if x is infeasible
/// beyond tol.
inline double verify_kkt_return(const std::vector<double>& a, const std::vector<double>& b,
                                const std::vector<double>& c, double d,
                                const std::vector<double>& x, double tol) {
    const std::size_t n = x.size();
    if (a.size() != n || b.size() != n || c.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "a, b, c and x must have equal length");
    }
    const double scale = std::max(d, 1.0);
    double sum = 0.0;
    double negative = 0.0;
    for (double xi : x) {
        sum += xi;
        negative = std::max(negative, -xi);
    }
    const double feas = std::max(std::abs(sum - d), negative) / scale;
    if (!(feas <= tol)) {
        throw Error(ErrorKind::InvalidInput, "allocation is infeasible (gap " +
                                                 std::to_string(feas * scale) + ")");
    }

    double nu_star = -std::numeric_limits<double>::infinity();
    double active_min = std::numeric_limits<double>::infinity();
    bool any_active = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) {
            const double g = marginal_return(a[i], b[i], c[i], x[i]);
            nu_star = std::max(nu_star, g);
            active_min = std::min(active_min, g);
            any_active = true;
        }
    }
    if (!any_active) return feas;

    const double unit = std::max(1.0, std::abs(nu_star));
    double residual = std::max(feas, (nu_star - active_min) / unit);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) continue;
        const double g = marginal_return(a[i], b[i], c[i], 0.0);
        residual = std::max(residual, std::max(0.0, g - nu_star) / unit);
    }
    return residual;
}

/// Dual bracket state reported on non-convergence.
struct DualBracket {
    double nu_lo = 0.0;
    double nu_hi = 0.0;
    int iterations = 0;
    double demand_gap = 0.0;
};

struct MaxReturnOptions {
    double epsilon_b = kDefaultEpsilonB;
    int max_iterations = 200;
    /// Demand gap tolerance, relative to max(d, 1).
    double tolerance = 1e-10;
    /// Upper bracket hint for nu, e.g. the multiplier at a smaller capital.
    std::optional<double> nu_hint;
};

namespace detail {

struct ScaledReturnProblem {
    std::vector<double> a, b, c;
    double d = 0.0;
    std::vector<std::size_t> curved; // ticks with a_i > 0

    double tick_demand(std::size_t i, double nu) const {
        const double slack = nu - c[i];
        if (slack <= 0.0) return std::numeric_limits<double>::infinity();
        return std::max(0.0, std::sqrt(a[i] * b[i] / slack) - b[i]);
    }

    double demand(double nu) const {
        double total = 0.0;
        for (std::size_t i : curved) total += tick_demand(i, nu);
        return total;
    }

    /// d/dnu of the total demand (negative on the active set).
    double demand_slope(double nu) const {
        double slope = 0.0;
        for (std::size_t i : curved) {
            const double slack = nu - c[i];
            const double xi = tick_demand(i, nu);
            if (xi > 0.0) slope -= 0.5 * (xi + b[i]) / slack;
        }
        return slope;
    }
};

/// Equal split of `amount` across the ticks in `ids` whose c is maximal.
inline void split_linear(const std::vector<double>& c, const std::vector<std::size_t>& ids,
                         double amount, std::vector<double>& x) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i : ids) best = std::max(best, c[i]);
    std::vector<std::size_t> winners;
    for (std::size_t i : ids)
        if (c[i] == best) winners.push_back(i);
    for (std::size_t i : winners) x[i] += amount / static_cast<double>(winners.size());
}

} // namespace detail

/// Solves the maximum-return problem by bisection on the dual multiplier,
/// followed by a Newton polish on the same demand curve. Returns nu as
/// `dual`. An empty `c` is read as all zeros.
inline Allocation solve_max_return(const MarketConditions& raw,
                                   const MaxReturnOptions& options = {}) {
    MarketConditions mc = validate_conditions(raw, options.epsilon_b);
    const std::size_t n = mc.size();
    if (mc.c.empty()) mc.c.assign(n, 0.0);

    Allocation out;
    out.x.assign(n, 0.0);

    // Rescale a, b, d towards unit magnitude; c and nu are scale free.
    double scale = mc.d;
    for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, mc.a[i], mc.b[i]});
    if (n == 0) {
        if (mc.d > 0.0) throw Error(ErrorKind::InvalidInput, "no ticks to allocate capital to");
        return out;
    }
    if (scale <= 0.0) scale = 1.0;

    detail::ScaledReturnProblem p;
    p.a.resize(n);
    p.b.resize(n);
    p.c = mc.c;
    p.d = mc.d / scale;
    std::vector<std::size_t> linear;
    for (std::size_t i = 0; i < n; ++i) {
        p.a[i] = mc.a[i] / scale;
        p.b[i] = mc.b[i] / scale;
        (mc.a[i] > 0.0 ? p.curved : linear).push_back(i);
    }

    const double neg_inf = -std::numeric_limits<double>::infinity();
    double c_linear = neg_inf;
    for (std::size_t i : linear) c_linear = std::max(c_linear, p.c[i]);
    double c_curved = neg_inf;
    double nu_hi = neg_inf;
    for (std::size_t i : p.curved) {
        c_curved = std::max(c_curved, p.c[i]);
        nu_hi = std::max(nu_hi, p.a[i] / p.b[i] + p.c[i]);
    }

    double nu_lo = c_curved;
    auto finish = [&](double nu, std::vector<double> xs) {
        for (double& xi : xs) xi = std::max(0.0, xi) * scale;
        double total = 0.0;
        for (double xi : xs) total += xi;
        if (total > 0.0 && total != mc.d) {
            for (double& xi : xs) xi *= mc.d / total;
        }
        out.x = std::move(xs);
        out.dual = nu;
        out.objective = objective_return(mc.a, mc.b, mc.c, out.x);
        out.kkt_residual = verify_kkt_return(mc.a, mc.b, mc.c, mc.d, out.x, 1e-9);
        return out;
    };

    std::vector<double> xs(n, 0.0);
    if (p.d == 0.0) return finish(std::max(nu_hi, c_linear), xs);
    if (p.curved.empty()) {
        // Linear objective: all capital to the best reserve return.
        detail::split_linear(p.c, linear, p.d, xs);
        return finish(c_linear, xs);
    }

    // A linear tick caps the multiplier from below: once nu falls to its c,
    // it absorbs the capital the curved ticks no longer want.
    if (c_linear >= nu_hi || (c_linear > nu_lo && p.demand(c_linear) <= p.d)) {
        const double nu = c_linear;
        double used = 0.0;
        for (std::size_t i : p.curved) {
            xs[i] = p.tick_demand(i, nu);
            used += xs[i];
        }
        detail::split_linear(p.c, linear, p.d - used, xs);
        return finish(nu, xs);
    }
    nu_lo = std::max(nu_lo, c_linear);

    if (options.nu_hint && *options.nu_hint > nu_lo && *options.nu_hint < nu_hi &&
        p.demand(*options.nu_hint) <= p.d) {
        nu_hi = *options.nu_hint;
    }

    const double tol = options.tolerance * std::max(mc.d, 1.0) / scale;
    double nu = nu_hi;
    double gap = p.demand(nu) - p.d;
    int iter = 0;
    for (; iter < options.max_iterations && std::abs(gap) > tol; ++iter) {
        const double mid = 0.5 * (nu_lo + nu_hi);
        if (!(mid > nu_lo && mid < nu_hi)) break;
        nu = mid;
        gap = p.demand(nu) - p.d;
        (gap > 0.0 ? nu_lo : nu_hi) = nu;
    }
    // Newton polish; the demand curve is convex and decreasing.
    for (int k = 0; k < 4 && gap != 0.0; ++k) {
        const double slope = p.demand_slope(nu);
        if (slope >= 0.0) break;
        const double step = nu - gap / slope;
        if (!(step > nu_lo && step <= nu_hi)) break;
        const double next_gap = p.demand(step) - p.d;
        if (std::abs(next_gap) >= std::abs(gap)) break;
        nu = step;
        gap = next_gap;
    }
    out.iterations = iter;
    // The root falls between adjacent doubles: blend the two end allocations,
    // or let the ticks sitting exactly at the lower end absorb the shortfall.
    if (std::abs(gap) > tol &&
        nu_hi - nu_lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                             std::max(1.0, std::abs(nu_lo))) {
        std::vector<double> lo(n, 0.0), hi(n, 0.0);
        double d_lo = 0.0, d_hi = 0.0;
        std::vector<std::size_t> unbounded;
        for (std::size_t i : p.curved) {
            hi[i] = p.tick_demand(i, nu_hi);
            lo[i] = p.tick_demand(i, nu_lo);
            d_hi += hi[i];
            if (std::isinf(lo[i])) unbounded.push_back(i);
            else d_lo += lo[i];
        }
        if (d_hi <= p.d && (!unbounded.empty() || d_lo >= p.d)) {
            if (!unbounded.empty()) {
                xs = hi;
                for (std::size_t i : unbounded) xs[i] = 0.0;
                double used = 0.0;
                for (double v : xs) used += v;
                detail::split_linear(p.c, unbounded, p.d - used, xs);
            } else {
                const double theta = d_lo > d_hi ? (p.d - d_hi) / (d_lo - d_hi) : 0.0;
                for (std::size_t i : p.curved) xs[i] = hi[i] + theta * (lo[i] - hi[i]);
            }
            return finish(nu_hi, xs);
        }
    }
    if (std::abs(gap) > tol) {
        throw Error(ErrorKind::NonConvergence,
                    "dual bisection did not converge: bracket [" + std::to_string(nu_lo) + ", " +
                        std::to_string(nu_hi) + "], demand gap " +
                        std::to_string(gap * scale) + " after " + std::to_string(iter) +
                        " iterations");
    }
    for (std::size_t i : p.curved) xs[i] = p.tick_demand(i, nu);
    return finish(nu, xs);
}

struct SweepOptions {
    MaxReturnOptions solver;
    /// Seed each solve with the previous multiplier; forces sequential order.
    bool bracket_hints = true;
    /// Solve points concurrently (only when bracket_hints is off).
    bool parallel = false;
};

/// One maximum-return solve per capital level, in the order of `d_list`,
/// which must be ascending and non-negative.
inline std::vector<Allocation> capital_sweep(const MarketConditions& base,
                                             const std::vector<double>& d_list,
                                             const SweepOptions& options = {}) {
    for (std::size_t k = 0; k < d_list.size(); ++k) {
        if (!(d_list[k] >= 0.0) || (k > 0 && d_list[k] < d_list[k - 1])) {
            throw Error(ErrorKind::InvalidInput,
                        "d_list must be ascending and non-negative (index " +
                            std::to_string(k) + ")",
                        "d_list");
        }
    }
    auto solve_at = [&](std::size_t k, std::optional<double> hint) {
        MarketConditions mc = base;
        mc.d = d_list[k];
        MaxReturnOptions opts = options.solver;
        opts.nu_hint = hint;
        try {
            return solve_max_return(mc, opts);
        } catch (const Error& e) {
            throw Error(e.kind(), "d_list[" + std::to_string(k) + "]: " + e.what(), e.field());
        }
    };

    std::vector<Allocation> out;
    out.reserve(d_list.size());
    if (!options.bracket_hints && options.parallel) {
        std::vector<std::future<Allocation>> jobs;
        for (std::size_t k = 0; k < d_list.size(); ++k)
            jobs.push_back(std::async(std::launch::async, solve_at, k, std::nullopt));
        for (auto& job : jobs) out.push_back(job.get());
        return out;
    }
    std::optional<double> hint;
    for (std::size_t k = 0; k < d_list.size(); ++k) {
        out.push_back(solve_at(k, hint));
        if (options.bracket_hints && d_list[k] > 0.0) hint = out.back().dual;
    }
    return out;
}

} // namespace tickprov
