#pragma once

// Maximum-revenue provisioning by water-filling.
//
//   maximize   sum_i a_i x_i / (x_i + b_i)
//   subject to x >= 0, sum_i x_i = d
//
// Tick i is a mound of height sqrt(b_i / a_i) and width sqrt(a_i b_i). The
// optimum floods the landscape to a level u and x_i is the water standing
// above mound i: x_i = max(0, sqrt(a_i b_i) (u - sqrt(b_i / a_i))).

#include "tickprov/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tickprov {

struct WaterfillBreakpoint {
    std::size_t tick_index = 0;
    double height = 0.0; // sqrt(b / a)
    double width = 0.0;  // sqrt(a b)
};

/// Breakpoints of ticks with a_i > 0, ascending by height. Ticks with
/// a_i = 0 have infinite height and are left out.
inline std::vector<WaterfillBreakpoint> waterfill_breakpoints(const std::vector<double>& a,
                                                             const std::vector<double>& b) {
    std::vector<WaterfillBreakpoint> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > 0.0) out.push_back({i, std::sqrt(b[i] / a[i]), std::sqrt(a[i] * b[i])});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& l, const auto& r) { return l.height < r.height; });
    return out;
}

/// Total water sum_i max(0, width_i (u - height_i)) at level u.
inline double waterfill_volume(const std::vector<WaterfillBreakpoint>& bps, double u) {
    double total = 0.0;
    for (const auto& bp : bps) total += std::max(0.0, bp.width * (u - bp.height));
    return total;
}

/// KKT residual of a candidate allocation for the maximum-revenue problem.
///
/// With g_i = a_i b_i / (x_i + b_i)^2 the smallest multiplier satisfying
/// g_i <= nu is nu = max_i g_i. The residual is the largest of the
/// stationarity excess, the complementary-slackness gap
/// (x_i / max(d, 1)) (nu - g_i) / nu, and the primal feasibility gap.
/// Throws if x is infeasible beyond tol.
inline double verify_kkt_revenue(const std::vector<double>& a, const std::vector<double>& b,
                                 double d, const std::vector<double>& x, double tol) {
    const std::size_t n = x.size();
    if (a.size() != n || b.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "a, b and x must have equal length");
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

    std::vector<double> grad(n, 0.0);
    double nu = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = x[i] + b[i];
        grad[i] = denom > 0.0 ? a[i] * b[i] / (denom * denom) : 0.0;
        nu = std::max(nu, grad[i]);
    }
    double residual = feas;
    if (nu <= 0.0) return residual;
    for (std::size_t i = 0; i < n; ++i) {
        residual = std::max(residual, std::max(0.0, grad[i] - nu) / nu);
        if (x[i] > 0.0) residual = std::max(residual, (x[i] / scale) * (nu - grad[i]) / nu);
    }
    return residual;
}

/// Exact water-filling solve. Sorts the breakpoints, accumulates slope and
/// intercept segment by segment, and solves the linear equation inside the
/// bracketing segment. Returns the water level u as `dual`.
inline Allocation solve_waterfill(const MarketConditions& raw,
                                  double epsilon_b = kDefaultEpsilonB) {
    const MarketConditions mc = validate_conditions(raw, epsilon_b);
    const std::size_t n = mc.size();
    const auto bps = waterfill_breakpoints(mc.a, mc.b);

    Allocation out;
    out.x.assign(n, 0.0);
    if (mc.d == 0.0) {
        out.dual = bps.empty() ? 0.0 : bps.front().height;
        return out;
    }
    if (bps.empty()) {
        throw Error(ErrorKind::DegenerateObjective,
                    "all forecast fees are zero; every feasible allocation is optimal");
    }

    // On [h_k, h_{k+1}] the volume is W_k u - B_k with W_k = sum width and
    // B_k = sum width * height = sum b over the first k+1 breakpoints.
    double slope = 0.0;
    double intercept = 0.0;
    double u = 0.0;
    std::size_t active = 0;
    for (std::size_t k = 0; k < bps.size(); ++k) {
        slope += bps[k].width;
        intercept += bps[k].width * bps[k].height;
        u = (mc.d + intercept) / slope;
        active = k + 1;
        const double next = k + 1 < bps.size() ? bps[k + 1].height
                                                : std::numeric_limits<double>::infinity();
        if (u <= next) break;
    }

    auto fill = [&](double level) {
        double total = 0.0;
        for (std::size_t k = 0; k < active; ++k) {
            const auto& bp = bps[k];
            const double xi = std::max(0.0, bp.width * (level - bp.height));
            out.x[bp.tick_index] = xi;
            total += xi;
        }
        return total;
    };

    // Round-off polish: the volume is linear in u on the support.
    double total = fill(u);
    for (int pass = 0; pass < 3 && total != mc.d; ++pass) {
        double support_slope = 0.0;
        for (std::size_t k = 0; k < active; ++k)
            if (out.x[bps[k].tick_index] > 0.0) support_slope += bps[k].width;
        if (support_slope <= 0.0) break;
        u += (mc.d - total) / support_slope;
        total = fill(u);
    }
    if (total > 0.0 && std::abs(total - mc.d) > 1e-13 * mc.d) {
        for (double& xi : out.x) xi *= mc.d / total;
    }

    out.dual = u;
    out.objective = objective_revenue(mc.a, mc.b, out.x);
    out.kkt_residual = verify_kkt_revenue(mc.a, mc.b, mc.d, out.x, 1e-9);
    return out;
}

inline Allocation solve_waterfill(const std::vector<double>& a, const std::vector<double>& b,
                                  double d, double epsilon_b = kDefaultEpsilonB) {
    MarketConditions mc;
    mc.a = a;
    mc.b = b;
    mc.d = d;
    return solve_waterfill(mc, epsilon_b);
}

} // namespace tickprov
