#pragma once

// First-order reference solver for cross-checking the exact solvers.
//
// Accelerated projected-gradient ascent on the scaled simplex with
// backtracking and function-value restarts. It only needs the objective and
// its gradient, so it shares no code path with the dual methods.

#include "tickprov/core.hpp"
#include "tickprov/max_return.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace tickprov {

/// Euclidean projection onto {x >= 0, sum x = d}.
inline std::vector<double> project_simplex(const std::vector<double>& v, double d) {
    const std::size_t n = v.size();
    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cumulative += sorted[k];
        const double candidate = (cumulative - d) / static_cast<double>(k + 1);
        if (sorted[k] - candidate > 0.0) theta = candidate;
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::max(v[i] - theta, 0.0);
    return x;
}

/// Projected-gradient oracle for the maximum-return problem (pass an empty
/// or zero `c` for the maximum-revenue problem). Stops once the objective
/// improves by less than tol * max(1, |f|) over a 50-iteration stretch.
/// When the budget runs out the best iterate is returned with status
/// Suboptimal.
inline Allocation projected_gradient_oracle(const MarketConditions& raw, int max_iters = 200000,
                                            double tol = 1e-12) {
    MarketConditions mc = validate_conditions(raw);
    const std::size_t n = mc.size();
    if (mc.c.empty()) mc.c.assign(n, 0.0);
    Allocation out;
    out.status = SolveStatus::Optimal;
    if (n == 0 || mc.d == 0.0) {
        out.x.assign(n, 0.0);
        return out;
    }

    auto f = [&](const std::vector<double>& x) { return objective_return(mc.a, mc.b, mc.c, x); };
    auto grad = [&](const std::vector<double>& x) {
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = marginal_return(mc.a[i], mc.b[i], mc.c[i], x[i]);
        return g;
    };

    std::vector<double> x(n, mc.d / static_cast<double>(n));
    std::vector<double> y = x;
    double fx = f(x);
    double momentum = 1.0;
    double lipschitz = 1.0;
    double checkpoint = fx;
    const int stretch = 50;

    int it = 0;
    bool converged = false;
    for (; it < max_iters; ++it) {
        const auto g = grad(y);
        const double fy = f(y);
        std::vector<double> z;
        double fz = 0.0;
        for (int bt = 0; bt < 100; ++bt) {
            std::vector<double> step(n);
            for (std::size_t i = 0; i < n; ++i) step[i] = y[i] + g[i] / lipschitz;
            z = project_simplex(step, mc.d);
            double lin = 0.0;
            double sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dz = z[i] - y[i];
                lin += g[i] * dz;
                sq += dz * dz;
            }
            fz = f(z);
            if (fz >= fy + lin - 0.5 * lipschitz * sq - 1e-15 * std::abs(fy)) break;
            lipschitz *= 2.0;
        }

        if (fz < fx) {
            // A plain step from the accepted point no longer ascends.
            if (momentum == 1.0) {
                converged = true;
                break;
            }
            // Restart momentum from the last accepted point.
            momentum = 1.0;
            y = x;
            continue;
        }
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = (momentum - 1.0) / next_momentum;
        for (std::size_t i = 0; i < n; ++i) y[i] = z[i] + beta * (z[i] - x[i]);
        momentum = next_momentum;
        x = std::move(z);
        fx = fz;
        lipschitz *= 0.9;

        if ((it + 1) % stretch == 0) {
            if (fx - checkpoint < tol * std::max(1.0, std::abs(fx))) {
                converged = true;
                break;
            }
            checkpoint = fx;
        }
    }

    out.x = x;
    out.objective = fx;
    out.iterations = it;
    out.status = converged ? SolveStatus::Optimal : SolveStatus::Suboptimal;
    return out;
}

} // namespace tickprov
