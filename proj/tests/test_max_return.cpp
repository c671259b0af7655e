#include "instances.hpp"
#include "synthetic.hpp"
#include "tickprov/max_return.hpp"
#include "tickprov/oracle.hpp"
#include "tickprov/waterfill.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace tickprov;
using fixtures::InstanceStream;

namespace {

MarketConditions make(std::vector<double> a, std::vector<double> b, std::vector<double> c, double d) {
    MarketConditions mc;
    mc.a = std::move(a);
    mc.b = std::move(b);
    mc.c = std::move(c);
    mc.d = d;
    return mc;
}

double rel_gap(double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); }

} // namespace

TEST(MaxReturn, SymmetricSplit) {
    const auto r = solve_max_return(make({1, 1}, {1, 1}, {1, 1}, 2));
    EXPECT_NEAR(r.x[0], 1.0, 1e-10);
    EXPECT_NEAR(r.x[1], 1.0, 1e-10);
}

TEST(MaxReturn, CornerExampleMatchesLineSearch) {
    const auto mc = make({1, 0}, {1, 1}, {0.9, 1.0}, 1);
    const auto r = solve_max_return(mc);
    EXPECT_NEAR(r.x[0], 1.0, 1e-10);
    EXPECT_NEAR(r.x[1], 0.0, 1e-10);

    // Reduced objective in x0 on a 1e-5 grid.
    double best_x = 0.0, best_f = -std::numeric_limits<double>::infinity();
    for (long k = 0; k <= 100000; ++k) {
        const double x0 = static_cast<double>(k) * 1e-5;
        const double f = objective_return(mc.a, mc.b, mc.c, {x0, 1.0 - x0});
        if (f > best_f) {
            best_f = f;
            best_x = x0;
        }
    }
    EXPECT_NEAR(best_x, 1.0, 1e-5);
    EXPECT_GE(r.objective, best_f - 1e-12);
    // The reduced derivative at the corner is 1/4 - 0.1 = 0.15 > 0.
    EXPECT_NEAR(marginal_return(1, 1, 0.9, 1.0) - 1.0, 0.15, 1e-15);
}

TEST(MaxReturn, AllLinearGoesToBestReturn) {
    const auto r = solve_max_return(make({0, 0}, {1, 1}, {1.1, 0.9}, 1));
    EXPECT_EQ(r.x, (std::vector<double>{1.0, 0.0}));
    const auto tie = solve_max_return(make({0, 0, 0}, {1, 1, 1}, {1.0, 2.0, 2.0}, 4));
    EXPECT_EQ(tie.x, (std::vector<double>{0.0, 2.0, 2.0}));
}

TEST(MaxReturn, LinearTickAboveMultiplierTakesRemainder) {
    // The linear tick's c caps the multiplier: the curved tick keeps its demand
    // at nu = 1.2 and the rest goes to the linear tick.
    const auto mc = make({1, 0}, {1, 1}, {1.0, 1.2}, 5);
    const auto r = solve_max_return(mc);
    const double curved = std::sqrt(1.0 / 0.2) - 1.0;
    EXPECT_NEAR(r.x[0], curved, 1e-12);
    EXPECT_NEAR(r.x[1], 5.0 - curved, 1e-12);
    const auto o = projected_gradient_oracle(mc);
    EXPECT_LE(o.objective, r.objective + 1e-9);
    EXPECT_LE(r.kkt_residual, 1e-10);

    const auto dominant = solve_max_return(make({1, 0}, {1, 1}, {0, 5}, 1));
    EXPECT_EQ(dominant.x, (std::vector<double>{0.0, 1.0}));
}

TEST(MaxReturn, RootBetweenAdjacentDoubles) {
    // The second tick's fee term is far below the resolution of nu near its c,
    // so the exact multiplier sits within an ulp of 0.99.
    const auto mc = make({1, 1e-30}, {1, 1}, {0.9, 0.99}, 10);
    const auto r = solve_max_return(mc);
    const double first = std::sqrt(1.0 / 0.09) - 1.0;
    EXPECT_NEAR(r.x[0], first, 1e-6);
    EXPECT_NEAR(r.x[1], 10.0 - first, 1e-6);
    EXPECT_NEAR(r.total(), 10.0, 1e-12);
    EXPECT_LE(r.kkt_residual, 1e-8);
}

TEST(MaxReturn, EmptyCIsZero) {
    const auto r = solve_max_return(make({4, 1}, {1, 1}, {}, 1));
    EXPECT_NEAR(r.x[0], 1.0, 1e-10);
}

TEST(MaxReturn, ZeroCapital) {
    const auto r = solve_max_return(make({1, 2}, {1, 1}, {1, 1}, 0));
    EXPECT_EQ(r.x, (std::vector<double>{0.0, 0.0}));
}

TEST(MaxReturn, NonConvergenceReportsBracket) {
    MaxReturnOptions opts;
    opts.max_iterations = 1;
    opts.tolerance = 1e-300;
    try {
        solve_max_return(make({3, 1, 2}, {1, 2, 0.5}, {1.0, 1.1, 0.95}, 1.7), opts);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonConvergence);
        EXPECT_NE(std::string(e.what()).find("bracket"), std::string::npos);
    }
}

TEST(ObjectiveReturn, SpecExamples) {
    EXPECT_EQ(objective_return({1, 1}, {1, 1}, {1, 1}, {0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(objective_return({1}, {1}, {2}, {1}), 2.5);
    EXPECT_DOUBLE_EQ(objective_return({1, 1}, {1, 1}, {0, 0}, {1, 1}), 1.0);
}

TEST(ObjectiveReturn, StandardFormIsNegation) {
    InstanceStream rng(9);
    for (int k = 0; k < 100; ++k) {
        const auto mc = rng.conditions(16, true);
        const auto x = rng.dirichlet(mc.size(), mc.d);
        const double f = objective_return(mc.a, mc.b, mc.c, x);
        const double g = objective_return_standard_form(mc.a, mc.b, mc.c, x);
        EXPECT_LE(std::abs(f + g), 1e-12 * std::max(1.0, std::abs(f)));
    }
}

TEST(VerifyKktReturn, SpecExamples) {
    InstanceStream rng(19);
    for (int k = 0; k < 100; ++k) {
        const auto mc = rng.conditions(16, true);
        const auto r = solve_max_return(mc);
        EXPECT_LE(verify_kkt_return(mc.a, mc.b, mc.c, mc.d, r.x, 1e-9), 1e-8);
    }
    EXPECT_GT(verify_kkt_return({10, 0.1}, {0.1, 10}, {1, 1}, 1, {0.5, 0.5}, 1e-9), 1e-2);
    EXPECT_EQ(verify_kkt_return({1, 1}, {1, 1}, {1, 1}, 0, {0, 0}, 1e-9), 0.0);
    EXPECT_THROW(verify_kkt_return({1, 1}, {1, 1}, {1, 1}, 1, {0.2, 0.2}, 1e-9), Error);
}

TEST(Oracle, SpecExamples) {
    const auto sym = projected_gradient_oracle(make({1, 1}, {1, 1}, {1, 1}, 2));
    EXPECT_NEAR(sym.x[0], 1.0, 1e-6);
    EXPECT_NEAR(sym.x[1], 1.0, 1e-6);
    const auto corner = projected_gradient_oracle(make({1, 0}, {1, 1}, {0.9, 1.0}, 1));
    EXPECT_NEAR(corner.x[0], 1.0, 1e-6);
    EXPECT_NEAR(corner.x[1], 0.0, 1e-6);
}

TEST(Oracle, SimplexProjection) {
    const auto p = project_simplex({0.5, 2.0, -1.0}, 1.0);
    EXPECT_NEAR(p[0], 0.0, 1e-15);
    EXPECT_NEAR(p[1], 1.0, 1e-15);
    EXPECT_EQ(p[2], 0.0);
    const auto q = project_simplex({0.2, 0.2}, 1.0);
    EXPECT_NEAR(q[0], 0.5, 1e-15);
    EXPECT_NEAR(q[1], 0.5, 1e-15);
}

TEST(MaxReturnProperties, MatchesOracle) {
    InstanceStream rng(29);
    for (int k = 0; k < 200; ++k) {
        const auto mc = rng.conditions(16, true);
        const auto r = solve_max_return(mc);
        const auto o = projected_gradient_oracle(mc);
        EXPECT_LE(rel_gap(r.objective, o.objective), 1e-6) << k;
        EXPECT_LE(o.objective, r.objective + 1e-6 * std::max(1.0, std::abs(r.objective)));
        EXPECT_LE(r.kkt_residual, 1e-8);
        EXPECT_NEAR(r.total(), mc.d, 1e-10 * mc.d);
        for (double xi : r.x) EXPECT_GE(xi, 0.0);
    }
}

TEST(MaxReturnProperties, TranslationInvariance) {
    InstanceStream rng(39);
    for (int k = 0; k < 100; ++k) {
        const auto mc = rng.conditions(16, true);
        auto shifted = mc;
        const double delta = rng.uniform() * 2.0 - 0.5;
        for (double& v : shifted.c) v += delta;
        const auto r1 = solve_max_return(mc);
        const auto r2 = solve_max_return(shifted);
        EXPECT_NEAR(r2.objective - r1.objective, delta * mc.d,
                    1e-9 * std::max(1.0, std::abs(r1.objective)));
        for (std::size_t i = 0; i < mc.size(); ++i)
            EXPECT_NEAR(r1.x[i], r2.x[i], 1e-9 * std::max(1.0, mc.d));
    }
}

TEST(MaxReturnProperties, ConstantReturnReducesToWaterfill) {
    InstanceStream rng(49);
    for (double kappa : {0.0, 0.9, 1.7}) {
        for (int k = 0; k < 50; ++k) {
            auto mc = rng.conditions(16, false);
            mc.c.assign(mc.size(), kappa);
            const auto r = solve_max_return(mc);
            const auto w = solve_waterfill(mc);
            for (std::size_t i = 0; i < mc.size(); ++i) EXPECT_NEAR(r.x[i], w.x[i], 1e-8);
        }
    }
}

TEST(CapitalSweep, SpecExamples) {
    const auto base = make({3, 1, 2}, {1, 2, 0.5}, {1.0, 1.1, 0.95}, 0);
    const auto single = capital_sweep(base, {0.0});
    ASSERT_EQ(single.size(), 1u);
    EXPECT_EQ(single[0].x, (std::vector<double>{0, 0, 0}));

    InstanceStream rng(59);
    for (int k = 0; k < 100; ++k) {
        const auto mc = rng.conditions(16, true);
        const auto rs = capital_sweep(mc, {1.0, 2.0});
        for (std::size_t i : support(rs[0].x)) EXPECT_GT(rs[1].x[i], 0.0);
    }
}

TEST(CapitalSweep, DualsNonIncreasingAndHintsAgree) {
    InstanceStream rng(69);
    const std::vector<double> ds = {0.01, 0.1, 0.5, 1, 2, 5, 10, 50, 100};
    for (int k = 0; k < 50; ++k) {
        const auto mc = rng.conditions(16, true);
        const auto hinted = capital_sweep(mc, ds);
        SweepOptions cold_opts;
        cold_opts.bracket_hints = false;
        cold_opts.parallel = true;
        const auto cold = capital_sweep(mc, ds, cold_opts);
        ASSERT_EQ(hinted.size(), ds.size());
        for (std::size_t j = 0; j < ds.size(); ++j) {
            if (j > 0) {
                EXPECT_LE(hinted[j].dual, hinted[j - 1].dual + 1e-12);
            }
            for (std::size_t i = 0; i < mc.size(); ++i)
                EXPECT_NEAR(hinted[j].x[i], cold[j].x[i], 1e-9 * std::max(1.0, ds[j]));
        }
    }
}

TEST(CapitalSweep, Errors) {
    const auto base = make({1, 1}, {1, 1}, {1, 1}, 0);
    try {
        capital_sweep(base, {1.0, 0.5});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
        EXPECT_EQ(e.field(), "d_list");
    }
    EXPECT_THROW(capital_sweep(base, {-1.0}), Error);
    auto bad = base;
    bad.b[0] = -1.0;
    try {
        capital_sweep(bad, {1.0, 2.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("d_list[0]"), std::string::npos);
    }
}

TEST(CapitalSweep, SyntheticScenarioShiftsCapitalAway) {
    const auto base = synthetic::wells_conditions(1.0);
    const std::vector<double> ds = {0.2, 0.5, 1, 2, 5, 10};
    const auto rs = capital_sweep(base, ds);
    double prev = 2.0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        double near = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (std::abs(base.ticks[i].mid() / synthetic::kP0 - 1.0) <= 0.01) near += rs[j].x[i];
        }
        const double frac = near / ds[j];
        EXPECT_LT(frac, prev);
        prev = frac;
        const auto o = projected_gradient_oracle([&] {
            auto mc = base;
            mc.d = ds[j];
            return mc;
        }());
        EXPECT_LE(rel_gap(rs[j].objective, o.objective), 1e-6);
    }
}
