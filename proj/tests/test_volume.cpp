#include "instances.hpp"
#include "synthetic.hpp"
#include "tickprov/io.hpp"
#include "tickprov/volume.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace tickprov;

namespace {

SwapEvent swap(double before, double after, double volume, std::string pool = "p") {
    SwapEvent e;
    e.pool_id = std::move(pool);
    e.price_before = before;
    e.price_after = after;
    e.volume_stable = volume;
    return e;
}

std::vector<TickSpec> unit_ticks() {
    return {{"a", 1.0, 1.02, 0.0005, "p"}, {"b", 1.02, 1.0404, 0.0005, "p"}, {"c", 1.0404, 1.1, 0.0005, "p"}};
}

double sum_left_to_right(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

} // namespace

TEST(AttributeSwap, InsideOneTick) {
    const auto v = attribute_swap(swap(1.001, 1.015, 500.0), unit_ticks(), {1, 1, 1});
    EXPECT_EQ(v, (std::vector<double>{500.0, 0.0, 0.0}));
}

TEST(AttributeSwap, TwoTicksHandComputed) {
    const auto v = attribute_swap(swap(1.0, 1.0404, 1000.0), unit_ticks(), {5, 5, 5});
    const double w0 = std::sqrt(1.02) - 1.0;
    const double w1 = std::sqrt(1.0404) - std::sqrt(1.02);
    EXPECT_NEAR(v[0], 1000.0 * w0 / (w0 + w1), 1e-10);
    EXPECT_NEAR(v[1], 1000.0 * w1 / (w0 + w1), 1e-10);
    EXPECT_EQ(v[2], 0.0);
    EXPECT_EQ(sum_left_to_right(v), 1000.0);
}

TEST(AttributeSwap, LiquidityWeights) {
    const auto v = attribute_swap(swap(1.0, 1.0404, 1000.0), unit_ticks(), {1, 3, 1});
    const double w0 = std::sqrt(1.02) - 1.0;
    const double w1 = 3.0 * (std::sqrt(1.0404) - std::sqrt(1.02));
    EXPECT_NEAR(v[1] / v[0], w1 / w0, 1e-12);
}

TEST(AttributeSwap, DegeneratePath) {
    const auto v = attribute_swap(swap(1.03, 1.03, 42.0), unit_ticks(), {1, 1, 1});
    EXPECT_EQ(v, (std::vector<double>{0.0, 42.0, 0.0}));
    const auto edge = attribute_swap(swap(1.1, 1.1, 42.0), unit_ticks(), {1, 1, 1});
    EXPECT_EQ(edge[2], 42.0);
}

TEST(AttributeSwap, DirectionSymmetric) {
    fixtures::InstanceStream rng(5);
    const auto ticks = synthetic::ticks_between(2000, 3500);
    std::vector<double> liq(ticks.size());
    for (auto& l : liq) l = rng.log_uniform(1e3, 1e7);
    for (int k = 0; k < 200; ++k) {
        const double p = 2100 + 1300 * rng.uniform();
        const double q = 2100 + 1300 * rng.uniform();
        const double vol = rng.log_uniform(1, 1e7);
        const auto up = attribute_swap(swap(p, q, vol, "eth-usdc-5"), ticks, liq);
        const auto down = attribute_swap(swap(q, p, vol, "eth-usdc-5"), ticks, liq);
        EXPECT_EQ(up, down);
        EXPECT_EQ(sum_left_to_right(up), vol);
    }
}

TEST(AttributeSwap, ConservesEveryFixtureEvent) {
    for (const char* dir : {"optimize", "backtest3", "backtest8"}) {
        const auto path = fixtures::kFixtures / dir / "swaps.csv";
        const auto events = io::swaps_from_csv(io::read_file(path), path.string());
        const auto snap = synthetic::market_snapshot(0.0, 0.0, {});
        for (const auto& e : events) {
            const auto v = attribute_swap(e, snap.ticks, snap.liquidity);
            ASSERT_EQ(sum_left_to_right(v), e.volume_stable) << dir;
        }
    }
}

TEST(AttributeSwap, OtherPoolsIgnored) {
    auto ticks = unit_ticks();
    ticks.push_back({"q", 1.0, 1.1, 0.003, "q"});
    const auto v = attribute_swap(swap(1.0, 1.05, 10.0), ticks, {1, 1, 1, 1});
    EXPECT_EQ(v[3], 0.0);
    EXPECT_EQ(sum_left_to_right(v), 10.0);
}

TEST(AttributeSwap, Errors) {
    const auto ticks = unit_ticks();
    try {
        attribute_swap(swap(1.05, 1.2, 1.0), ticks, {1, 1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
        EXPECT_NE(std::string(e.what()).find("[1.1000000000000001, 1.2]"), std::string::npos) << e.what();
    }
    std::vector<TickSpec> gap = {ticks[0], ticks[2]};
    try {
        attribute_swap(swap(1.01, 1.05, 1.0), gap, {1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("sub-range"), std::string::npos);
    }
    EXPECT_THROW(attribute_swap(swap(1.01, 1.05, 1.0), ticks, {1, 0, 1}), Error);
    EXPECT_THROW(attribute_swap(swap(0.5, 0.5, 1.0), ticks, {1, 1, 1}), Error);
    EXPECT_THROW(attribute_swap(swap(1.01, 1.05, 0.0), ticks, {1, 1, 1}), Error);
    EXPECT_THROW(attribute_swap(swap(-1.0, 1.05, 1.0), ticks, {1, 1, 1}), Error);
    EXPECT_THROW(attribute_swap(swap(1.01, 1.05, 1.0), ticks, {1, 1}), Error);
}

TEST(VolumeProfile, TotalsMatch) {
    const auto ticks = unit_ticks();
    const std::vector<SwapEvent> events = {swap(1.0, 1.05, 10), swap(1.09, 1.01, 20), swap(1.03, 1.03, 5)};
    const auto prof = volume_profile(events, ticks, {1, 2, 3}, 7.0);
    EXPECT_EQ(prof.window_days, 7.0);
    EXPECT_NEAR(prof.total, 35.0, 1e-12);
    EXPECT_NEAR(sum_left_to_right(prof.per_tick_volume), prof.total, 1e-9 * prof.total);
}

TEST(FitVolumeShape, SpecExamples) {
    const auto single = fit_volume_shape({swap(1.001, 1.002, 10)}, unit_ticks(), {1, 1, 1});
    EXPECT_EQ(single.sigma_volume, 0.0);
    EXPECT_EQ(single.total_per_period, 10.0);

    const std::vector<TickSpec> two = {{"l", 85, 95, 0.0005, "p"}, {"h", 105, 115, 0.0005, "p"}};
    const auto fit = fit_volume_shape({swap(90, 90, 7), swap(110, 110, 7)}, two, {1, 1});
    EXPECT_NEAR(fit.sigma_volume, 10.0, 1e-12);
    EXPECT_NEAR(fit.center, 100.0, 1e-12);

    EXPECT_NEAR(weighted_price_moments(two, {1, 1}).second, 10.0, 1e-12);
}

TEST(FitVolumeShape, RecoversGeneratingSpread) {
    const auto events = synthetic::gaussian_swaps(1000, 25.0, 77);
    const auto ticks = synthetic::ticks_between(2600, 2960);
    const std::vector<double> liq(ticks.size(), 1.0);
    const auto fit = fit_volume_shape(events, ticks, liq);
    EXPECT_NEAR(fit.sigma_volume, 25.0, 0.05 * 25.0);
    EXPECT_NEAR(fit.total_per_period, 1000.0 * 1000.0, 1e-6);
}

TEST(FitVolumeShape, EmptyWindow) {
    try {
        fit_volume_shape({}, unit_ticks(), {1, 1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}

TEST(PredictFees, SpecExamples) {
    const std::vector<TickSpec> one = {{"t", 2770, 2790, 0.0005, "p"}};
    EXPECT_NEAR(predict_fees_a(2780, 15.0, 1e6, one)[0], 500.0, 1e-9);
    EXPECT_NEAR(predict_fees_a(2780, 0.0, 1e6, one)[0], 500.0, 1e-12);

    const std::vector<TickSpec> sym = {{"l", 2760, 2780, 0.0005, "p"}, {"h", 2780, 2800, 0.0005, "p"}};
    const auto a = predict_fees_a(2780, 12.0, 1e6, sym);
    EXPECT_NEAR(a[0], a[1], 1e-9 * a[0]);
}

TEST(PredictFees, SingleTierConservation) {
    const auto events = synthetic::gaussian_swaps(1000, 25.0, 77);
    const auto ticks = synthetic::ticks_between(2600, 2960);
    const auto fit = fit_volume_shape(events, ticks, std::vector<double>(ticks.size(), 1.0));
    const auto a = predict_fees_a(2780, fit.sigma_volume, fit.total_per_period, ticks);
    EXPECT_NEAR(sum_left_to_right(a), 0.0005 * fit.total_per_period, 1e-9 * 0.0005 * fit.total_per_period);
}

TEST(PredictFees, HomogeneousInVolume) {
    const auto ticks = synthetic::ticks_between(2500, 3000);
    const auto a1 = predict_fees_a(2780, 40.0, 1e6, ticks);
    const auto a3 = predict_fees_a(2780, 40.0, 3e6, ticks);
    for (std::size_t i = 0; i < ticks.size(); ++i) EXPECT_NEAR(a3[i], 3.0 * a1[i], 1e-12 * a3[i] + 1e-300);
}

TEST(PredictFees, TruncationWithoutRenormalization) {
    const std::vector<TickSpec> one = {{"t", 2770, 2790, 0.0005, "p"}};
    const auto a = predict_fees_a(2780, 20.0, 1e6, one, {.renormalize = false});
    EXPECT_NEAR(a[0], 500.0 * (normal_cdf(0.5) - normal_cdf(-0.5)), 1e-9);
}

TEST(PredictFees, FeeTierScales) {
    const std::vector<TickSpec> mixed = {{"l", 2760, 2780, 0.0005, "p"}, {"h", 2780, 2800, 0.003, "q"}};
    const auto a = predict_fees_a(2780, 12.0, 1e6, mixed);
    EXPECT_NEAR(a[1] / a[0], 6.0, 1e-9);
}

TEST(PredictFees, Errors) {
    const std::vector<TickSpec> away = {{"t", 3000, 3100, 0.0005, "p"}};
    EXPECT_THROW(predict_fees_a(2780, 0.0, 1e6, away), Error);
    EXPECT_THROW(predict_fees_a(2780, -1.0, 1e6, away), Error);
    EXPECT_THROW(predict_fees_a(2780, 1.0, -1e6, away), Error);
    EXPECT_THROW(predict_fees_a(0.0, 1.0, 1e6, away), Error);
}

TEST(Consistency, SelfConsistentHasNoFlags) {
    const double p0 = 2780, sigma = 0.8, days = 7;
    const auto ticks = synthetic::ticks_between(0.4 * p0, 2.0 * p0);
    const auto mass = price_mass_gbm(p0, sigma, days);
    const auto a = predict_fees_a(p0, mass.price_stddev(), 1e6, ticks);
    const auto r = consistency_check(a, ticks, mass);
    EXPECT_TRUE(r.ok()) << (r.warnings.empty() ? "" : r.warnings.front());
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Consistency, CenterOffsetFlag) {
    const double p0 = 2780;
    const auto ticks = synthetic::ticks_between(0.4 * p0, 2.0 * p0);
    const auto mass = price_mass_gbm(1.1 * p0, 0.8, 7);
    const auto a = predict_fees_a(p0, mass.price_stddev(), 1e6, ticks);
    const auto r = consistency_check(a, ticks, mass);
    EXPECT_TRUE(r.center_offset_flag);
    EXPECT_FALSE(r.spread_ratio_flag);
    EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Consistency, SpreadRatioFlag) {
    const double p0 = 2780, sigma = 0.8, tau = 7.0 / 365.0;
    const auto ticks = synthetic::ticks_between(0.4 * p0, 2.0 * p0);
    const auto mass = price_mass_gbm(p0, sigma, 7);
    const auto a = predict_fees_a(p0, sigma * std::sqrt(tau) * p0 / 10.0, 1e6, ticks);
    const auto r = consistency_check(a, ticks, mass);
    EXPECT_TRUE(r.spread_ratio_flag);
    EXPECT_FALSE(r.center_offset_flag);
}

TEST(Consistency, MisalignedInputsWarn) {
    const auto r = consistency_check({1.0}, {}, price_mass_gbm(2780, 0.8, 7));
    EXPECT_FALSE(r.warnings.empty());
}
