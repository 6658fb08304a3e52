#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "imbalance/market_impact.hpp"

using namespace imbalance;

TEST(Sensitivities, ExactLineBothRegimes) {
    std::vector<ImbalanceObservation> h;
    for (int s = -200; s <= 200; s += 7) {
        const double p = 100.0 - 0.41 * s;
        h.push_back({static_cast<double>(s), p, p});
    }
    auto est = estimate_sensitivities(h);
    EXPECT_NEAR(est.mdp.k, 0.41, 1e-12);
    EXPECT_NEAR(est.mip.k, 0.41, 1e-12);
    EXPECT_NEAR(est.mdp.standard_error, 0.0, 1e-10);
}

TEST(Sensitivities, TwoPointsNegatedSlope) {
    // MDP regime gets (0,0) and (1,-2); MIP gets a separate pair.
    std::vector<ImbalanceObservation> h{{0, 0, 0}, {1, -2, 0}, {-1, 0, 5}, {-2, 0, 7}};
    auto est = estimate_sensitivities(h);
    EXPECT_DOUBLE_EQ(est.mdp.k, 2.0);
    EXPECT_DOUBLE_EQ(est.mip.k, 2.0);
    EXPECT_EQ(est.mdp.count, 2u);
}

TEST(Sensitivities, ZeroImbalanceCountsAsMdp) {
    std::vector<ImbalanceObservation> h{{0, 10, 0}, {2, 6, 0}, {-1, 0, 1}, {-3, 0, 2}};
    auto est = estimate_sensitivities(h);
    EXPECT_EQ(est.mdp.count, 2u);
    EXPECT_DOUBLE_EQ(est.mdp.k, 2.0);
}

TEST(Sensitivities, Errors) {
    std::vector<ImbalanceObservation> one_mip{{1, 0, 0}, {2, 1, 0}, {-1, 0, 0}};
    EXPECT_THROW(estimate_sensitivities(one_mip), std::invalid_argument);
    std::vector<ImbalanceObservation> flat{{1, 0, 0}, {1, 1, 0}, {-1, 0, 0}, {-2, 0, 1}};
    EXPECT_THROW(estimate_sensitivities(flat), std::invalid_argument);
}

TEST(Sensitivities, NoisyWithinThreeSigma) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> noise(0.0, 15.0);
    std::uniform_real_distribution<double> s(-400, 400);
    int inside = 0;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<ImbalanceObservation> h;
        for (int i = 0; i < 800; ++i) {
            const double si = s(rng);
            h.push_back({si, 60 - 0.40 * si + noise(rng), 90 - 0.41 * si + noise(rng)});
        }
        auto est = estimate_sensitivities(h);
        inside += std::abs(est.mdp.k - 0.40) <= 3 * est.mdp.standard_error;
        inside += std::abs(est.mip.k - 0.41) <= 3 * est.mip.standard_error;
    }
    EXPECT_GE(inside, 38);
}

TEST(AdjustPrice, Formula) {
    const ImpactParams p{1.0, 0.40, 0.41};
    EXPECT_EQ(adjust_price(100, Regime::mip, 0, p), 100.0);
    EXPECT_DOUBLE_EQ(adjust_price(100, Regime::mip, 5, p), 97.95);
    const ImpactParams zero{0.0, 0.40, 0.41};
    EXPECT_EQ(adjust_price(100, Regime::mdp, 5, zero), 100.0);
}

TEST(AdjustPrice, LinearInPosition) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-5, 5), k(0, 1), b(0, 1);
    for (int i = 0; i < 1000; ++i) {
        const ImpactParams p{b(rng), k(rng), k(rng)};
        const double x = u(rng);
        EXPECT_NEAR(adjust_price(50, Regime::mdp, x, p), 50 - p.k_mdp * p.beta * x, 1e-12);
    }
}

TEST(RealizedPrice, RegimeFromShiftedImbalance) {
    const ImpactParams p{1.0, 0.40, 0.41};
    EXPECT_EQ(realized_settlement_price(10, 0, p, 30, 200), 30.0);
    EXPECT_DOUBLE_EQ(realized_settlement_price(-3, 5, p, 30, 200), 30 - 0.40 * 5);
    const ImpactParams none{0.0, 0.40, 0.41};
    EXPECT_EQ(realized_settlement_price(-3, 5, none, 30, 200), 200.0);
}

TEST(RealizedPrice, SwitchAtMinusSOverBeta) {
    const ImpactParams p{0.5, 0.3, 0.3};
    const double s = -2.0; // switch at u = 4
    EXPECT_EQ(regime_of(s + p.beta * 4.0), Regime::mdp);
    EXPECT_DOUBLE_EQ(realized_settlement_price(s, 4.0, p, 10, 100), 10 - 0.3 * 0.5 * 4);
    EXPECT_DOUBLE_EQ(realized_settlement_price(s, std::nextafter(4.0, 0.0), p, 10, 100),
                     100 - 0.3 * 0.5 * std::nextafter(4.0, 0.0));
}

TEST(ImpactParams, Validate) {
    EXPECT_THROW((ImpactParams{1.5, 0, 0}.validate()), std::invalid_argument);
    EXPECT_THROW((ImpactParams{0.5, NAN, 0}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((ImpactParams{0.5, 0.1, 0.1}.validate()));
}
