#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "imbalance/dists.hpp"

using namespace imbalance;

namespace {

DiscreteDistribution random_dist(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> v(lo, hi), m(0.01, 1.0);
    std::vector<Atom> atoms(n);
    double total = 0.0;
    for (auto& a : atoms) {
        a = {v(rng), m(rng)};
        total += a.mass;
    }
    for (auto& a : atoms) a.mass /= total;
    return DiscreteDistribution::from_atoms(atoms);
}

// Trapezoidal integral of (F(x) - H(x - y))^2 on a fine grid.
double crps_numeric(const DiscreteDistribution& d, double y, double step) {
    const double lo = std::min(d.min(), y) - 1.0;
    const double hi = std::max(d.max(), y) + 1.0;
    auto f = [&](double x) {
        const double h = x >= y ? 1.0 : 0.0;
        const double diff = d.cdf(x) - h;
        return diff * diff;
    };
    double sum = 0.0;
    double prev = f(lo);
    const auto n = static_cast<std::size_t>((hi - lo) / step);
    for (std::size_t i = 1; i <= n; ++i) {
        const double cur = f(lo + static_cast<double>(i) * step);
        sum += 0.5 * (prev + cur) * step;
        prev = cur;
    }
    return sum;
}

} // namespace

TEST(Distribution, CanonicalFormSortsAndMerges) {
    auto d = DiscreteDistribution::from_atoms({{3, 0.25}, {1, 0.25}, {3 + 1e-13, 0.5}});
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.atoms()[0].value, 1.0);
    EXPECT_DOUBLE_EQ(d.atoms()[1].mass, 0.75);
}

TEST(Distribution, RejectsBadMass) {
    EXPECT_THROW(DiscreteDistribution::from_atoms({{1, 0.5}, {2, 0.4}}), std::invalid_argument);
    EXPECT_THROW(DiscreteDistribution::from_atoms({{1, 1.5}, {2, -0.5}}), std::invalid_argument);
    EXPECT_THROW(DiscreteDistribution::from_atoms({{NAN, 1.0}}), std::invalid_argument);
}

TEST(Distribution, EmptyQueriesThrow) {
    DiscreteDistribution d;
    EXPECT_THROW((void)d.expectation(), std::logic_error);
    EXPECT_THROW((void)d.quantile(0.5), std::logic_error);
    EXPECT_THROW((void)d.max(), std::logic_error);
}

TEST(Distribution, Moments) {
    auto p = DiscreteDistribution::point_mass(42.0);
    EXPECT_EQ(p.expectation(), 42.0);
    EXPECT_EQ(p.stddev(), 0.0);
    const std::vector<double> v{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(DiscreteDistribution::uniform(v).expectation(), 2.5);
}

TEST(Distribution, QuantileLeftContinuous) {
    auto d = DiscreteDistribution::from_atoms({{0, 0.5}, {1, 0.5}});
    EXPECT_EQ(d.quantile(0.5), 0.0);
    EXPECT_EQ(d.quantile(0.51), 1.0);
    EXPECT_EQ(d.quantile(0.0), 0.0);
    EXPECT_EQ(d.quantile(1.0), 1.0);
    EXPECT_THROW((void)d.quantile(1.5), std::invalid_argument);
}

TEST(Distribution, QuantileMonotoneInTau) {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k) {
        auto d = random_dist(rng, 15, -100, 100);
        double prev = -INFINITY;
        for (int i = 0; i <= 200; ++i) {
            const double q = d.quantile(i / 200.0);
            EXPECT_GE(q, prev);
            prev = q;
        }
    }
}

TEST(Flatten, DegenerateWeights) {
    auto down = DiscreteDistribution::from_atoms({{-10, 0.3}, {5, 0.7}});
    auto up = DiscreteDistribution::point_mass(200);
    EXPECT_EQ(flatten({1.0, down, up}), down);
    EXPECT_EQ(flatten({0.0, down, up}), up);
}

TEST(Flatten, HalfMixture) {
    auto f = flatten({0.5, DiscreteDistribution::point_mass(-10), DiscreteDistribution::point_mass(200)});
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(f.atoms()[0].value, -10.0);
    EXPECT_EQ(f.atoms()[0].mass, 0.5);
    EXPECT_EQ(f.atoms()[1].value, 200.0);
    EXPECT_EQ(f.atoms()[1].mass, 0.5);
}

TEST(Flatten, AlwaysUnitMass) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pi(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        auto a = random_dist(rng, 1 + k % 30, -50, 300);
        auto b = random_dist(rng, 1 + (k * 7) % 30, -50, 300);
        auto f = flatten({pi(rng), a, b});
        EXPECT_NEAR(f.total_mass(), 1.0, 1e-9);
        for (std::size_t i = 1; i < f.size(); ++i) EXPECT_LT(f.atoms()[i - 1].value, f.atoms()[i].value);
    }
}

TEST(Flatten, RejectsInvalidWeight) {
    auto p = DiscreteDistribution::point_mass(1);
    EXPECT_THROW(flatten({1.5, p, p}), std::invalid_argument);
}

TEST(Reorder, SortsValues) {
    auto q = reorder({{0.25, 0.5, 0.75}, {1, 3, 2}});
    EXPECT_EQ(q.values, (std::vector<double>{1, 2, 3}));
    q = reorder({{0.25, 0.5, 0.75}, {5, 5, 1}});
    EXPECT_EQ(q.values, (std::vector<double>{1, 5, 5}));
    EXPECT_EQ(reorder(q).values, q.values);
}

TEST(Reorder, IdempotentAndMultisetPreserving) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> v(-5, 5);
    for (int k = 0; k < 100; ++k) {
        QuantileSet q{evenly_spaced_levels(20), {}};
        for (int i = 0; i < 20; ++i) q.values.push_back(v(rng));
        auto r = reorder(q);
        EXPECT_EQ(reorder(r).values, r.values);
        auto a = q.values;
        std::sort(a.begin(), a.end());
        EXPECT_EQ(a, r.values);
    }
}

TEST(Levels, EvenlySpaced) {
    auto l = evenly_spaced_levels(4);
    EXPECT_EQ(l, (std::vector<double>{0.125, 0.375, 0.625, 0.875}));
}

TEST(Crps, ClosedFormCases) {
    EXPECT_EQ(crps(DiscreteDistribution::point_mass(3), 3), 0.0);
    EXPECT_DOUBLE_EQ(crps(DiscreteDistribution::point_mass(3), 7.5), 4.5);
    EXPECT_DOUBLE_EQ(crps(DiscreteDistribution::point_mass(3), -1), 4.0);
    auto d = DiscreteDistribution::from_atoms({{0, 0.5}, {1, 0.5}});
    EXPECT_DOUBLE_EQ(crps(d, 0.0), 0.25);
    auto e = DiscreteDistribution::from_atoms({{0, 0.5}, {2, 0.5}});
    EXPECT_DOUBLE_EQ(crps(e, 1.0), 0.5);
}

TEST(Crps, PointMassIsAbsoluteError) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-500, 500);
    for (int k = 0; k < 1000; ++k) {
        const double a = u(rng), y = u(rng);
        EXPECT_NEAR(crps(DiscreteDistribution::point_mass(a), y), std::abs(a - y), 1e-9);
    }
}

TEST(Crps, MatchesTrapezoidalIntegration) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> y(-6, 6);
    for (int k = 0; k < 20; ++k) {
        auto d = random_dist(rng, 20, -5, 5);
        const double obs = y(rng);
        EXPECT_NEAR(crps(d, obs), crps_numeric(d, obs, 1e-3), 1e-3);
    }
}

TEST(ScoreBatch, PerfectForecasts) {
    std::vector<DiscreteDistribution> f{DiscreteDistribution::point_mass(1),
                                        DiscreteDistribution::point_mass(-4)};
    std::vector<double> y{1, -4};
    auto s = score_batch(f, y);
    EXPECT_EQ(s.rmse, 0.0);
    EXPECT_EQ(s.mae, 0.0);
    EXPECT_EQ(s.std, 0.0);
    EXPECT_EQ(s.crps, 0.0);
}

TEST(ScoreBatch, TwoAtomForecast) {
    std::vector<DiscreteDistribution> f{DiscreteDistribution::from_atoms({{0, 0.5}, {2, 0.5}})};
    std::vector<double> y{1};
    auto s = score_batch(f, y);
    EXPECT_DOUBLE_EQ(s.rmse, 0.0);
    EXPECT_DOUBLE_EQ(s.mae, 1.0); // median is the lower atom
    EXPECT_DOUBLE_EQ(s.std, 1.0);
    EXPECT_DOUBLE_EQ(s.crps, 0.5);
}

TEST(ScoreBatch, Errors) {
    std::vector<DiscreteDistribution> f{DiscreteDistribution::point_mass(1)};
    std::vector<double> y{1, 2};
    EXPECT_THROW(score_batch(f, y), std::invalid_argument);
    EXPECT_THROW(score_batch({}, {}), std::invalid_argument);
}
