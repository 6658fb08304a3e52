#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "imbalance/benchmarks.hpp"

using namespace imbalance;

namespace {

// Independent oracle: explicit 2x2 matrix product.
using M2 = std::array<std::array<double, 2>, 2>;
M2 matmul(const M2& a, const M2& b) {
    M2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return c;
}

} // namespace

TEST(StaticTransitions, Alternating) {
    std::vector<Regime> l;
    for (int i = 0; i < 20; ++i) l.push_back(i % 2 ? Regime::mip : Regime::mdp);
    auto f = fit_static_transitions(l);
    EXPECT_EQ(f.matrix.p[0][1], 1.0);
    EXPECT_EQ(f.matrix.p[1][0], 1.0);
    EXPECT_TRUE(f.warnings.empty());
}

TEST(StaticTransitions, ConstantSequenceWarnsForUnvisitedState) {
    std::vector<Regime> l(10, Regime::mdp);
    auto f = fit_static_transitions(l);
    EXPECT_EQ(f.matrix.p[0][0], 1.0);
    EXPECT_EQ(f.matrix.p[0][1], 0.0);
    EXPECT_EQ(f.matrix.p[1][0], 0.5);
    ASSERT_EQ(f.warnings.size(), 1u);
    EXPECT_THROW(fit_static_transitions(std::vector<Regime>{Regime::mdp}), std::invalid_argument);
}

TEST(StaticTransitions, IidLabelsConverge) {
    std::mt19937_64 rng(1);
    std::bernoulli_distribution b(0.7);
    std::vector<Regime> l(100000);
    for (auto& r : l) r = b(rng) ? Regime::mdp : Regime::mip;
    auto f = fit_static_transitions(l);
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(f.matrix.p[i][0], 0.7, 0.02);
        EXPECT_NEAR(f.matrix.p[i][1], 0.3, 0.02);
    }
}

TEST(Rsmm, IdentityKeepsState) {
    TransitionMatrix id;
    for (std::size_t h : {1u, 5u, 40u}) {
        EXPECT_EQ(rsmm_state_probability(id, Regime::mdp, h), 1.0);
        EXPECT_EQ(rsmm_state_probability(id, Regime::mip, h), 0.0);
    }
    EXPECT_THROW(rsmm_state_probability(id, Regime::mdp, 0), std::invalid_argument);
}

TEST(Rsmm, MatchesMatrixPower) {
    const auto t = TransitionMatrix::from_stay(0.9, 0.8);
    M2 p = t.p;
    for (int k = 1; k < 5; ++k) p = matmul(p, t.p);
    EXPECT_NEAR(rsmm_state_probability(t, Regime::mdp, 5), p[0][0], 1e-15);
    EXPECT_NEAR(rsmm_state_probability(t, Regime::mip, 5), p[1][0], 1e-15);
}

TEST(Rsmm, ConvergesToStationary) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int k = 0; k < 20; ++k) {
        const double a = u(rng), b = u(rng);
        const auto t = TransitionMatrix::from_stay(a, b);
        // Left eigenvector for eigenvalue 1 of [[a, 1-a], [1-b, b]].
        const double stationary = (1 - b) / ((1 - a) + (1 - b));
        EXPECT_NEAR(rsmm_state_probability(t, Regime::mdp, 200), stationary, 1e-6);
        EXPECT_NEAR(rsmm_state_probability(t, Regime::mip, 200), stationary, 1e-6);
    }
}

TEST(Rsmm, PowersStayRowStochastic) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 100; ++k) {
        const auto t = TransitionMatrix::from_stay(u(rng), u(rng));
        for (auto r : {Regime::mdp, Regime::mip}) {
            const std::vector<TransitionMatrix> steps(5, t);
            const auto v = propagate(steps, r);
            EXPECT_NEAR(v[0] + v[1], 1.0, 1e-12);
        }
    }
}

TEST(Rsmm, DynamicWithConstantInputsEqualsStatic) {
    DynamicTransitionModel dyn;
    dyn.from_mdp.bias = 1.3;
    dyn.from_mdp.weights = {0.4, -0.2};
    dyn.from_mip.bias = -0.7;
    dyn.from_mip.weights = {0.1, 0.5};
    FeatureMatrix x;
    for (int t = 0; t < 10; ++t) x.push_row(std::vector<double>{0.3, -1.2});
    const TransitionMatrix matched = dyn.step(x.row(0));
    EXPECT_NO_THROW(matched.validate());
    for (auto r : {Regime::mdp, Regime::mip}) {
        EXPECT_EQ(dyn.state_probability(x, 2, r, 5), rsmm_state_probability(matched, r, 5));
    }
    EXPECT_THROW((void)dyn.state_probability(x, 6, Regime::mdp, 5), std::out_of_range);
}

TEST(Rsmm, DynamicFitRecoversInputDependence) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> u(0, 1);
    const std::size_t len = 20000;
    FeatureMatrix x(len, 1);
    std::vector<Regime> l(len, Regime::mdp);
    for (std::size_t t = 0; t < len; ++t) x(t, 0) = n(rng);
    for (std::size_t t = 1; t < len; ++t) {
        const double eta = (l[t - 1] == Regime::mdp ? 1.0 : -1.0) + 1.5 * x(t, 0);
        l[t] = u(rng) < sigmoid(eta) ? Regime::mdp : Regime::mip;
    }
    auto dyn = fit_dynamic_transitions(x, l);
    EXPECT_NEAR(dyn.from_mdp.bias, 1.0, 0.1);
    EXPECT_NEAR(dyn.from_mip.bias, -1.0, 0.1);
    EXPECT_NEAR(dyn.from_mdp.weights[0], 1.5, 0.15);
    EXPECT_NEAR(dyn.from_mip.weights[0], 1.5, 0.15);
}

TEST(Rsmm, DynamicFitHandlesStateThatNeverSwitches) {
    FeatureMatrix x(6, 1);
    std::vector<Regime> l{Regime::mdp, Regime::mdp, Regime::mdp, Regime::mip, Regime::mdp, Regime::mdp};
    for (std::size_t t = 0; t < 6; ++t) x(t, 0) = static_cast<double>(t);
    auto dyn = fit_dynamic_transitions(x, l);
    EXPECT_GT(dyn.from_mip.predict(x.row(0)), 0.5); // the only exit from mip went to mdp
}

TEST(LinearQuantile, PlantedLinearRecovery) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 1);
    const std::size_t len = 2000;
    FeatureMatrix x(len, 3);
    std::vector<double> y(len);
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = n(rng) * (1.0 + j);
        y[i] = 40.0 + 3.0 * x(i, 0) - 2.0 * x(i, 1) + 0.5 * x(i, 2);
    }
    auto bank = fit_linear_quantile_bank(x, y, 5);
    for (std::size_t k = 0; k < bank.models.size(); ++k) {
        double loss = 0.0;
        for (std::size_t i = 0; i < len; ++i) loss += pinball_loss(bank.levels[k], y[i] - bank.models[k].predict(x.row(i)));
        EXPECT_LE(loss / len, 1e-3);
        EXPECT_NEAR(bank.models[k].weights[0], 3.0, 1e-3);
    }
}

TEST(LinearQuantile, ConstantTargetAndUntrained) {
    FeatureMatrix x(50, 1);
    for (std::size_t i = 0; i < 50; ++i) x(i, 0) = static_cast<double>(i);
    std::vector<double> y(50, 42.0);
    auto bank = fit_linear_quantile_bank(x, y, 4);
    auto d = linear_quantile_forecast(bank, std::vector<double>{7.0});
    EXPECT_NEAR(d.min(), 42.0, 1e-6);
    EXPECT_NEAR(d.max(), 42.0, 1e-6);
    EXPECT_THROW(linear_quantile_forecast(LinearQuantileBank{}, std::vector<double>{1.0}), std::logic_error);
}

TEST(LinearQuantile, HeteroskedasticQuantiles) {
    // y = x + x * e, e ~ U(-1, 1): conditional tau-quantile x (2 tau).
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ux(1, 3), ue(-1, 1);
    const std::size_t len = 20000;
    FeatureMatrix x(len, 1);
    std::vector<double> y(len);
    for (std::size_t i = 0; i < len; ++i) {
        x(i, 0) = ux(rng);
        y[i] = x(i, 0) * (1.0 + ue(rng));
    }
    auto bank = fit_linear_quantile_bank(x, y, 4); // levels .125 .375 .625 .875
    for (std::size_t k = 0; k < 4; ++k) {
        const double tau = bank.levels[k];
        EXPECT_NEAR(bank.models[k].predict(std::vector<double>{2.0}), 2.0 * 2.0 * tau, 0.05 * 4.0 * tau);
    }
}

TEST(Benchmark, TableShapeAndIdentity) {
    std::vector<double> obs{10, 20, 30};
    std::vector<DiscreteDistribution> f;
    for (double o : obs) f.push_back(DiscreteDistribution::uniform(std::vector<double>{o - 5, o + 5}));
    std::vector<ModelForecasts> models{{"a", "s", f}, {"b", "s", f}, {"c", "s", f}, {"d", "s", f}};
    auto t = run_benchmark(models, obs);
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_EQ(t.rows[0].model, "a");
    EXPECT_EQ(t.rows[3].model, "d");
    EXPECT_EQ(t.rows[0].scores.crps, t.rows[1].scores.crps);
    EXPECT_EQ(t.rows[0].scores.rmse, t.rows[2].scores.rmse);
    const auto ref = score_batch(f, obs);
    EXPECT_EQ(t.rows[0].scores.mae, ref.mae);
    const auto csv = t.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,rmse,mae,std,crps");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    const auto text = t.to_text();
    EXPECT_NE(text.find("CRPS"), std::string::npos);
    EXPECT_EQ(t.to_csv(), run_benchmark(models, obs).to_csv());
}

TEST(Benchmark, SplitMismatch) {
    std::vector<double> obs{10, 20};
    std::vector<DiscreteDistribution> f(2, DiscreteDistribution::point_mass(15));
    std::vector<ModelForecasts> bad{{"a", "s1", f}, {"b", "s2", f}};
    EXPECT_THROW(run_benchmark(bad, obs), std::invalid_argument);
    std::vector<ModelForecasts> short_split{{"a", "s", f}, {"b", "s", {f[0]}}};
    EXPECT_THROW(run_benchmark(short_split, obs), std::invalid_argument);
}

TEST(Benchmark, MixtureBeatsStaticRsmmWithInputDrivenRegime) {
    // Regime depends on an observed input; prices are bimodal by regime.
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> u(0, 1);
    const std::size_t len = 6000;
    FeatureMatrix x(len, 1);
    std::vector<Regime> l(len);
    std::vector<double> price(len);
    for (std::size_t t = 0; t < len; ++t) {
        x(t, 0) = n(rng);
        l[t] = u(rng) < sigmoid(0.3 + 2.0 * x(t, 0)) ? Regime::mdp : Regime::mip;
        price[t] = l[t] == Regime::mdp ? 40.0 + 10.0 * n(rng) : 160.0 + 20.0 * n(rng);
    }
    const std::size_t split = 4000;
    FeatureMatrix xtr(split, 1);
    std::vector<std::uint8_t> ytr(split);
    for (std::size_t t = 0; t < split; ++t) {
        xtr(t, 0) = x(t, 0);
        ytr[t] = l[t] == Regime::mdp;
    }
    const auto weight = fit_logistic(xtr, ytr).model;
    const auto trans = fit_static_transitions(std::span<const Regime>(l).first(split)).matrix;
    std::vector<double> down_q, up_q;
    for (int i = 0; i < 20; ++i) {
        down_q.push_back(40.0 + 10.0 * (i - 9.5) / 5.0);
        up_q.push_back(160.0 + 20.0 * (i - 9.5) / 5.0);
    }
    const auto down = DiscreteDistribution::uniform(down_q), up = DiscreteDistribution::uniform(up_q);
    ModelForecasts mix{"mixture", "test", {}}, rsmm{"static_rsmm", "test", {}};
    std::vector<double> obs;
    for (std::size_t t = split; t + 5 < len; ++t) {
        const std::size_t target = t + 5;
        mix.forecasts.push_back(flatten({weight.predict(x.row(target)), down, up}));
        rsmm.forecasts.push_back(flatten({rsmm_state_probability(trans, l[t], 5), down, up}));
        obs.push_back(price[target]);
    }
    std::vector<ModelForecasts> models{rsmm, mix};
    const auto table = run_benchmark(models, obs);
    EXPECT_LE(table.rows[1].scores.crps, table.rows[0].scores.crps);
}
