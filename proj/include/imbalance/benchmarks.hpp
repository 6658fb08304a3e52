#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "imbalance/dists.hpp"
#include "imbalance/price_models.hpp"
#include "imbalance/regime.hpp"

namespace imbalance {

// ---------------------------------------------------------------------------
// Regime-switching Markov benchmarks

inline std::size_t state_index(Regime r) noexcept { return r == Regime::mdp ? 0 : 1; }

/// Row-stochastic transitions over {s >= 0, s < 0}; entry (i, j) is
/// P(next = j | current = i).
struct TransitionMatrix {
    std::array<std::array<double, 2>, 2> p{{{1.0, 0.0}, {0.0, 1.0}}};

    static TransitionMatrix from_stay(double stay_mdp, double stay_mip) {
        return {{{{stay_mdp, 1.0 - stay_mdp}, {1.0 - stay_mip, stay_mip}}}};
    }

    void validate() const {
        for (const auto& row : p) {
            if (!(row[0] >= 0.0 && row[0] <= 1.0 && row[1] >= 0.0 && row[1] <= 1.0) ||
                std::abs(row[0] + row[1] - 1.0) > 1e-12) {
                throw std::invalid_argument("transition rows must be probability vectors");
            }
        }
    }

    bool operator==(const TransitionMatrix&) const = default;
};

struct TransitionFit {
    TransitionMatrix matrix;
    std::vector<std::string> warnings;
};

/// Empirical transition frequencies between consecutive labels. A state
/// that is never left gets a uniform row and a warning.
inline TransitionFit fit_static_transitions(std::span<const Regime> labels) {
    if (labels.size() < 2) throw std::invalid_argument("need at least two consecutive regime labels");
    std::array<std::array<double, 2>, 2> counts{};
    for (std::size_t t = 0; t + 1 < labels.size(); ++t) {
        counts[state_index(labels[t])][state_index(labels[t + 1])] += 1.0;
    }
    TransitionFit fit;
    for (std::size_t i = 0; i < 2; ++i) {
        const double n = counts[i][0] + counts[i][1];
        if (n == 0.0) {
            fit.matrix.p[i] = {0.5, 0.5};
            fit.warnings.push_back(std::string("state ") + std::string(to_string(i == 0 ? Regime::mdp : Regime::mip)) +
                                   " never observed before a transition; using a uniform row");
        } else {
            fit.matrix.p[i] = {counts[i][0] / n, counts[i][1] / n};
        }
    }
    return fit;
}

/// Distribution over states after applying `steps` in order, starting from
/// the indicator of `current`.
inline std::array<double, 2> propagate(std::span<const TransitionMatrix> steps, Regime current) {
    std::array<double, 2> v{0.0, 0.0};
    v[state_index(current)] = 1.0;
    for (const auto& m : steps) {
        const std::array<double, 2> next{v[0] * m.p[0][0] + v[1] * m.p[1][0],
                                         v[0] * m.p[0][1] + v[1] * m.p[1][1]};
        v = next;
    }
    return v;
}

/// P(s >= 0) `horizon` steps ahead under a static chain: first entry of
/// e_current' T^horizon.
inline double rsmm_state_probability(const TransitionMatrix& t, Regime current, std::size_t horizon = 5) {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    const std::vector<TransitionMatrix> steps(horizon, t);
    return propagate(steps, current)[0];
}

/// Same with one transition matrix per step (dynamic chain).
inline double rsmm_state_probability(std::span<const TransitionMatrix> steps, Regime current) {
    if (steps.empty()) throw std::invalid_argument("horizon must be at least 1");
    return propagate(steps, current)[0];
}

/// Two logistic models, one per current state, each giving P(next state is
/// s >= 0) from the exogenous inputs of the next period.
struct DynamicTransitionModel {
    LogisticModel from_mdp;
    LogisticModel from_mip;

    [[nodiscard]] TransitionMatrix step(std::span<const double> x_next) const {
        const double a = from_mdp.predict(x_next);
        const double b = from_mip.predict(x_next);
        return {{{{a, 1.0 - a}, {b, 1.0 - b}}}};
    }

    /// State probability `horizon` steps after period t, using the inputs of
    /// periods t+1 .. t+horizon (rows of x).
    [[nodiscard]] double state_probability(const FeatureMatrix& x, std::size_t t, Regime current,
                                           std::size_t horizon = 5) const {
        if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
        if (t + horizon >= x.rows()) throw std::out_of_range("not enough future inputs for the horizon");
        std::vector<TransitionMatrix> steps;
        steps.reserve(horizon);
        for (std::size_t k = 1; k <= horizon; ++k) steps.push_back(step(x.row(t + k)));
        return rsmm_state_probability(steps, current);
    }
};

/// Fits the two per-state logistic models on consecutive pairs: row t+1 of x
/// and the label at t+1, split by the label at t.
inline DynamicTransitionModel fit_dynamic_transitions(const FeatureMatrix& x, std::span<const Regime> labels,
                                                      const LogisticFitOptions& opt = {}) {
    if (x.rows() != labels.size()) throw std::invalid_argument("feature/label count mismatch");
    if (labels.size() < 2) throw std::invalid_argument("need at least two consecutive regime labels");
    FeatureMatrix xs[2];
    std::vector<std::uint8_t> ys[2];
    for (std::size_t t = 0; t + 1 < labels.size(); ++t) {
        const std::size_t i = state_index(labels[t]);
        xs[i].push_row(x.row(t + 1));
        ys[i].push_back(labels[t + 1] == Regime::mdp ? 1 : 0);
    }
    LogisticModel fitted[2];
    for (std::size_t i = 0; i < 2; ++i) {
        if (ys[i].empty()) {
            throw std::invalid_argument(std::string("no transitions out of the ") +
                                        std::string(to_string(i == 0 ? Regime::mdp : Regime::mip)) + " state");
        }
        const auto n = static_cast<double>(ys[i].size());
        const auto pos = static_cast<double>(std::count(ys[i].begin(), ys[i].end(), std::uint8_t{1}));
        if (pos == 0.0 || pos == n) {
            // Never switched (or always switched): bias-only model at the
            // add-half frequency instead of an infinite logit.
            const double f = (pos + 0.5) / (n + 1.0);
            fitted[i].bias = std::log(f / (1.0 - f));
            fitted[i].weights.assign(x.cols(), 0.0);
        } else {
            fitted[i] = fit_logistic(xs[i], ys[i], opt).model;
        }
    }
    return {fitted[0], fitted[1]};
}

// ---------------------------------------------------------------------------
// Implicit benchmark: linear quantile regression of the imbalance price

struct LinearQuantileModel {
    double bias = 0.0;
    std::vector<double> weights;

    [[nodiscard]] double predict(std::span<const double> x) const {
        if (x.size() != weights.size()) throw std::invalid_argument("linear quantile model feature mismatch");
        return bias + dot(weights, x);
    }
};

struct LinearQuantileBank {
    std::vector<double> levels;
    std::vector<LinearQuantileModel> models;

    [[nodiscard]] bool trained() const noexcept { return !models.empty(); }
};

/// Mean residual loss of the linear model, params = (b, w).
inline double linear_quantile_objective(std::span<const double> params, const FeatureMatrix& x,
                                        std::span<const double> y, const ResidualLoss& loss_fn,
                                        std::span<double> grad) {
    const std::size_t p = x.cols();
    if (params.size() != p + 1) throw std::invalid_argument("linear quantile parameter size mismatch");
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    double total = 0.0;
    const auto w = params.subspan(1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        const auto [l, dl_de] = loss_fn(y[i] - params[0] - dot(w, row));
        total += l;
        if (want_grad) {
            grad[0] -= dl_de;
            for (std::size_t j = 0; j < p; ++j) grad[j + 1] -= dl_de * row[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(x.rows());
    if (want_grad) {
        for (double& g : grad) g *= inv;
    }
    return total * inv;
}

/// One linear model per quantile level, fitted with the same least-squares
/// start and smoothed pinball continuation as the softmax banks.
inline LinearQuantileBank fit_linear_quantile_bank(const FeatureMatrix& x, std::span<const double> price,
                                                   std::size_t n_quantiles, const QuantileFitOptions& opt = {}) {
    if (x.rows() == 0) throw std::invalid_argument("no training rows for the linear quantile model");
    if (x.rows() != price.size()) throw std::invalid_argument("feature/price count mismatch");
    if (n_quantiles < 2) throw std::invalid_argument("a quantile bank needs n_q >= 2");
    const Standardizer st = Standardizer::fit(x);
    const FeatureMatrix xs = st.apply(x);
    const std::size_t p = x.cols();
    std::vector<double> none;

    const ResidualLoss squared{ResidualLoss::Kind::squared, 0.5, 1.0};
    auto ls = [&](std::span<const double> q, std::span<double> g) {
        return linear_quantile_objective(q, xs, price, squared, g);
    };
    const std::vector<double> start = minimize(ls, std::vector<double>(p + 1, 0.0), opt.warm_start).params;
    const ResidualLoss median{ResidualLoss::Kind::pinball, 0.5, 1.0};
    const double mean_abs = 2.0 * linear_quantile_objective(start, xs, price, median, none);

    LinearQuantileBank bank;
    bank.levels = evenly_spaced_levels(n_quantiles);
    for (double tau : bank.levels) {
        std::vector<double> params = start;
        const double tail = std::abs(std::log(tau / (1.0 - tau)));
        double width = opt.initial_width_ratio * mean_abs / (1.0 + tail);
        const double final_width = width * opt.final_width_ratio;
        while (width > 0.0 && width >= final_width) {
            const ResidualLoss smooth{ResidualLoss::Kind::smoothed_pinball, tau, width};
            auto obj = [&](std::span<const double> q, std::span<double> g) {
                return linear_quantile_objective(q, xs, price, smooth, g);
            };
            params = minimize(obj, std::move(params), opt.stage).params;
            width *= opt.width_factor;
        }
        LinearQuantileModel m{params[0], std::vector<double>(p)};
        for (std::size_t j = 0; j < p; ++j) {
            m.weights[j] = params[j + 1] / st.scale[j];
            m.bias -= m.weights[j] * st.mean[j];
        }
        bank.models.push_back(std::move(m));
    }
    return bank;
}

/// n_q equal-mass atoms at the reordered linear quantile predictions.
inline DiscreteDistribution linear_quantile_forecast(const LinearQuantileBank& bank, std::span<const double> x) {
    if (!bank.trained()) throw std::logic_error("linear quantile bank is not trained");
    QuantileSet q{bank.levels, {}};
    for (const auto& m : bank.models) q.values.push_back(m.predict(x));
    return DiscreteDistribution::uniform(reorder(std::move(q)).values);
}

// ---------------------------------------------------------------------------
// Metric table

/// Forecasts of one model over a test split.
struct ModelForecasts {
    std::string name;
    std::string split; ///< identifies the evaluation range, e.g. "2024-01-01/2024-02-01"
    std::vector<DiscreteDistribution> forecasts;
};

struct BenchmarkRow {
    std::string model;
    ForecastScores scores;
};

struct BenchmarkTable {
    std::string split;
    std::vector<BenchmarkRow> rows;

    [[nodiscard]] std::string to_csv() const {
        std::ostringstream os;
        os << "model,rmse,mae,std,crps\n";
        os << std::setprecision(17);
        for (const auto& r : rows) {
            os << r.model << ',' << r.scores.rmse << ',' << r.scores.mae << ',' << r.scores.std << ','
               << r.scores.crps << '\n';
        }
        return os.str();
    }

    [[nodiscard]] std::string to_text() const {
        std::size_t width = 5;
        for (const auto& r : rows) width = std::max(width, r.model.size());
        std::ostringstream os;
        os << std::left << std::setw(static_cast<int>(width)) << "model" << std::right;
        for (const char* h : {"RMSE", "MAE", "Std", "CRPS"}) os << std::setw(10) << h;
        os << '\n' << std::fixed << std::setprecision(2);
        for (const auto& r : rows) {
            os << std::left << std::setw(static_cast<int>(width)) << r.model << std::right << std::setw(10)
               << r.scores.rmse << std::setw(10) << r.scores.mae << std::setw(10) << r.scores.std << std::setw(10)
               << r.scores.crps << '\n';
        }
        return os.str();
    }
};

/// Scores every model against the same observations, rows in input order.
inline BenchmarkTable run_benchmark(std::span<const ModelForecasts> models, std::span<const double> observed) {
    if (models.empty()) throw std::invalid_argument("no models to benchmark");
    BenchmarkTable table;
    table.split = models.front().split;
    for (const auto& m : models) {
        if (m.split != table.split || m.forecasts.size() != observed.size()) {
            throw std::invalid_argument("model " + m.name + " was not evaluated on the benchmark split");
        }
        table.rows.push_back({m.name, score_batch(m.forecasts, observed)});
    }
    return table;
}

} // namespace imbalance
