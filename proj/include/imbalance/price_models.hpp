#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "imbalance/dists.hpp"
#include "imbalance/market_impact.hpp"
#include "imbalance/optimize.hpp"
#include "imbalance/regime.hpp"

namespace imbalance {

using FeatureVector = std::vector<double>;

/// Dense row-major matrix of feature rows.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    static FeatureMatrix from_rows(std::span<const FeatureVector> rows) {
        const std::size_t cols = rows.empty() ? 0 : rows.front().size();
        FeatureMatrix m(rows.size(), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols) throw std::invalid_argument("feature rows differ in length");
            std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
        }
        return m;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    void push_row(std::span<const double> r) {
        if (rows_ == 0 && data_.empty()) cols_ = r.size();
        if (r.size() != cols_) throw std::invalid_argument("feature row has the wrong length");
        data_.insert(data_.end(), r.begin(), r.end());
        ++rows_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Per-column affine map to zero mean and unit variance. Constant columns
/// keep scale 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const FeatureMatrix& x) {
        Standardizer s;
        s.mean.assign(x.cols(), 0.0);
        s.scale.assign(x.cols(), 1.0);
        if (x.rows() == 0) return s;
        const double n = static_cast<double>(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) s.mean[j] += x(i, j);
        }
        for (double& m : s.mean) m /= n;
        std::vector<double> var(x.cols(), 0.0);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                const double d = x(i, j) - s.mean[j];
                var[j] += d * d;
            }
        }
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double sd = std::sqrt(var[j] / n);
            s.scale[j] = sd > 1e-12 ? sd : 1.0;
        }
        return s;
    }

    [[nodiscard]] FeatureMatrix apply(const FeatureMatrix& x) const {
        FeatureMatrix out(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
        }
        return out;
    }
};

inline double sigmoid(double eta) noexcept {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

/// log(1 + exp(eta)) without overflow.
inline double softplus(double eta) noexcept {
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// ---------------------------------------------------------------------------
// Mixture weight: logistic regression

/// pi(x) = sigma(w' x + w0), weights in the units of the raw features.
struct LogisticModel {
    double bias = 0.0;
    std::vector<double> weights;
    /// Column of the trade-position feature u in position-aware models.
    std::optional<std::size_t> position_weight_index;

    [[nodiscard]] double linear_predictor(std::span<const double> x) const {
        if (x.size() != weights.size()) {
            throw std::invalid_argument("logistic model expects " + std::to_string(weights.size()) +
                                        " features, got " + std::to_string(x.size()));
        }
        return dot(weights, x) + bias;
    }

    [[nodiscard]] double predict(std::span<const double> x) const {
        return sigmoid(linear_predictor(x));
    }

    /// w_u in MW^-1; zero for models without a position feature.
    [[nodiscard]] double position_weight() const {
        return position_weight_index ? weights.at(*position_weight_index) : 0.0;
    }
};

inline double sigmoid_predict(const LogisticModel& m, std::span<const double> x) {
    return m.predict(x);
}

/// Mean negative log-likelihood plus (l2/2)|w|^2 (bias unpenalized).
/// params = (w0, w_1..w_n); writes the gradient into grad when non-empty.
inline double logistic_objective(std::span<const double> params, const FeatureMatrix& x,
                                 std::span<const std::uint8_t> labels, double l2,
                                 std::span<double> grad) {
    const std::size_t p = x.cols();
    const std::size_t n = x.rows();
    if (params.size() != p + 1) throw std::invalid_argument("logistic parameter size mismatch");
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    double nll = 0.0;
    const auto w = params.subspan(1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        const double eta = params[0] + dot(w, row);
        const double y = labels[i] ? 1.0 : 0.0;
        nll += softplus(eta) - y * eta;
        if (want_grad) {
            const double r = sigmoid(eta) - y;
            grad[0] += r;
            for (std::size_t j = 0; j < p; ++j) grad[j + 1] += r * row[j];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double value = nll * inv_n;
    for (std::size_t j = 0; j < p; ++j) value += 0.5 * l2 * w[j] * w[j];
    if (want_grad) {
        for (double& g : grad) g *= inv_n;
        for (std::size_t j = 0; j < p; ++j) grad[j + 1] += l2 * w[j];
    }
    return value;
}

struct LogisticFitOptions {
    double l2 = 1e-4;
    DescentOptions descent{1e-6, 3000};
};

struct LogisticFit {
    LogisticModel model;
    DescentResult diagnostics;
};

/// Maximum-likelihood logistic regression on standardized features, folded
/// back to raw-feature weights. Throws when only one label is present.
inline LogisticFit fit_logistic(const FeatureMatrix& x, std::span<const std::uint8_t> labels,
                                const LogisticFitOptions& opt = {}) {
    if (x.rows() != labels.size()) throw std::invalid_argument("feature/label count mismatch");
    std::size_t positives = 0;
    for (auto l : labels) positives += l ? 1 : 0;
    if (positives == 0 || positives == labels.size()) {
        throw std::invalid_argument("degenerate training data: only one label present");
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (double v : x.row(i)) {
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
        }
    }
    const Standardizer st = Standardizer::fit(x);
    const FeatureMatrix xs = st.apply(x);
    auto obj = [&](std::span<const double> p, std::span<double> g) {
        return logistic_objective(p, xs, labels, opt.l2, g);
    };
    std::vector<double> start(x.cols() + 1, 0.0);
    const double base = static_cast<double>(positives) / static_cast<double>(labels.size());
    start[0] = std::log(base / (1.0 - base));
    LogisticFit fit;
    fit.diagnostics = minimize(obj, std::move(start), opt.descent);
    const auto& p = fit.diagnostics.params;
    fit.model.weights.resize(x.cols());
    fit.model.bias = p[0];
    for (std::size_t j = 0; j < x.cols(); ++j) {
        fit.model.weights[j] = p[j + 1] / st.scale[j];
        fit.model.bias -= p[j + 1] * st.mean[j] / st.scale[j];
    }
    return fit;
}

/// Artificial trade positions for training the position-aware weight model.
struct PositionAugmentation {
    double u_min = 0.0;
    double u_max = 5.0;
    double beta = 1.0;
    std::uint64_t seed = 1;
};

struct LabeledData {
    FeatureMatrix x;
    std::vector<std::uint8_t> labels;
};

/// Appends u ~ Uniform[u_min, u_max] to each row and relabels it as
/// 1{s_t > -beta * u}.
inline LabeledData augment_with_positions(const FeatureMatrix& x,
                                          std::span<const double> imbalance_mw,
                                          const PositionAugmentation& aug) {
    if (!(aug.u_max > 0.0)) throw std::invalid_argument("u_max must be positive");
    if (!(aug.u_min <= aug.u_max)) throw std::invalid_argument("u_min exceeds u_max");
    if (x.rows() != imbalance_mw.size()) throw std::invalid_argument("row count mismatch");
    std::mt19937_64 rng(aug.seed);
    std::uniform_real_distribution<double> draw(aug.u_min, aug.u_max);
    LabeledData out{FeatureMatrix(x.rows(), x.cols() + 1), std::vector<std::uint8_t>(x.rows())};
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto src = x.row(i);
        auto dst = out.x.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
        const double u = draw(rng);
        dst[x.cols()] = u;
        out.labels[i] = imbalance_mw[i] > -aug.beta * u ? 1 : 0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regulation price: softmax over reserve volumes

/// Discretized reserve volumes; prices are indexed aFRR first, then mFRR.
struct ReserveGrid {
    std::vector<double> afrr_volumes;
    std::vector<double> mfrr_volumes;

    [[nodiscard]] std::size_t size() const noexcept {
        return afrr_volumes.size() + mfrr_volumes.size();
    }

    void validate() const {
        for (const auto* v : {&afrr_volumes, &mfrr_volumes}) {
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!((*v)[i] > 0.0) || (i > 0 && !((*v)[i] > (*v)[i - 1]))) {
                    throw std::invalid_argument("reserve volumes must be positive and increasing");
                }
            }
        }
    }

    /// Belgian aFRR/mFRR discretization in MW.
    static ReserveGrid belgian() {
        return {{1, 50, 100, 150, 200}, {1, 100, 200, 300, 500, 700}};
    }
};

/// Linear logits followed by a softmax over the reserve grid.
struct SoftmaxPriceModel {
    std::size_t outputs = 0;
    std::size_t features = 0;
    std::vector<double> weights; ///< outputs x features, row-major
    std::vector<double> biases;  ///< per output

    static SoftmaxPriceModel zeros(std::size_t outputs, std::size_t features) {
        return {outputs, features, std::vector<double>(outputs * features, 0.0),
                std::vector<double>(outputs, 0.0)};
    }

    void logits(std::span<const double> z, std::span<double> out) const {
        if (z.size() != features) throw std::invalid_argument("softmax model feature mismatch");
        for (std::size_t k = 0; k < outputs; ++k) {
            out[k] = biases[k] + dot(std::span<const double>(weights).subspan(k * features, features), z);
        }
    }
};

/// In-place, max-subtracted softmax.
inline void softmax_inplace(std::span<double> v) noexcept {
    const double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double& x : v) {
        x = std::exp(x - m);
        s += x;
    }
    for (double& x : v) x /= s;
}

inline std::vector<double> softmax_weights(const SoftmaxPriceModel& m, std::span<const double> z) {
    std::vector<double> w(m.outputs);
    m.logits(z, w);
    softmax_inplace(w);
    return w;
}

/// <w(z), o>: expected price of the activated reserve.
inline double expected_reserve_price(const SoftmaxPriceModel& m, std::span<const double> z,
                                     std::span<const double> reserve_prices) {
    if (reserve_prices.size() != m.outputs) {
        throw std::invalid_argument("reserve price vector does not match the reserve grid");
    }
    const auto w = softmax_weights(m, z);
    return dot(w, reserve_prices);
}

inline double pinball_loss(double tau, double e) noexcept {
    return e >= 0.0 ? tau * e : (tau - 1.0) * e;
}

/// Subgradient of the pinball loss, tau at the kink.
inline double pinball_slope(double tau, double e) noexcept { return e >= 0.0 ? tau : tau - 1.0; }

/// Training rows for one regime's quantile bank.
struct QuantileBankData {
    FeatureMatrix z;      ///< price-model inputs
    FeatureMatrix o;      ///< reserve prices, one row per period
    std::vector<double> price; ///< observed regulation price

    [[nodiscard]] std::size_t size() const noexcept { return price.size(); }
};

/// Loss applied to the residual e = price - <w, o> by the price objective.
struct ResidualLoss {
    enum class Kind { squared, pinball, smoothed_pinball };
    Kind kind = Kind::pinball;
    double tau = 0.5;
    /// Width of the softplus smoothing; only used by smoothed_pinball.
    double width = 1.0;

    /// Loss value and its derivative with respect to e.
    [[nodiscard]] std::pair<double, double> operator()(double e) const noexcept {
        switch (kind) {
        case Kind::squared:
            return {0.5 * e * e, e};
        case Kind::smoothed_pinball:
            // (tau - 1) e + width * log(1 + exp(e / width)) -> pinball as width -> 0
            return {(tau - 1.0) * e + width * softplus(e / width), tau - 1.0 + sigmoid(e / width)};
        case Kind::pinball:
        default:
            return {pinball_loss(tau, e), pinball_slope(tau, e)};
        }
    }
};

/// Mean residual loss of <softmax(W z + b), o> against the observed prices.
/// params = (W row-major, b). Writes the (sub)gradient into grad when non-empty.
inline double softmax_price_objective(std::span<const double> params, const QuantileBankData& d,
                                      const ResidualLoss& loss_fn, std::span<double> grad) {
    const std::size_t r = d.o.cols();
    const std::size_t f = d.z.cols();
    if (params.size() != r * (f + 1)) throw std::invalid_argument("softmax parameter size mismatch");
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> w(r);
    double loss = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto z = d.z.row(i);
        const auto o = d.o.row(i);
        for (std::size_t k = 0; k < r; ++k) {
            w[k] = params[r * f + k] + dot(params.subspan(k * f, f), z);
        }
        softmax_inplace(w);
        const double g = dot(w, o);
        const auto [l, dl_de] = loss_fn(d.price[i] - g);
        loss += l;
        if (want_grad) {
            const double dl_dg = -dl_de;
            for (std::size_t k = 0; k < r; ++k) {
                const double dl_dlogit = dl_dg * w[k] * (o[k] - g);
                for (std::size_t j = 0; j < f; ++j) grad[k * f + j] += dl_dlogit * z[j];
                grad[r * f + k] += dl_dlogit;
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(d.size());
    if (want_grad) {
        for (double& g : grad) g *= inv_n;
    }
    return loss * inv_n;
}

/// Mean pinball loss of the softmax price model at level tau.
inline double softmax_pinball_objective(std::span<const double> params, const QuantileBankData& d,
                                        double tau, std::span<double> grad) {
    return softmax_price_objective(params, d, {ResidualLoss::Kind::pinball, tau, 1.0}, grad);
}

/// n_q softmax price models, one per evenly spaced quantile level.
struct QuantileModelBank {
    Regime regime = Regime::mdp;
    std::vector<double> levels;
    std::vector<SoftmaxPriceModel> models;

    [[nodiscard]] std::size_t n_quantiles() const noexcept { return models.size(); }
    [[nodiscard]] bool trained() const noexcept { return !models.empty(); }

    /// Raw model outputs g_i(z, o), possibly crossed.
    [[nodiscard]] std::vector<double> raw_quantiles(std::span<const double> z,
                                                    std::span<const double> o) const {
        std::vector<double> out;
        out.reserve(models.size());
        for (const auto& m : models) out.push_back(expected_reserve_price(m, z, o));
        return out;
    }
};

/// Quantile fitting runs in two phases. A least-squares fit of the same
/// softmax model gives the shared starting point; each level then minimizes
/// a softplus-smoothed pinball loss whose width shrinks geometrically from a
/// fraction of the starting mean absolute residual to nearly zero.
struct QuantileFitOptions {
    DescentOptions warm_start{1e-10, 1500};
    DescentOptions stage{1e-12, 50};
    /// First width relative to the start's mean absolute residual, before
    /// the per-level tail correction.
    double initial_width_ratio = 0.25;
    /// Smoothing widths run from w0 down to w0 * final_width_ratio.
    double final_width_ratio = 1e-5;
    double width_factor = 0.1;
};

struct QuantileBankFit {
    QuantileModelBank bank;
    std::vector<double> final_loss; ///< mean pinball loss per level
};

namespace detail {

inline SoftmaxPriceModel unpack_softmax(std::span<const double> p, std::size_t r, std::size_t f) {
    SoftmaxPriceModel m = SoftmaxPriceModel::zeros(r, f);
    std::copy_n(p.begin(), r * f, m.weights.begin());
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(r * f), r, m.biases.begin());
    return m;
}

} // namespace detail

/// Least-squares fit of the softmax price model (conditional-mean model).
inline std::vector<double> fit_softmax_mean(const QuantileBankData& d, const DescentOptions& opt) {
    const std::size_t n_params = d.o.cols() * (d.z.cols() + 1);
    const ResidualLoss squared{ResidualLoss::Kind::squared, 0.5, 1.0};
    auto obj = [&](std::span<const double> p, std::span<double> g) {
        return softmax_price_objective(p, d, squared, g);
    };
    return minimize(obj, std::vector<double>(n_params, 0.0), opt).params;
}

/// Minimizes the pinball loss at level tau starting from `start`.
inline std::vector<double> fit_softmax_quantile(const QuantileBankData& d, double tau,
                                                std::vector<double> start,
                                                const QuantileFitOptions& opt) {
    std::vector<double> none;
    // The smoothed minimizer sits about width * |logit(tau)| away from the
    // quantile; keeping that offset below the residual scale stops the first
    // stage from pushing the softmax into saturation.
    const double tail = std::abs(std::log(tau / (1.0 - tau)));
    double width = opt.initial_width_ratio * 2.0 * softmax_pinball_objective(start, d, 0.5, none) /
                   (1.0 + tail);
    const double final_width = width * opt.final_width_ratio;
    while (width > 0.0 && width >= final_width) {
        const ResidualLoss smooth{ResidualLoss::Kind::smoothed_pinball, tau, width};
        auto obj = [&](std::span<const double> p, std::span<double> g) {
            return softmax_price_objective(p, d, smooth, g);
        };
        start = minimize(obj, std::move(start), opt.stage).params;
        width *= opt.width_factor;
    }
    return start;
}

/// Fits one softmax quantile model per level on standardized inputs and
/// folds the standardization back into the weights. Levels are fitted
/// independently from the same least-squares starting point.
inline QuantileBankFit fit_quantile_bank(const QuantileBankData& data, Regime regime,
                                         std::size_t n_quantiles,
                                         const QuantileFitOptions& opt = {}) {
    if (data.size() == 0) {
        throw std::invalid_argument(std::string("no training rows for the ") +
                                    std::string(to_string(regime)) + " regime");
    }
    if (n_quantiles < 2) throw std::invalid_argument("a quantile bank needs n_q >= 2");
    if (data.o.rows() != data.size() || data.z.rows() != data.size()) {
        throw std::invalid_argument("quantile bank data row counts differ");
    }
    const std::size_t r = data.o.cols();
    const std::size_t f = data.z.cols();
    const Standardizer st = Standardizer::fit(data.z);
    QuantileBankData scaled{st.apply(data.z), data.o, data.price};
    const std::vector<double> start = fit_softmax_mean(scaled, opt.warm_start);

    QuantileBankFit fit;
    fit.bank.regime = regime;
    fit.bank.levels = evenly_spaced_levels(n_quantiles);
    fit.final_loss.resize(n_quantiles);
    std::vector<double> none;
    for (std::size_t i = 0; i < n_quantiles; ++i) {
        const double tau = fit.bank.levels[i];
        const auto params = fit_softmax_quantile(scaled, tau, start, opt);
        fit.final_loss[i] = softmax_pinball_objective(params, scaled, tau, none);
        SoftmaxPriceModel m = detail::unpack_softmax(params, r, f);
        for (std::size_t k = 0; k < r; ++k) {
            for (std::size_t j = 0; j < f; ++j) {
                double& w = m.weights[k * f + j];
                w /= st.scale[j];
                m.biases[k] -= w * st.mean[j];
            }
        }
        fit.bank.models.push_back(std::move(m));
    }
    return fit;
}

/// n_q equal-mass atoms at the reordered quantile predictions.
inline DiscreteDistribution predict_regulation_distribution(const QuantileModelBank& bank,
                                                            std::span<const double> z,
                                                            std::span<const double> o) {
    if (!bank.trained()) throw std::logic_error("quantile bank is not trained");
    QuantileSet q{bank.levels, bank.raw_quantiles(z, o)};
    q = reorder(std::move(q));
    return DiscreteDistribution::uniform(q.values);
}

// ---------------------------------------------------------------------------
// Position-adjusted mixture forecast

/// Forecast inputs for one settlement period, evaluated for many positions.
///
/// The regulation-price distributions do not depend on u except through the
/// K * beta * u shift, so they are predicted once.
class PositionForecaster {
public:
    PositionForecaster(const LogisticModel& weight_model, DiscreteDistribution down,
                       DiscreteDistribution up, std::span<const double> x,
                       const ImpactParams& impact)
        : down_(std::move(down)), up_(std::move(up)), impact_(impact) {
        if (!weight_model.position_weight_index ||
            *weight_model.position_weight_index != weight_model.weights.size() - 1) {
            throw std::invalid_argument("weight model needs the position as its last feature");
        }
        if (x.size() + 1 != weight_model.weights.size()) {
            throw std::invalid_argument("feature vector does not match the weight model");
        }
        w_u_ = weight_model.position_weight();
        eta0_ = weight_model.bias + dot(std::span<const double>(weight_model.weights).first(x.size()), x);
    }

    [[nodiscard]] double mixture_weight(double u) const { return sigmoid(eta0_ + w_u_ * u); }

    [[nodiscard]] MixtureForecast operator()(double u) const {
        return {mixture_weight(u), down_.shifted(-impact_.k_mdp * impact_.beta * u),
                up_.shifted(-impact_.k_mip * impact_.beta * u)};
    }

    [[nodiscard]] const DiscreteDistribution& base_down() const noexcept { return down_; }
    [[nodiscard]] const DiscreteDistribution& base_up() const noexcept { return up_; }
    [[nodiscard]] const ImpactParams& impact() const noexcept { return impact_; }
    [[nodiscard]] double linear_predictor_at_zero() const noexcept { return eta0_; }
    [[nodiscard]] double position_weight() const noexcept { return w_u_; }

private:
    DiscreteDistribution down_;
    DiscreteDistribution up_;
    ImpactParams impact_;
    double eta0_ = 0.0;
    double w_u_ = 0.0;
};

/// Position-adjusted mixture forecast for a single position u.
inline MixtureForecast forecast(const LogisticModel& weight_model, const QuantileModelBank& mdp_bank,
                                const QuantileModelBank& mip_bank, std::span<const double> x,
                                std::span<const double> z, std::span<const double> o_down,
                                std::span<const double> o_up, double u, const ImpactParams& impact) {
    if (!mdp_bank.trained() || !mip_bank.trained()) {
        throw std::logic_error("forecast requires trained quantile banks");
    }
    PositionForecaster pf(weight_model, predict_regulation_distribution(mdp_bank, z, o_down),
                          predict_regulation_distribution(mip_bank, z, o_up), x, impact);
    return pf(u);
}

} // namespace imbalance
