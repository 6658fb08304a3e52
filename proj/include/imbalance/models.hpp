#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "imbalance/benchmarks.hpp"
#include "imbalance/data_io.hpp"
#include "imbalance/market_impact.hpp"
#include "imbalance/price_models.hpp"

namespace imbalance {

/// Everything the forecasting and trading stages need, trained on one range.
struct TrainedModels {
    static constexpr int kVersion = 1;

    std::int64_t train_from = 0; ///< inclusive, UTC seconds
    std::int64_t train_to = 0;   ///< exclusive
    std::vector<std::string> feature_names;
    ReserveGrid grid;
    LogisticModel weight;          ///< P(s >= 0 | x)
    LogisticModel position_weight; ///< P(s + beta u >= 0 | x, u), u last
    QuantileModelBank mdp_bank;
    QuantileModelBank mip_bank;
    ImpactParams impact; ///< estimated sensitivities, beta as augmented
    double u_max = 5.0;
    std::size_t horizon = 5;
    TransitionMatrix static_transitions;
    DynamicTransitionModel dynamic_transitions;
    LinearQuantileBank linear;
};

struct TrainingConfig {
    std::size_t n_quantiles = 100;
    double u_max = 5.0;
    double augmentation_beta = 1.0;
    std::uint64_t seed = 1;
    std::size_t folds = 5;
    std::size_t horizon = 5;
    ReserveGrid grid = ReserveGrid::belgian();
    LogisticFitOptions logistic;
    QuantileFitOptions quantile;
};

/// A feature set together with the rows and books it came from.
struct Dataset {
    std::vector<MarketRow> rows;
    OrderBooks books;
    FeatureSet features;

    static Dataset from_rows(std::vector<MarketRow> rows, OrderBooks books) {
        Dataset d{std::move(rows), std::move(books), {}};
        d.features = build_features(d.rows);
        return d;
    }

    [[nodiscard]] const MarketRow& row(std::size_t feature_row) const {
        return rows[features.source_row[feature_row]];
    }

    /// Feature rows whose timestamps fall in [from, to).
    [[nodiscard]] std::vector<std::size_t> rows_in(std::int64_t from, std::int64_t to) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < features.x.rows(); ++i) {
            const auto t = row(i).timestamp;
            if (t >= from && t < to) out.push_back(i);
        }
        return out;
    }
};

inline std::vector<double> concat(std::span<const double> a, std::span<const double> b,
                                  std::span<const double> c = {}) {
    std::vector<double> out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

/// Inputs of the implicit linear benchmark: weight features plus both
/// reserve ladders.
inline std::vector<double> linear_inputs(std::span<const double> x, const MarketRow& r) {
    return concat(x, r.o_down, r.o_up);
}

/// Fits the weight models, quantile banks, sensitivities and the three
/// benchmark forecasters on the feature rows in [from, to).
inline TrainedModels train_models(const Dataset& data, std::int64_t from, std::int64_t to,
                                  const TrainingConfig& cfg = {}) {
    const auto idx = data.rows_in(from, to);
    if (idx.size() < 2 * cfg.folds) throw std::invalid_argument("too few training rows in the requested range");
    const std::size_t p = data.features.x.cols();
    TrainedModels m;
    m.train_from = from;
    m.train_to = to;
    m.feature_names = data.features.names;
    m.u_max = cfg.u_max;
    m.horizon = cfg.horizon;
    m.grid = cfg.grid;
    m.grid.validate();
    if (m.grid.size() != data.row(idx.front()).o_down.size()) throw std::invalid_argument("reserve ladder size does not match the grid");

    FeatureMatrix x(idx.size(), p);
    std::vector<std::uint8_t> labels(idx.size());
    std::vector<double> s(idx.size());
    std::vector<Regime> regimes(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto src = data.features.x.row(idx[k]);
        std::copy(src.begin(), src.end(), x.row(k).begin());
        s[k] = data.row(idx[k]).imbalance_mw;
        regimes[k] = regime_of(s[k]);
        labels[k] = regimes[k] == Regime::mdp ? 1 : 0;
    }

    m.weight = fit_logistic(x, labels, cfg.logistic).model;

    // One position-aware model over long and short positions.
    const auto aug = augment_with_positions(x, s, {-cfg.u_max, cfg.u_max, cfg.augmentation_beta, cfg.seed});
    m.position_weight = fit_logistic(aug.x, aug.labels, cfg.logistic).model;
    m.position_weight.position_weight_index = p;

    // Price-model input: out-of-fold weight-model output.
    const auto z = cross_validated_weights(x, labels, cfg.folds, cfg.logistic);
    QuantileBankData down, up;
    std::vector<ImbalanceObservation> history;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& r = data.row(idx[k]);
        const double zk[] = {z[k]};
        auto& bank = regimes[k] == Regime::mdp ? down : up;
        bank.z.push_row(zk);
        bank.o.push_row(regimes[k] == Regime::mdp ? r.o_down : r.o_up);
        bank.price.push_back(regimes[k] == Regime::mdp ? r.p_mdp : r.p_mip);
        history.push_back({r.imbalance_mw, r.p_mdp, r.p_mip});
    }
    m.mdp_bank = fit_quantile_bank(down, Regime::mdp, cfg.n_quantiles, cfg.quantile).bank;
    m.mip_bank = fit_quantile_bank(up, Regime::mip, cfg.n_quantiles, cfg.quantile).bank;
    const auto k = estimate_sensitivities(history);
    m.impact = {cfg.augmentation_beta, k.mdp.k, k.mip.k};

    m.static_transitions = fit_static_transitions(regimes).matrix;
    m.dynamic_transitions =
        fit_dynamic_transitions(select_columns(x, kExogenousBegin, p), regimes, cfg.logistic);

    FeatureMatrix lin;
    std::vector<double> settle;
    for (std::size_t k2 = 0; k2 < idx.size(); ++k2) {
        const auto& r = data.row(idx[k2]);
        lin.push_row(linear_inputs(x.row(k2), r));
        settle.push_back(regimes[k2] == Regime::mdp ? r.p_mdp : r.p_mip);
    }
    m.linear = fit_linear_quantile_bank(lin, settle, cfg.n_quantiles, cfg.quantile);
    return m;
}

// ---------------------------------------------------------------------------
// Serialization: versioned JSON with named fields

namespace detail {

inline nlohmann::json to_json(const LogisticModel& m) {
    nlohmann::json j{{"bias", m.bias}, {"weights", m.weights}};
    if (m.position_weight_index) j["position_weight_index"] = *m.position_weight_index;
    return j;
}

inline LogisticModel logistic_from_json(const nlohmann::json& j) {
    LogisticModel m;
    m.bias = j.at("bias").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("position_weight_index")) m.position_weight_index = j["position_weight_index"].get<std::size_t>();
    return m;
}

inline nlohmann::json to_json(const QuantileModelBank& b) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : b.models) {
        models.push_back({{"outputs", m.outputs}, {"features", m.features}, {"weights", m.weights}, {"biases", m.biases}});
    }
    return {{"regime", to_string(b.regime)}, {"levels", b.levels}, {"models", models}};
}

inline QuantileModelBank bank_from_json(const nlohmann::json& j) {
    QuantileModelBank b;
    const auto r = j.at("regime").get<std::string>();
    if (r != "mdp" && r != "mip") throw std::invalid_argument("unknown regime " + r);
    b.regime = r == "mdp" ? Regime::mdp : Regime::mip;
    b.levels = j.at("levels").get<std::vector<double>>();
    for (const auto& m : j.at("models")) {
        SoftmaxPriceModel s;
        s.outputs = m.at("outputs").get<std::size_t>();
        s.features = m.at("features").get<std::size_t>();
        s.weights = m.at("weights").get<std::vector<double>>();
        s.biases = m.at("biases").get<std::vector<double>>();
        if (s.weights.size() != s.outputs * s.features || s.biases.size() != s.outputs) {
            throw std::invalid_argument("softmax model dimensions are inconsistent");
        }
        b.models.push_back(std::move(s));
    }
    if (b.models.size() != b.levels.size()) throw std::invalid_argument("quantile bank levels and models differ");
    return b;
}

} // namespace detail

inline nlohmann::json to_json(const TrainedModels& m) {
    nlohmann::json lin = nlohmann::json::array();
    for (const auto& q : m.linear.models) lin.push_back({{"bias", q.bias}, {"weights", q.weights}});
    const auto& t = m.static_transitions.p;
    return {
        {"format", "imbalance-models"},
        {"version", TrainedModels::kVersion},
        {"train_range", {{"from", format_utc(m.train_from)}, {"to", format_utc(m.train_to)}}},
        {"feature_names", m.feature_names},
        {"reserve_grid", {{"afrr_mw", m.grid.afrr_volumes}, {"mfrr_mw", m.grid.mfrr_volumes}}},
        {"n_quantiles", m.mdp_bank.n_quantiles()},
        {"u_max", m.u_max},
        {"horizon", m.horizon},
        {"impact", {{"beta", m.impact.beta}, {"k_mdp", m.impact.k_mdp}, {"k_mip", m.impact.k_mip}}},
        {"weight_model", detail::to_json(m.weight)},
        {"position_weight_model", detail::to_json(m.position_weight)},
        {"mdp_bank", detail::to_json(m.mdp_bank)},
        {"mip_bank", detail::to_json(m.mip_bank)},
        {"static_rsmm", {{t[0][0], t[0][1]}, {t[1][0], t[1][1]}}},
        {"dynamic_rsmm",
         {{"from_mdp", detail::to_json(m.dynamic_transitions.from_mdp)},
          {"from_mip", detail::to_json(m.dynamic_transitions.from_mip)}}},
        {"linear_quantile", {{"levels", m.linear.levels}, {"models", lin}}},
    };
}

inline TrainedModels models_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "imbalance-models") throw std::invalid_argument("not a model file");
    const int v = j.at("version").get<int>();
    if (v != TrainedModels::kVersion) {
        throw std::invalid_argument("model file version " + std::to_string(v) + " is not supported");
    }
    TrainedModels m;
    m.train_from = parse_utc(j.at("train_range").at("from").get<std::string>());
    m.train_to = parse_utc(j.at("train_range").at("to").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.grid.afrr_volumes = j.at("reserve_grid").at("afrr_mw").get<std::vector<double>>();
    m.grid.mfrr_volumes = j.at("reserve_grid").at("mfrr_mw").get<std::vector<double>>();
    m.u_max = j.at("u_max").get<double>();
    m.horizon = j.at("horizon").get<std::size_t>();
    const auto& imp = j.at("impact");
    m.impact = {imp.at("beta").get<double>(), imp.at("k_mdp").get<double>(), imp.at("k_mip").get<double>()};
    m.weight = detail::logistic_from_json(j.at("weight_model"));
    m.position_weight = detail::logistic_from_json(j.at("position_weight_model"));
    m.mdp_bank = detail::bank_from_json(j.at("mdp_bank"));
    m.mip_bank = detail::bank_from_json(j.at("mip_bank"));
    const auto t = j.at("static_rsmm").get<std::vector<std::vector<double>>>();
    if (t.size() != 2 || t[0].size() != 2 || t[1].size() != 2) throw std::invalid_argument("static_rsmm must be 2x2");
    m.static_transitions.p = {{{t[0][0], t[0][1]}, {t[1][0], t[1][1]}}};
    m.static_transitions.validate();
    m.dynamic_transitions.from_mdp = detail::logistic_from_json(j.at("dynamic_rsmm").at("from_mdp"));
    m.dynamic_transitions.from_mip = detail::logistic_from_json(j.at("dynamic_rsmm").at("from_mip"));
    m.linear.levels = j.at("linear_quantile").at("levels").get<std::vector<double>>();
    for (const auto& q : j.at("linear_quantile").at("models")) {
        m.linear.models.push_back({q.at("bias").get<double>(), q.at("weights").get<std::vector<double>>()});
    }
    if (m.weight.weights.size() != m.feature_names.size() ||
        m.position_weight.weights.size() != m.feature_names.size() + 1 || !m.position_weight.position_weight_index) {
        throw std::invalid_argument("weight models do not match the feature schema");
    }
    return m;
}

inline void save_models(const TrainedModels& m, const std::filesystem::path& path) {
    write_text(path, to_json(m).dump(1) + "\n");
}

inline TrainedModels load_models(const std::filesystem::path& path) {
    try {
        return models_from_json(nlohmann::json::parse(read_text(path)));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Forecasting with a trained bundle

/// Regulation-price input of a period: the weight-model output.
inline std::vector<double> price_model_input(const TrainedModels& m, std::span<const double> x) {
    return {m.weight.predict(x)};
}

/// Position-adjusted forecaster for one period under an assumed beta.
inline PositionForecaster make_forecaster(const TrainedModels& m, std::span<const double> x,
                                          std::span<const double> z, std::span<const double> o_down,
                                          std::span<const double> o_up, double beta) {
    return PositionForecaster(m.position_weight, predict_regulation_distribution(m.mdp_bank, z, o_down),
                              predict_regulation_distribution(m.mip_bank, z, o_up), x,
                              {beta, m.impact.k_mdp, m.impact.k_mip});
}

/// Benchmark forecasts of the system imbalance price at u = 0 for the
/// feature rows in [from, to). RSMMs start from the last known state, the
/// regime `horizon` periods before delivery.
inline std::vector<ModelForecasts> benchmark_forecasts(const TrainedModels& m, const Dataset& data,
                                                       std::int64_t from, std::int64_t to,
                                                       std::vector<double>& observed) {
    const std::string split = format_utc(from) + "/" + format_utc(to);
    std::vector<ModelForecasts> out{{"static_rsmm", split, {}},
                                    {"dynamic_rsmm", split, {}},
                                    {"linear_quantile", split, {}},
                                    {"mixture", split, {}}};
    observed.clear();
    std::map<std::int64_t, std::size_t> by_time;
    for (std::size_t i = 0; i < data.features.x.rows(); ++i) by_time.emplace(data.row(i).timestamp, i);
    std::map<std::int64_t, Regime> state;
    for (const auto& o : data.rows) state.emplace(o.timestamp, regime_of(o.imbalance_mw));
    const std::size_t p = data.features.x.cols();
    const auto h = static_cast<std::int64_t>(m.horizon);
    for (auto i : data.rows_in(from, to)) {
        const auto& r = data.row(i);
        // State known at trading time; needs every intermediate period.
        const auto known = state.find(r.timestamp - h * kQuarterHour);
        if (known == state.end()) continue;
        std::vector<TransitionMatrix> steps;
        for (std::int64_t k = h - 1; k >= 0; --k) {
            auto it = by_time.find(r.timestamp - k * kQuarterHour);
            if (it == by_time.end()) break;
            const auto xr = data.features.x.row(it->second);
            steps.push_back(m.dynamic_transitions.step(xr.subspan(kExogenousBegin, p - kExogenousBegin)));
        }
        if (steps.size() != m.horizon) continue;
        const auto x = data.features.x.row(i);
        const auto z = price_model_input(m, x);
        const auto down = predict_regulation_distribution(m.mdp_bank, z, r.o_down);
        const auto up = predict_regulation_distribution(m.mip_bank, z, r.o_up);
        const Regime start = known->second;
        out[0].forecasts.push_back(flatten({rsmm_state_probability(m.static_transitions, start, m.horizon), down, up}));
        out[1].forecasts.push_back(flatten({rsmm_state_probability(steps, start), down, up}));
        out[2].forecasts.push_back(linear_quantile_forecast(m.linear, linear_inputs(x, r)));
        out[3].forecasts.push_back(flatten({m.weight.predict(x), down, up}));
        observed.push_back(regime_of(r.imbalance_mw) == Regime::mdp ? r.p_mdp : r.p_mip);
    }
    return out;
}

} // namespace imbalance
