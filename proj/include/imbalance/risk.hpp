#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "imbalance/dists.hpp"

namespace imbalance {

enum class RiskKind { expectation, cvar, evar };

constexpr std::string_view to_string(RiskKind k) noexcept {
    switch (k) {
    case RiskKind::cvar: return "cvar";
    case RiskKind::evar: return "evar";
    case RiskKind::expectation:
    default: return "expectation";
    }
}

inline RiskKind parse_risk_kind(std::string_view s) {
    if (s == "expectation") return RiskKind::expectation;
    if (s == "cvar") return RiskKind::cvar;
    if (s == "evar") return RiskKind::evar;
    throw std::invalid_argument("unknown risk measure '" + std::string(s) +
                                "' (expected expectation, cvar or evar)");
}

/// A coherent risk measure and its tail parameter. alpha = 1 is the
/// expectation, alpha = 0 the essential maximum.
struct RiskSpec {
    RiskKind kind = RiskKind::expectation;
    double alpha = 1.0;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    }
};

/// CVaR of a loss distribution for any number of alpha values: the mean of
/// the worst alpha-fraction of outcomes, boundary atom included fractionally.
class CvarTable {
public:
    explicit CvarTable(const DiscreteDistribution& losses) : dist_(&losses) {
        auto atoms = losses.atoms();
        if (atoms.empty()) throw std::logic_error("cvar of an empty distribution");
        values_.reserve(atoms.size());
        cum_mass_.reserve(atoms.size() + 1);
        cum_weighted_.reserve(atoms.size() + 1);
        cum_mass_.push_back(0.0);
        cum_weighted_.push_back(0.0);
        for (auto it = atoms.rbegin(); it != atoms.rend(); ++it) {
            values_.push_back(it->value);
            cum_mass_.push_back(cum_mass_.back() + it->mass);
            cum_weighted_.push_back(cum_weighted_.back() + it->mass * it->value);
        }
    }

    [[nodiscard]] double operator()(double alpha) const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
        if (alpha == 0.0) return values_.front();
        if (alpha == 1.0) return dist_->expectation();
        // Number of whole atoms (largest first) that fit inside the tail.
        const auto it = std::upper_bound(cum_mass_.begin() + 1, cum_mass_.end(), alpha);
        const std::size_t full = static_cast<std::size_t>(it - cum_mass_.begin()) - 1;
        double tail = cum_weighted_[full];
        if (full < values_.size()) tail += (alpha - cum_mass_[full]) * values_[full];
        return tail / alpha;
    }

private:
    const DiscreteDistribution* dist_;
    std::vector<double> values_; ///< descending
    std::vector<double> cum_mass_;
    std::vector<double> cum_weighted_;
};

inline double cvar(const DiscreteDistribution& losses, double alpha) {
    return CvarTable(losses)(alpha);
}

/// EVaR of a loss distribution,
///   inf_{s > 0} (1/s) (ln E[exp(s Z)] - ln alpha).
///
/// The loss is normalized to Y = (Z - mean) / spread so the solver is exactly
/// translation- and scale-equivariant. With K(s) = ln E[exp(s Y)] the
/// objective's stationarity condition is g(s) = s K'(s) - K(s) = -ln alpha,
/// where g increases from 0 to -ln P(Y = max Y). The root is found by
/// safeguarded Newton steps in log s; alpha at or below the mass of the
/// largest atom yields the maximum.
class EvarSolver {
public:
    explicit EvarSolver(const DiscreteDistribution& losses) : dist_(&losses) {
        auto atoms = losses.atoms();
        if (atoms.empty()) throw std::logic_error("evar of an empty distribution");
        mean_ = losses.expectation();
        spread_ = atoms.back().value - atoms.front().value;
        if (atoms.size() == 1 || !(spread_ > 0.0)) {
            degenerate_ = true;
            return;
        }
        y_.reserve(atoms.size());
        log_mass_.reserve(atoms.size());
        double var = 0.0;
        for (const Atom& a : atoms) {
            const double y = (a.value - mean_) / spread_;
            y_.push_back(y);
            log_mass_.push_back(a.mass > 0.0 ? std::log(a.mass) : -std::numeric_limits<double>::infinity());
            var += a.mass * y * y;
        }
        y_max_ = y_.back();
        top_mass_ = atoms.back().mass;
        sd_y_ = std::sqrt(var);
    }

    [[nodiscard]] double operator()(double alpha) const { return evaluate(alpha, nullptr); }

    /// As operator(), reusing and updating ln s of the previous root; used
    /// when sweeping a sorted alpha grid.
    [[nodiscard]] double evaluate(double alpha, double* t_hint) const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
        if (alpha == 0.0) return dist_->max();
        if (alpha == 1.0) return dist_->expectation();
        if (degenerate_) return dist_->atoms().back().value;
        if (alpha <= top_mass_) return dist_->max();
        return mean_ + spread_ * normalized(-std::log(alpha), t_hint);
    }

    /// Objective (1/s) ln(E[exp(sZ)] / alpha) in the original units; test hook.
    [[nodiscard]] double objective(double s, double alpha) const {
        if (degenerate_) return dist_->atoms().back().value;
        // s acts on Z; Y = (Z - mean)/spread so s_Y = s * spread.
        const Moments m = moments(s * spread_);
        return mean_ + spread_ * (m.k - std::log(alpha)) / (s * spread_);
    }

private:
    struct Moments {
        double k;     ///< ln E[exp(sY)]
        double mean;  ///< K'(s): tilted mean
        double var;   ///< K''(s): tilted variance
    };

    [[nodiscard]] Moments moments(double s) const {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < y_.size(); ++i) {
            const double d = y_[i] - y_max_;
            const double e = std::exp(s * d + log_mass_[i]);
            s0 += e;
            s1 += e * d;
            s2 += e * d * d;
        }
        const double md = s1 / s0;
        return {s * y_max_ + std::log(s0), y_max_ + md, std::max(s2 / s0 - md * md, 0.0)};
    }

    /// Normalized EVaR for target c = -ln alpha in (0, -ln top_mass), with
    /// ln s of a nearby root as an optional starting point.
    [[nodiscard]] double normalized(double c, double* t_hint) const {
        constexpr double kMinT = -27.631021115928547; // ln 1e-12
        constexpr double kMaxT = 27.631021115928547;
        // Second-order expansion g(s) ~ s^2 var / 2 gives the cold start.
        double t = t_hint && std::isfinite(*t_hint)
                       ? *t_hint
                       : std::clamp(std::log(std::sqrt(2.0 * c) / sd_y_), kMinT, kMaxT);
        double lo = kMinT, hi = kMaxT;
        Moments m{};
        // Safeguarded Newton on G(t) = g(e^t) - c, G'(t) = s^2 K''(s). The
        // value (K + c)/s is stationary at the root, so a step of 1e-7 in t
        // leaves an error far below the value tolerance.
        for (int it = 0; it < 200; ++it) {
            const double s = std::exp(t);
            m = moments(s);
            const double r = s * m.mean - m.k - c;
            if (r < 0.0) lo = t; else hi = t;
            if (r == 0.0) break;
            const double dg = s * s * m.var;
            double tn = dg > 0.0 ? t - r / dg : 0.5 * (lo + hi);
            if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
            if (std::abs(tn - t) < 1e-7 || hi - lo < 1e-12) break;
            t = tn;
        }
        if (t_hint) *t_hint = t;
        if (lo >= kMaxT - 1e-9) return y_max_;
        // The objective at any s bounds the infimum from above.
        return std::min((m.k + c) / std::exp(t), y_max_);
    }

    const DiscreteDistribution* dist_;
    bool degenerate_ = false;
    double mean_ = 0.0, spread_ = 0.0, y_max_ = 0.0, top_mass_ = 0.0, sd_y_ = 0.0;
    std::vector<double> y_;
    std::vector<double> log_mass_;
};

inline double evar(const DiscreteDistribution& losses, double alpha) {
    return EvarSolver(losses)(alpha);
}

inline double evaluate_risk(const DiscreteDistribution& losses, const RiskSpec& spec) {
    switch (spec.kind) {
    case RiskKind::cvar: return cvar(losses, spec.alpha);
    case RiskKind::evar: return evar(losses, spec.alpha);
    case RiskKind::expectation:
    default: return losses.expectation();
    }
}

/// The measure at each alpha of a grid, sharing the per-distribution setup.
/// CVaR entries equal evaluate_risk bit for bit; EVaR entries warm-start each
/// root from the previous one and agree with evaluate_risk to solver
/// tolerance. The result depends only on (losses, kind, alphas).
inline std::vector<double> risk_profile(const DiscreteDistribution& losses, RiskKind kind,
                                        std::span<const double> alphas) {
    std::vector<double> out(alphas.size());
    switch (kind) {
    case RiskKind::cvar: {
        const CvarTable table(losses);
        for (std::size_t i = 0; i < alphas.size(); ++i) out[i] = table(alphas[i]);
        break;
    }
    case RiskKind::evar: {
        const EvarSolver solver(losses);
        double t = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < alphas.size(); ++i) out[i] = solver.evaluate(alphas[i], &t);
        break;
    }
    case RiskKind::expectation:
    default:
        std::fill(out.begin(), out.end(), losses.expectation());
    }
    return out;
}

/// rho[-p] for p drawn from the flattened mixture.
inline double risk_of_negated_price(const MixtureForecast& forecast, const RiskSpec& spec) {
    return evaluate_risk(flatten(forecast).negated(), spec);
}

} // namespace imbalance
