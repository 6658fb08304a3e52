#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "imbalance/regime.hpp"

namespace imbalance {

/// How strongly the trader's own position moves the imbalance and its price.
struct ImpactParams {
    double beta = 1.0;  ///< share of the position that ends up in the system imbalance
    double k_mdp = 0.0; ///< EUR/MWh per MW, downregulation price sensitivity
    double k_mip = 0.0; ///< EUR/MWh per MW, upregulation price sensitivity

    void validate() const {
        if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
        if (!std::isfinite(k_mdp) || !std::isfinite(k_mip)) {
            throw std::invalid_argument("price sensitivities must be finite");
        }
    }

    [[nodiscard]] double sensitivity(Regime r) const noexcept {
        return r == Regime::mdp ? k_mdp : k_mip;
    }
};

/// One historical settlement period used to estimate the sensitivities.
struct ImbalanceObservation {
    double imbalance_mw; ///< s_t
    double p_mdp;
    double p_mip;
};

struct SlopeFit {
    double k = 0.0;              ///< negated least-squares slope
    double standard_error = 0.0; ///< of the slope
    std::size_t count = 0;
};

struct SensitivityEstimate {
    SlopeFit mdp;
    SlopeFit mip;
};

namespace detail {

inline SlopeFit fit_negated_slope(std::span<const ImbalanceObservation> history, Regime regime) {
    // Two passes over the regime's rows: means, then the centred sums.
    double sum_s = 0.0, sum_p = 0.0;
    std::size_t n = 0;
    auto price = [regime](const ImbalanceObservation& o) {
        return regime == Regime::mdp ? o.p_mdp : o.p_mip;
    };
    for (const auto& o : history) {
        if (regime_of(o.imbalance_mw) != regime) continue;
        sum_s += o.imbalance_mw;
        sum_p += price(o);
        ++n;
    }
    if (n < 2) {
        throw std::invalid_argument(std::string("fewer than 2 observations in the ") +
                                    std::string(to_string(regime)) + " regime");
    }
    const double mean_s = sum_s / static_cast<double>(n);
    const double mean_p = sum_p / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (const auto& o : history) {
        if (regime_of(o.imbalance_mw) != regime) continue;
        const double ds = o.imbalance_mw - mean_s;
        sxx += ds * ds;
        sxy += ds * (price(o) - mean_p);
    }
    if (!(sxx > 0.0)) {
        throw std::invalid_argument(std::string("system imbalance has zero variance in the ") +
                                    std::string(to_string(regime)) + " regime");
    }
    const double slope = sxy / sxx;
    const double intercept = mean_p - slope * mean_s;
    SlopeFit fit;
    fit.k = -slope;
    fit.count = n;
    if (n > 2) {
        double rss = 0.0;
        for (const auto& o : history) {
            if (regime_of(o.imbalance_mw) != regime) continue;
            const double r = price(o) - intercept - slope * o.imbalance_mw;
            rss += r * r;
        }
        fit.standard_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

} // namespace detail

/// Least-squares slope of regulation price against system imbalance within
/// each regime, returned negated so that a price falling with a growing
/// imbalance yields a positive sensitivity. Rows with s_t = 0 count as MDP.
inline SensitivityEstimate estimate_sensitivities(std::span<const ImbalanceObservation> history) {
    return {detail::fit_negated_slope(history, Regime::mdp),
            detail::fit_negated_slope(history, Regime::mip)};
}

/// Regulation price after a position of u MW: p - K * beta * u.
inline double adjust_price(double price, Regime regime, double u, const ImpactParams& params) {
    return price - params.sensitivity(regime) * params.beta * u;
}

/// Settlement price once the trader's position has shifted the imbalance to
/// s_t + beta * u.
inline double realized_settlement_price(double imbalance_mw, double u, const ImpactParams& params,
                                        double p_mdp, double p_mip) {
    const Regime r = regime_of(imbalance_mw + params.beta * u);
    return adjust_price(r == Regime::mdp ? p_mdp : p_mip, r, u, params);
}

} // namespace imbalance
