#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace imbalance {

/// A single point mass of a discrete price distribution.
struct Atom {
    double value; ///< price in EUR/MWh (or a loss, when used by the risk layer)
    double mass;  ///< probability
};

/// Finite point-mass distribution over scalar values.
///
/// Atoms are kept in canonical form: sorted ascending by value, values closer
/// than `kMergeTolerance` merged by summing their mass. A default-constructed
/// distribution is empty; every moment query on an empty distribution throws.
class DiscreteDistribution {
public:
    static constexpr double kMergeTolerance = 1e-12;
    static constexpr double kMassTolerance = 1e-9;

    DiscreteDistribution() = default;

    /// Canonicalizes and validates `atoms`. Throws std::invalid_argument on a
    /// negative or non-finite mass, a non-finite value, or a total mass that
    /// is not 1 within `kMassTolerance`.
    static DiscreteDistribution from_atoms(std::vector<Atom> atoms) {
        for (const Atom& a : atoms) {
            if (!std::isfinite(a.value) || !std::isfinite(a.mass)) {
                throw std::invalid_argument("distribution atom is not finite");
            }
            if (a.mass < 0.0) {
                throw std::invalid_argument("distribution atom has negative mass");
            }
        }
        std::stable_sort(atoms.begin(), atoms.end(),
                         [](const Atom& l, const Atom& r) { return l.value < r.value; });
        return from_sorted(std::move(atoms));
    }

    /// Same as from_atoms for input already sorted ascending by value.
    static DiscreteDistribution from_sorted(std::vector<Atom> atoms) {
        if (atoms.empty()) return {};
        std::vector<Atom> merged;
        merged.reserve(atoms.size());
        double total = 0.0;
        for (const Atom& a : atoms) {
            total += a.mass;
            if (!merged.empty() && a.value - merged.back().value <= kMergeTolerance) {
                merged.back().mass += a.mass;
            } else {
                merged.push_back(a);
            }
        }
        if (std::abs(total - 1.0) > kMassTolerance) {
            throw std::invalid_argument("distribution masses sum to " + std::to_string(total) +
                                        ", expected 1");
        }
        DiscreteDistribution d;
        d.atoms_ = std::move(merged);
        return d;
    }

    static DiscreteDistribution point_mass(double value) { return from_sorted({{value, 1.0}}); }

    /// Equal mass 1/n on each value (the quantile-model representation).
    static DiscreteDistribution uniform(std::span<const double> values) {
        std::vector<Atom> atoms;
        atoms.reserve(values.size());
        const double m = 1.0 / static_cast<double>(values.size());
        for (double v : values) atoms.push_back({v, m});
        return from_atoms(std::move(atoms));
    }

    [[nodiscard]] std::span<const Atom> atoms() const noexcept { return atoms_; }
    [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }
    [[nodiscard]] bool empty() const noexcept { return atoms_.empty(); }

    [[nodiscard]] double total_mass() const noexcept {
        double t = 0.0;
        for (const Atom& a : atoms_) t += a.mass;
        return t;
    }

    [[nodiscard]] double min() const {
        require_nonempty();
        return atoms_.front().value;
    }
    [[nodiscard]] double max() const {
        require_nonempty();
        return atoms_.back().value;
    }

    [[nodiscard]] double expectation() const {
        require_nonempty();
        double e = 0.0;
        for (const Atom& a : atoms_) e += a.mass * a.value;
        return e;
    }

    [[nodiscard]] double variance() const {
        const double mu = expectation();
        double v = 0.0;
        for (const Atom& a : atoms_) v += a.mass * (a.value - mu) * (a.value - mu);
        return v;
    }

    [[nodiscard]] double stddev() const { return std::sqrt(variance()); }

    /// P(X <= x).
    [[nodiscard]] double cdf(double x) const {
        double c = 0.0;
        for (const Atom& a : atoms_) {
            if (a.value > x) break;
            c += a.mass;
        }
        return c;
    }

    /// Left-continuous inverse CDF: the smallest atom value with CDF >= tau.
    /// Cumulative masses are compared with a 1e-12 slack so 1/n_q sums that
    /// land a rounding step below a level still select the expected atom.
    [[nodiscard]] double quantile(double tau) const {
        require_nonempty();
        if (!(tau >= 0.0 && tau <= 1.0)) {
            throw std::invalid_argument("quantile level must lie in [0, 1]");
        }
        double c = 0.0;
        for (const Atom& a : atoms_) {
            c += a.mass;
            if (c >= tau - 1e-12) return a.value;
        }
        return atoms_.back().value;
    }

    [[nodiscard]] double median() const { return quantile(0.5); }

    /// Distribution of X + delta.
    [[nodiscard]] DiscreteDistribution shifted(double delta) const {
        DiscreteDistribution d;
        d.atoms_ = atoms_;
        for (Atom& a : d.atoms_) a.value += delta;
        return d;
    }

    /// Distribution of -X.
    [[nodiscard]] DiscreteDistribution negated() const {
        DiscreteDistribution d;
        d.atoms_.assign(atoms_.rbegin(), atoms_.rend());
        for (Atom& a : d.atoms_) a.value = -a.value;
        return d;
    }

    friend bool operator==(const DiscreteDistribution& l, const DiscreteDistribution& r) {
        return std::equal(l.atoms_.begin(), l.atoms_.end(), r.atoms_.begin(), r.atoms_.end(),
                          [](const Atom& a, const Atom& b) {
                              return a.value == b.value && a.mass == b.mass;
                          });
    }

private:
    void require_nonempty() const {
        if (atoms_.empty()) throw std::logic_error("operation on an empty distribution");
    }

    std::vector<Atom> atoms_;
};

/// Two-component mixture: with probability `pi` the system is long (s >= 0)
/// and settles at the downregulation price, otherwise at the upregulation price.
struct MixtureForecast {
    double pi = 0.5;
    DiscreteDistribution down; ///< downregulation (MDP) price distribution
    DiscreteDistribution up;   ///< upregulation (MIP) price distribution
};

/// Collapses a mixture into one distribution by weighting each component.
inline DiscreteDistribution flatten(const MixtureForecast& m) {
    if (!(m.pi >= 0.0 && m.pi <= 1.0)) {
        throw std::invalid_argument("mixture weight must lie in [0, 1]");
    }
    std::vector<Atom> merged;
    merged.reserve(m.down.size() + m.up.size());
    auto d = m.down.atoms();
    auto u = m.up.atoms();
    std::size_t i = 0, j = 0;
    const double wd = m.pi, wu = 1.0 - m.pi;
    // Both components are sorted, so a linear merge keeps canonical order.
    while (i < d.size() || j < u.size()) {
        if (j == u.size() || (i < d.size() && d[i].value <= u[j].value)) {
            if (wd > 0.0) merged.push_back({d[i].value, wd * d[i].mass});
            ++i;
        } else {
            if (wu > 0.0) merged.push_back({u[j].value, wu * u[j].mass});
            ++j;
        }
    }
    return DiscreteDistribution::from_sorted(std::move(merged));
}

/// Quantile levels with one predicted value per level.
struct QuantileSet {
    std::vector<double> levels;
    std::vector<double> values;
};

/// n evenly spaced levels in (0, 1) at the centres of n equal-mass bins,
/// tau_i = (i - 1/2) / n.
inline std::vector<double> evenly_spaced_levels(std::size_t n) {
    if (n < 1) throw std::invalid_argument("need at least one quantile level");
    std::vector<double> levels(n);
    for (std::size_t i = 0; i < n; ++i) {
        levels[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    }
    return levels;
}

/// Restores monotonicity of crossed quantiles by sorting the values.
inline QuantileSet reorder(QuantileSet q) {
    std::stable_sort(q.values.begin(), q.values.end());
    return q;
}

/// Continuous ranked probability score, integrated exactly over the
/// piecewise-constant forecast CDF.
inline double crps(const DiscreteDistribution& forecast, double observed) {
    auto atoms = forecast.atoms();
    if (atoms.empty()) throw std::logic_error("crps of an empty distribution");
    double score = 0.0;
    double cum = 0.0;
    // Walk breakpoints left to right. Before the first breakpoint F = H = 0.
    double x = std::min(atoms.front().value, observed);
    bool passed_obs = false;
    std::size_t i = 0;
    while (i < atoms.size() || !passed_obs) {
        const double next_atom = i < atoms.size() ? atoms[i].value : INFINITY;
        const double next = passed_obs ? next_atom : std::min(next_atom, observed);
        const double heaviside = passed_obs ? 1.0 : 0.0;
        const double diff = cum - heaviside;
        score += diff * diff * (next - x);
        x = next;
        if (!passed_obs && observed <= next_atom) {
            passed_obs = true;
        } else {
            cum += atoms[i].mass;
            ++i;
        }
    }
    // Past the last atom F = 1 (up to rounding); F = H afterwards.
    return score;
}

struct ForecastScores {
    double rmse = 0.0; ///< of forecast means
    double mae = 0.0;  ///< of forecast medians
    double std = 0.0;  ///< mean forecast standard deviation (sharpness)
    double crps = 0.0; ///< mean CRPS
};

inline ForecastScores score_batch(std::span<const DiscreteDistribution> forecasts,
                                  std::span<const double> observations) {
    if (forecasts.size() != observations.size()) {
        throw std::invalid_argument("forecast and observation counts differ");
    }
    if (forecasts.empty()) throw std::invalid_argument("cannot score an empty batch");
    ForecastScores s;
    double se = 0.0;
    for (std::size_t k = 0; k < forecasts.size(); ++k) {
        const auto& f = forecasts[k];
        const double y = observations[k];
        const double err = f.expectation() - y;
        se += err * err;
        s.mae += std::abs(f.median() - y);
        s.std += f.stddev();
        s.crps += crps(f, y);
    }
    const double n = static_cast<double>(forecasts.size());
    s.rmse = std::sqrt(se / n);
    s.mae /= n;
    s.std /= n;
    s.crps /= n;
    return s;
}

} // namespace imbalance
