#pragma once

// Reference implementations used only by tests: direct minimization of the
// variational formulas, no shared code with the library solvers.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "imbalance/dists.hpp"

namespace imbalance::testing {

inline DiscreteDistribution random_distribution(std::mt19937_64& rng, std::size_t n,
                                                double lo = -200.0, double hi = 400.0) {
    std::uniform_real_distribution<double> v(lo, hi), m(0.0, 1.0);
    std::vector<Atom> atoms(n);
    double total = 0.0;
    for (auto& a : atoms) {
        a = {v(rng), m(rng) + 1e-3};
        total += a.mass;
    }
    for (auto& a : atoms) a.mass /= total;
    return DiscreteDistribution::from_atoms(atoms);
}

/// s + E[(Z - s)+] / alpha at a given s.
inline double cvar_objective(const DiscreteDistribution& d, double s, double alpha) {
    double e = 0.0;
    for (const Atom& a : d.atoms()) e += a.mass * std::max(a.value - s, 0.0);
    return s + e / alpha;
}

/// Minimum of the CVaR objective over a dense grid on the support plus the
/// atoms themselves (the objective is piecewise linear with kinks there).
inline double cvar_grid_oracle(const DiscreteDistribution& d, double alpha) {
    double best = INFINITY;
    const double lo = d.min(), hi = d.max();
    const int n = 20000;
    for (int i = 0; i <= n; ++i) best = std::min(best, cvar_objective(d, lo + (hi - lo) * i / n, alpha));
    for (const Atom& a : d.atoms()) best = std::min(best, cvar_objective(d, a.value, alpha));
    return best;
}

/// (1/s) ln(E[exp(sZ)] / alpha) with max-subtraction.
inline double evar_objective(const DiscreteDistribution& d, double s, double alpha) {
    const double zmax = d.max();
    double acc = 0.0;
    for (const Atom& a : d.atoms()) acc += a.mass * std::exp(s * (a.value - zmax));
    return zmax + (std::log(acc) - std::log(alpha)) / s;
}

/// Golden-section search on ln s over a geometrically grown bracket.
inline double evar_golden_oracle(const DiscreteDistribution& d, double alpha) {
    if (alpha == 0.0) return d.max();
    if (alpha == 1.0) return d.expectation();
    if (d.size() == 1) return d.min();
    const double spread = d.max() - d.min();
    double lo = std::log(1e-8 / spread);
    double hi = lo;
    double prev = evar_objective(d, std::exp(hi), alpha);
    while (hi < std::log(1e12 / spread)) {
        const double cur = evar_objective(d, std::exp(hi + 1.0), alpha);
        hi += 1.0;
        if (cur > prev) break;
        prev = cur;
    }
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), e = a + g * (b - a);
    double fc = evar_objective(d, std::exp(c), alpha), fe = evar_objective(d, std::exp(e), alpha);
    for (int it = 0; it < 300 && b - a > 1e-14; ++it) {
        if (fc < fe) {
            b = e, e = c, fe = fc;
            c = b - g * (b - a);
            fc = evar_objective(d, std::exp(c), alpha);
        } else {
            a = c, c = e, fc = fe;
            e = a + g * (b - a);
            fe = evar_objective(d, std::exp(e), alpha);
        }
    }
    return std::min({fc, fe, d.max()});
}

} // namespace imbalance::testing
