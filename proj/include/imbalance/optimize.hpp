#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace imbalance {

struct DescentOptions {
    double gradient_tolerance = 1e-6;
    int max_iterations = 2000;
    /// Length of the first trial step, taken along the normalized gradient
    /// before curvature pairs exist.
    double initial_step = 1.0;
    double shrink = 0.5;
    double armijo = 1e-4;
    /// Trial steps below this end the line search as stalled.
    double min_step = 1e-14;
    /// Curvature pairs kept by the quasi-Newton direction; 0 gives plain
    /// steepest descent.
    int memory = 10;
    /// Stops once an accepted step lowers f by less than this fraction of
    /// max(1, |f|); below that Armijo tests are decided by rounding.
    double relative_decrease = 1e-13;
};

struct DescentResult {
    std::vector<double> params;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

/// Full-batch descent with Armijo backtracking along limited-memory BFGS
/// directions. Falls back to the negative gradient whenever the two-loop
/// direction is not a descent direction.
///
/// `objective(x, grad)` returns f(x) and writes the gradient into grad.
template <class Objective>
DescentResult minimize(Objective&& objective, std::vector<double> x0, const DescentOptions& opt = {}) {
    const std::size_t n = x0.size();
    DescentResult r;
    r.params = std::move(x0);
    std::vector<double> grad(n), trial(n), trial_grad(n), dir(n);
    double value = objective(std::span<const double>(r.params), std::span<double>(grad));
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho;
    std::vector<double> alpha;

    auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    };

    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const double g2 = squared_norm(grad);
        if (std::sqrt(g2) <= opt.gradient_tolerance) {
            r.converged = true;
            break;
        }
        dir = grad;
        const std::size_t m = s_hist.size();
        alpha.assign(m, 0.0);
        for (std::size_t k = m; k-- > 0;) {
            alpha[k] = rho[k] * dot(s_hist[k], dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * y_hist[k][i];
        }
        const double first = opt.initial_step / std::sqrt(g2);
        const double gamma =
            m > 0 ? dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back()) : first;
        for (double& d : dir) d *= gamma;
        for (std::size_t k = 0; k < m; ++k) {
            const double beta = rho[k] * dot(y_hist[k], dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] += s_hist[k][i] * (alpha[k] - beta);
        }
        double slope = dot(grad, dir);
        if (!(slope > 0.0) || !std::isfinite(slope)) {
            dir = grad;
            for (double& d : dir) d *= first;
            slope = g2 * first;
            s_hist.clear();
            y_hist.clear();
            rho.clear();
        }

        bool accepted = false;
        for (double step = 1.0; step >= opt.min_step; step *= opt.shrink) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = r.params[i] - step * dir[i];
            const double tv = objective(std::span<const double>(trial), std::span<double>(trial_grad));
            if (std::isfinite(tv) && tv <= value - opt.armijo * step * slope) {
                if (opt.memory > 0) {
                    std::vector<double> s(n), y(n);
                    for (std::size_t i = 0; i < n; ++i) {
                        s[i] = trial[i] - r.params[i];
                        y[i] = trial_grad[i] - grad[i];
                    }
                    const double sy = dot(s, y);
                    if (sy > 1e-300) {
                        s_hist.push_back(std::move(s));
                        y_hist.push_back(std::move(y));
                        rho.push_back(1.0 / sy);
                        if (s_hist.size() > static_cast<std::size_t>(opt.memory)) {
                            s_hist.pop_front();
                            y_hist.pop_front();
                            rho.pop_front();
                        }
                    }
                }
                const double drop = value - tv;
                r.params.swap(trial);
                grad.swap(trial_grad);
                value = tv;
                accepted = true;
                if (drop <= opt.relative_decrease * std::max(1.0, std::abs(value))) r.converged = true;
                break;
            }
        }
        if (!accepted || r.converged) {
            ++it;
            break;
        }
    }
    r.value = value;
    r.gradient_norm = std::sqrt(squared_norm(grad));
    r.iterations = it;
    return r;
}

} // namespace imbalance
