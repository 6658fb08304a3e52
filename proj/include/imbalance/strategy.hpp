#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "imbalance/dists.hpp"
#include "imbalance/market_impact.hpp"
#include "imbalance/price_models.hpp"
#include "imbalance/risk.hpp"

namespace imbalance {

// ---------------------------------------------------------------------------
// Actions and order books

/// Positions are integer multiples of the smallest tradable unit.
struct ActionSpace {
    double step = 0.1;  ///< MW
    double u_max = 5.0; ///< MW
    bool allow_short = true;

    void validate() const {
        if (!(step > 0.0)) throw std::invalid_argument("action step must be positive");
        if (!(u_max >= 0.0)) throw std::invalid_argument("u_max must be non-negative");
        const double k = u_max / step;
        if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
            throw std::invalid_argument("u_max must be a multiple of the action step");
        }
    }

    /// Number of non-zero positions on each side.
    [[nodiscard]] std::size_t ticks() const {
        validate();
        return static_cast<std::size_t>(std::llround(u_max / step));
    }

    [[nodiscard]] double position(std::int64_t k) const { return static_cast<double>(k) * step; }

    /// 0, step, ..., u_max.
    [[nodiscard]] std::vector<double> long_grid() const {
        std::vector<double> g;
        for (std::size_t k = 0; k <= ticks(); ++k) g.push_back(position(static_cast<std::int64_t>(k)));
        return g;
    }

    /// 0, -step, ..., -u_max; only {0} when shorting is disabled.
    [[nodiscard]] std::vector<double> short_grid() const {
        std::vector<double> g{0.0};
        if (!allow_short) return g;
        for (std::size_t k = 1; k <= ticks(); ++k) g.push_back(position(-static_cast<std::int64_t>(k)));
        return g;
    }

    /// The full grid in ascending order.
    [[nodiscard]] std::vector<double> grid() const {
        auto s = short_grid();
        std::reverse(s.begin(), s.end());
        auto l = long_grid();
        s.insert(s.end(), l.begin() + 1, l.end());
        return s;
    }
};

struct BookLevel {
    double price;  ///< EUR/MWh
    double volume; ///< MW
};

/// Intraday order book snapshot: asks ascending, bids descending by price.
struct OrderBook {
    std::vector<BookLevel> asks;
    std::vector<BookLevel> bids;

    void validate() const {
        auto check = [](const std::vector<BookLevel>& side, bool ascending, const char* name) {
            for (std::size_t i = 0; i < side.size(); ++i) {
                if (!(side[i].volume > 0.0) || !std::isfinite(side[i].price)) {
                    throw std::invalid_argument(std::string(name) + " level with non-positive volume or bad price");
                }
                if (i > 0 && (ascending ? side[i].price < side[i - 1].price : side[i].price > side[i - 1].price)) {
                    throw std::invalid_argument(std::string(name) + " levels out of order");
                }
            }
        };
        check(asks, true, "ask");
        check(bids, false, "bid");
    }

    [[nodiscard]] double ask_depth() const {
        double d = 0.0;
        for (const auto& l : asks) d += l.volume;
        return d;
    }
    [[nodiscard]] double bid_depth() const {
        double d = 0.0;
        for (const auto& l : bids) d += l.volume;
        return d;
    }
};

class InsufficientDepth : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Fill {
    double cost = 0.0;          ///< q(u) * u, EUR/h for a MW position
    double average_price = 0.0; ///< q(u), EUR/MWh
};

/// Walks the ladder: buying (u > 0) lifts asks, selling (u < 0) hits bids.
/// At u = 0 the average price reports the best ask (best bid without asks).
inline Fill fill_cost(const OrderBook& book, double u) {
    if (u == 0.0) {
        if (!book.asks.empty()) return {0.0, book.asks.front().price};
        if (!book.bids.empty()) return {0.0, book.bids.front().price};
        return {0.0, 0.0};
    }
    const auto& side = u > 0.0 ? book.asks : book.bids;
    const double want = std::abs(u);
    double left = want;
    double total = 0.0;
    std::size_t levels = 0;
    for (const auto& l : side) {
        const double take = std::min(left, l.volume);
        total += take * l.price;
        left -= take;
        ++levels;
        if (left <= 1e-12 * want) {
            left = 0.0;
            break;
        }
    }
    if (left > 0.0) {
        throw InsufficientDepth("order book too thin for a " + std::to_string(u) + " MW position");
    }
    // A fill inside the top level is priced exactly at that level.
    const double q = levels == 1 ? side.front().price : total / want;
    return {q * u, q};
}

/// Realized loss per MW-period of position u filled at q and settled at p.
inline double loss(double p, double q, double u) { return (q - p) * u; }

// ---------------------------------------------------------------------------
// Risk-optimal positions

struct Decision {
    double u = 0.0;
    double phi = 0.0; ///< (q(u) + rho[-p]) u for longs, |u| (rho[p] - q(u)) for shorts
    double fill_price = 0.0;
};

/// Optimal position of one side (long or short) for every alpha of a grid.
struct SideDecisions {
    std::vector<Decision> by_alpha;
};

struct DecisionTable {
    SideDecisions long_side;
    SideDecisions short_side;
};

namespace detail {

/// phi(u) at every alpha for a single non-zero u.
inline void position_costs(const PositionForecaster& forecaster, const OrderBook& book, RiskKind kind,
                           std::span<const double> alphas, double u, double& q, std::vector<double>& phi) {
    q = fill_cost(book, u).average_price;
    const DiscreteDistribution prices = flatten(forecaster(u));
    if (u > 0.0) {
        // rho[(q - p) u] = u (q + rho[-p])
        const auto r = risk_profile(prices.negated(), kind, alphas);
        for (std::size_t a = 0; a < alphas.size(); ++a) phi[a] = (q + r[a]) * u;
    } else {
        // rho[(q - p) u] = |u| (rho[p] - q) for u < 0
        const auto r = risk_profile(prices, kind, alphas);
        for (std::size_t a = 0; a < alphas.size(); ++a) phi[a] = -u * (r[a] - q);
    }
}

inline SideDecisions side_table(const PositionForecaster& forecaster, const OrderBook& book, RiskKind kind,
                                std::span<const double> alphas, std::span<const double> positions) {
    SideDecisions out;
    const double q0 = fill_cost(book, 0.0).average_price;
    out.by_alpha.assign(alphas.size(), Decision{0.0, 0.0, q0});
    std::vector<double> phi(alphas.size());
    // Positions arrive in increasing |u|; a strict improvement is required,
    // so ties stay with the smaller position.
    for (double u : positions) {
        if (u == 0.0) continue;
        double q = 0.0;
        position_costs(forecaster, book, kind, alphas, u, q, phi);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            if (phi[a] < out.by_alpha[a].phi) out.by_alpha[a] = {u, phi[a], q};
        }
    }
    return out;
}

} // namespace detail

/// Both sides' optimal positions over an alpha grid for one settlement period.
inline DecisionTable decision_table(const PositionForecaster& forecaster, const OrderBook& book,
                                    RiskKind kind, std::span<const double> alphas,
                                    const ActionSpace& actions) {
    DecisionTable t;
    const auto lg = actions.long_grid();
    const auto sg = actions.short_grid();
    t.long_side = detail::side_table(forecaster, book, kind, alphas, lg);
    t.short_side = detail::side_table(forecaster, book, kind, alphas, sg);
    return t;
}

/// The side with the lower cost; on a tie the smaller |u|, then the long side.
inline Decision combine_sides(const Decision& long_d, const Decision& short_d) {
    if (short_d.phi < long_d.phi) return short_d;
    if (long_d.phi < short_d.phi) return long_d;
    return std::abs(short_d.u) < std::abs(long_d.u) ? short_d : long_d;
}

/// Enumerates the action grid and returns the minimizer of phi under one
/// risk measure.
inline Decision optimal_position(const PositionForecaster& forecaster, const OrderBook& book,
                                 const RiskSpec& spec, const ActionSpace& actions) {
    spec.validate();
    const double alpha[] = {spec.alpha};
    const auto t = decision_table(forecaster, book, spec.kind, alpha, actions);
    return combine_sides(t.long_side.by_alpha[0], t.short_side.by_alpha[0]);
}

// ---------------------------------------------------------------------------
// Expected-value fast path

/// 20 K / (beta w_u^2 gap): positions below this keep the expected cost
/// convex when pi(u) = sigma(. + w_u beta u).
inline double convexity_bound(double k, double beta, double w_u, double mean_price_gap) {
    const double denom = beta * w_u * w_u * mean_price_gap;
    if (denom == 0.0) throw std::invalid_argument("convexity bound has a zero denominator");
    return 20.0 * k / denom;
}

/// Intraday cost q(u) u = a u + b over the long action range.
struct LinearCost {
    double a = 0.0;
    double b = 0.0;
};

/// A book whose first ask level covers u_max has a linear cost over [0, u_max].
inline std::optional<LinearCost> linear_cost(const OrderBook& book, double u_max) {
    if (book.asks.empty() || book.asks.front().volume < u_max) return std::nullopt;
    return LinearCost{book.asks.front().price, 0.0};
}

/// Closed-form expected cost for equal sensitivities and a linear book:
///   phi(u) = (K beta u + (c_mdp - c_mip) pi(u) + c_mip + a) u + b,
/// with c = -mean of each regime's quantiles and pi(u) = sigma(eta0 + w u).
class ExpectedCost {
public:
    ExpectedCost(const PositionForecaster& f, const LinearCost& cost)
        : k_beta_(f.impact().k_mdp * f.impact().beta), c_mdp_(-f.base_down().expectation()),
          c_mip_(-f.base_up().expectation()), a_(cost.a), b_(cost.b), eta0_(f.linear_predictor_at_zero()),
          w_(f.position_weight()) {}

    [[nodiscard]] double pi(double u) const { return sigmoid(eta0_ + w_ * u); }
    [[nodiscard]] double gap() const { return c_mdp_ - c_mip_; }

    [[nodiscard]] double value(double u) const {
        return (k_beta_ * u + gap() * pi(u) + c_mip_ + a_) * u + b_;
    }
    [[nodiscard]] double first(double u) const {
        const double p = pi(u), dp = p * (1.0 - p) * w_;
        return 2.0 * k_beta_ * u + gap() * (p + dp * u) + c_mip_ + a_;
    }
    [[nodiscard]] double second(double u) const {
        const double p = pi(u), dp = p * (1.0 - p) * w_, d2p = dp * (1.0 - 2.0 * p) * w_;
        return 2.0 * k_beta_ + gap() * (2.0 * dp + d2p * u);
    }

private:
    double k_beta_, c_mdp_, c_mip_, a_, b_, eta0_, w_;
};

struct NewtonOutcome {
    Decision decision;
    int iterations = 0;
    bool fell_back = false;
    std::string warning; ///< why enumeration was used instead
};

/// Long position minimizing the expected cost by projected Newton steps on
/// [0, u_max], rounded to the better neighbouring grid point. When the
/// convexity conditions do not hold, enumerates the long grid instead.
inline NewtonOutcome newton_expected_position(const PositionForecaster& forecaster, const OrderBook& book,
                                              const ActionSpace& actions) {
    NewtonOutcome out;
    const ImpactParams& imp = forecaster.impact();
    const auto cost = linear_cost(book, actions.u_max);
    std::string why;
    double bound = std::numeric_limits<double>::infinity();
    const double w = forecaster.position_weight();
    const double gap = -forecaster.base_down().expectation() + forecaster.base_up().expectation();
    if (imp.k_mdp != imp.k_mip) {
        why = "price sensitivities differ between regimes";
    } else if (!cost) {
        why = "order book is not a single level over the action range";
    } else if (w < 0.0 || gap < 0.0) {
        why = "mixture weight decreases in u or the regulation price gap is negative";
    } else if (w != 0.0 && gap != 0.0) {
        // The trained weight multiplies u directly; the bound is stated for
        // a weight on beta u.
        bound = imp.beta > 0.0 ? convexity_bound(imp.k_mdp, imp.beta, w / imp.beta, gap) : 0.0;
        if (bound < actions.u_max) why = "u_max exceeds the convexity bound";
    }
    auto enumerate = [&](std::string reason) {
        out.fell_back = true;
        out.warning = std::move(reason) + "; using enumeration";
        const double alpha[] = {1.0};
        out.decision = detail::side_table(forecaster, book, RiskKind::expectation, alpha, actions.long_grid())
                           .by_alpha[0];
        return out;
    };
    if (!why.empty()) return enumerate(why);

    const ExpectedCost phi(forecaster, *cost);
    const double hi = actions.u_max;
    double u = 0.5 * hi;
    bool converged = false;
    while (out.iterations < 100) {
        const double h = phi.second(u);
        const double g = phi.first(u);
        double next = h > 0.0 ? u - g / h : (g > 0.0 ? 0.0 : hi);
        next = std::clamp(next, 0.0, hi);
        ++out.iterations;
        converged = std::abs(next - u) <= 1e-12 * std::max(1.0, hi);
        u = next;
        if (converged) break;
    }
    if (!converged) return enumerate("Newton iterations did not settle");
    const auto n = static_cast<std::int64_t>(actions.ticks());
    const auto k_lo = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(u / actions.step)), 0, n);
    const auto k_hi = std::min(k_lo + 1, n);
    const double u_lo = actions.position(k_lo), u_hi = actions.position(k_hi);
    const double v_lo = phi.value(u_lo), v_hi = phi.value(u_hi);
    const double best = v_hi < v_lo ? u_hi : u_lo;
    // phi(0) = 0 exactly; never pick a position that costs more than staying out.
    if (phi.value(best) < 0.0) {
        out.decision = {best, phi.value(best), cost->a};
    } else {
        out.decision = {0.0, 0.0, fill_cost(book, 0.0).average_price};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adaptive alpha

/// Sorted candidate values of the risk parameter.
struct AlphaGrid {
    std::vector<double> values;

    void validate() const {
        if (values.empty()) throw std::invalid_argument("alpha grid is empty");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] >= 0.0 && values[i] <= 1.0)) throw std::invalid_argument("alpha outside [0, 1]");
            if (i > 0 && !(values[i] > values[i - 1])) throw std::invalid_argument("alpha grid not increasing");
        }
    }

    /// n points evenly spaced on [lo, hi].
    static AlphaGrid uniform(std::size_t n, double lo = 0.0, double hi = 1.0) {
        if (n < 2) return {{hi}};
        AlphaGrid g;
        for (std::size_t i = 0; i < n; ++i) {
            g.values.push_back(i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
        }
        return g;
    }

    /// Dense on [0.9, 1] with a coarse tail below, n points in total.
    static AlphaGrid tail_weighted(std::size_t n, double split = 0.9, std::size_t coarse = 20) {
        if (n <= coarse + 1) return uniform(n);
        AlphaGrid g;
        for (std::size_t i = 0; i < coarse; ++i) {
            g.values.push_back(split * static_cast<double>(i) / static_cast<double>(coarse));
        }
        const auto fine = uniform(n - coarse, split, 1.0);
        g.values.insert(g.values.end(), fine.values.begin(), fine.values.end());
        return g;
    }

    /// Default grid for a measure: uniform for CVaR, tail-weighted for EVaR.
    static AlphaGrid for_measure(RiskKind kind, std::size_t n = 200) {
        if (kind == RiskKind::evar) return tail_weighted(n);
        if (kind == RiskKind::expectation) return {{1.0}};
        return uniform(n);
    }
};

/// Hindsight loss (q(u*) - p) u* of each alpha's chosen position.
inline std::vector<double> hindsight_losses(const SideDecisions& side, double settlement_price) {
    std::vector<double> out;
    out.reserve(side.by_alpha.size());
    for (const auto& d : side.by_alpha) out.push_back(d.u == 0.0 ? 0.0 : loss(settlement_price, d.fill_price, d.u));
    return out;
}

/// Grid alpha with the smallest mean loss over the window rows (each row one
/// settlement period, one entry per grid value). Ties go to `previous`, then
/// to the larger alpha; an empty window returns `previous`.
template <class Rows>
double adapt_alpha(const Rows& window, const AlphaGrid& grid, double previous) {
    if (window.empty()) return previous;
    const std::size_t n = grid.values.size();
    std::vector<double> sum(n, 0.0);
    for (const auto& row : window) {
        if (row.size() != n) throw std::invalid_argument("window row does not match the alpha grid");
        for (std::size_t a = 0; a < n; ++a) sum[a] += row[a];
    }
    const double inv = 1.0 / static_cast<double>(window.size());
    std::size_t best = 0;
    double best_loss = sum[0] * inv;
    for (std::size_t a = 1; a < n; ++a) {
        const double l = sum[a] * inv;
        if (l < best_loss || (l == best_loss && grid.values[best] != previous)) {
            best = a;
            best_loss = l;
        }
    }
    return grid.values[best];
}

/// Per-side rolling window of hindsight losses. Each settlement period's
/// losses are computed once, when it settles, and reused until they leave
/// the window.
class AlphaTracker {
public:
    AlphaTracker(AlphaGrid grid, std::size_t window, double initial = 1.0)
        : grid_(std::move(grid)), window_(window), current_(initial) {
        grid_.validate();
        if (window_ == 0) throw std::invalid_argument("alpha window must hold at least one period");
    }

    [[nodiscard]] double current() const noexcept { return current_; }
    [[nodiscard]] const AlphaGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::deque<std::vector<double>>& rows() const noexcept { return rows_; }

    /// Adds one settled period and re-selects alpha for the next decision.
    void record(std::vector<double> losses) {
        if (losses.size() != grid_.values.size()) throw std::invalid_argument("loss row size mismatch");
        rows_.push_back(std::move(losses));
        if (rows_.size() > window_) rows_.pop_front();
        current_ = adapt_alpha(rows_, grid_, current_);
    }

private:
    AlphaGrid grid_;
    std::size_t window_;
    double current_;
    std::deque<std::vector<double>> rows_;
};

/// Index of alpha in the grid; throws when absent.
inline std::size_t alpha_index(const AlphaGrid& grid, double alpha) {
    const auto it = std::lower_bound(grid.values.begin(), grid.values.end(), alpha);
    if (it == grid.values.end() || *it != alpha) {
        throw std::invalid_argument("alpha " + std::to_string(alpha) + " is not on the grid");
    }
    return static_cast<std::size_t>(it - grid.values.begin());
}

/// One executed settlement period.
struct TradeRecord {
    std::int64_t timestamp = 0; ///< UTC seconds
    double position = 0.0;     ///< MW
    double fill_price = 0.0;   ///< EUR/MWh
    double realized_price = 0.0;
    double alpha_long = 1.0;
    double alpha_short = 1.0;
    RiskKind measure = RiskKind::expectation;
};

} // namespace imbalance
