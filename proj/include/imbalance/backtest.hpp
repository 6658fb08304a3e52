#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "imbalance/data_io.hpp"
#include "imbalance/models.hpp"
#include "imbalance/strategy.hpp"

namespace imbalance {

/// Everything known at gate closure for one settlement period, plus what is
/// realized afterwards.
struct MarketTick {
    std::int64_t timestamp = 0;
    std::vector<double> x; ///< weight-model features
    std::vector<double> z; ///< price-model inputs
    std::vector<double> o_down;
    std::vector<double> o_up;
    std::optional<OrderBook> book; ///< absent when no snapshot was recorded
    double imbalance_mw = 0.0;
    double p_mdp = 0.0;
    double p_mip = 0.0;
};

/// Ticks for the feature rows in [from, to).
inline std::vector<MarketTick> make_ticks(const TrainedModels& m, const Dataset& data, std::int64_t from,
                                          std::int64_t to) {
    std::vector<MarketTick> out;
    for (auto i : data.rows_in(from, to)) {
        const auto& r = data.row(i);
        const auto x = data.features.x.row(i);
        MarketTick t{r.timestamp, {x.begin(), x.end()}, price_model_input(m, x), r.o_down, r.o_up, {},
                     r.imbalance_mw, r.p_mdp, r.p_mip};
        if (auto b = data.books.find(r.timestamp); b != data.books.end()) t.book = b->second;
        out.push_back(std::move(t));
    }
    return out;
}

struct SimConfig {
    RiskKind measure = RiskKind::cvar;
    std::optional<double> fixed_alpha; ///< unset: adaptive
    double beta_est = 1.0;             ///< impact the strategy assumes
    double beta_true = 1.0;            ///< impact applied at settlement
    std::size_t window = 500;
    std::size_t alpha_grid_size = 200;
    ActionSpace actions;
    std::int64_t from = 0;
    std::int64_t to = 0;
    std::uint64_t seed = 1;
    double energy_factor = 0.25; ///< h per settlement period

    void validate() const {
        for (double b : {beta_est, beta_true}) {
            if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
        }
        if (fixed_alpha && !(*fixed_alpha >= 0.0 && *fixed_alpha <= 1.0)) {
            throw std::invalid_argument("alpha must lie in [0, 1]");
        }
        if (window == 0) throw std::invalid_argument("window must be at least 1");
        if (alpha_grid_size == 0) throw std::invalid_argument("alpha grid must not be empty");
        if (!(energy_factor > 0.0)) throw std::invalid_argument("energy factor must be positive");
        if (to <= from) throw std::invalid_argument("backtest range is empty");
        actions.validate();
    }

    [[nodiscard]] AlphaGrid alpha_grid() const {
        if (measure == RiskKind::expectation) return {{1.0}};
        if (fixed_alpha) return {{*fixed_alpha}};
        return AlphaGrid::for_measure(measure, alpha_grid_size);
    }
};

// Throws when the training data reaches into the backtest range.
inline void check_no_leakage(const TrainedModels& m, const SimConfig& cfg) {
    if (m.train_to > cfg.from) {
        throw std::invalid_argument("models were trained on data up to " + format_utc(m.train_to) +
                                    ", which overlaps the backtest starting " + format_utc(cfg.from));
    }
}

struct SkipEvent {
    std::int64_t timestamp = 0;
    std::string reason;
};

/// Per executed tick: the hindsight losses of every grid alpha and the alpha
/// that was used, for auditing the adaptive rule.
struct TraceStep {
    std::vector<double> long_losses;
    std::vector<double> short_losses;
    double alpha_long = 1.0;
    double alpha_short = 1.0;
};

/// Advances the trading loop one settlement period at a time.
class Backtester {
public:
    Backtester(const TrainedModels& models, SimConfig cfg, bool keep_trace = false)
        : models_(&models), cfg_(std::move(cfg)), grid_(cfg_.alpha_grid()),
          long_(grid_, cfg_.window, initial_alpha()), short_(grid_, cfg_.window, initial_alpha()),
          keep_trace_(keep_trace) {
        cfg_.validate();
        check_no_leakage(models, cfg_);
        if (cfg_.actions.u_max > models.u_max) {
            throw std::invalid_argument("action space exceeds the positions the weight model was trained on");
        }
    }

    /// Decides, fills and settles one tick. Returns nothing when the tick is
    /// skipped; skipped ticks never enter the alpha window.
    std::optional<TradeRecord> step(const MarketTick& t) {
        if (last_ && t.timestamp <= *last_) throw std::invalid_argument("ticks must be strictly increasing in time");
        if (t.timestamp % kQuarterHour != 0) throw std::invalid_argument("tick " + format_utc(t.timestamp) + " is not quarter-hour aligned");
        last_ = t.timestamp;
        if (!t.book) return skip(t, "no order book snapshot");
        const double depth_needed = cfg_.actions.u_max;
        if (t.book->ask_depth() < depth_needed || (cfg_.actions.allow_short && t.book->bid_depth() < depth_needed)) {
            return skip(t, "insufficient order book depth");
        }

        const auto forecaster = make_forecaster(*models_, t.x, t.z, t.o_down, t.o_up, cfg_.beta_est);
        const auto table = decision_table(forecaster, *t.book, cfg_.measure, grid_.values, cfg_.actions);
        const double a_long = long_.current();
        const double a_short = short_.current();
        const Decision& dl = table.long_side.by_alpha[alpha_index(grid_, a_long)];
        const Decision& ds = table.short_side.by_alpha[alpha_index(grid_, a_short)];
        const Decision d = combine_sides(dl, ds);

        const ImpactParams truth{cfg_.beta_true, models_->impact.k_mdp, models_->impact.k_mip};
        const double p = realized_settlement_price(t.imbalance_mw, d.u, truth, t.p_mdp, t.p_mip);
        TradeRecord rec{t.timestamp, d.u, d.fill_price, p, a_long, a_short, cfg_.measure};

        auto ll = hindsight_losses(table.long_side, p);
        auto ls = hindsight_losses(table.short_side, p);
        if (keep_trace_) trace_.push_back({ll, ls, a_long, a_short});
        long_.record(std::move(ll));
        short_.record(std::move(ls));
        records_.push_back(rec);
        return rec;
    }

    [[nodiscard]] const std::vector<TradeRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const std::vector<SkipEvent>& skipped() const noexcept { return skipped_; }
    [[nodiscard]] const std::vector<TraceStep>& trace() const noexcept { return trace_; }
    [[nodiscard]] const AlphaGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const SimConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const AlphaTracker& long_tracker() const noexcept { return long_; }
    [[nodiscard]] const AlphaTracker& short_tracker() const noexcept { return short_; }

private:
    [[nodiscard]] double initial_alpha() const {
        // Warm-up starts from the expectation unless alpha is pinned.
        return cfg_.fixed_alpha && cfg_.measure != RiskKind::expectation ? *cfg_.fixed_alpha : grid_.values.back();
    }

    std::nullopt_t skip(const MarketTick& t, std::string reason) {
        skipped_.push_back({t.timestamp, std::move(reason)});
        return std::nullopt;
    }

    const TrainedModels* models_;
    SimConfig cfg_;
    AlphaGrid grid_;
    AlphaTracker long_;
    AlphaTracker short_;
    bool keep_trace_;
    std::optional<std::int64_t> last_;
    std::vector<TradeRecord> records_;
    std::vector<SkipEvent> skipped_;
    std::vector<TraceStep> trace_;
};

// ---------------------------------------------------------------------------
// Accounting

inline double record_profit(const TradeRecord& r, double energy_factor) {
    return (r.realized_price - r.fill_price) * r.position * energy_factor;
}

struct DailyProfit {
    std::int64_t day = 0; ///< UTC midnight
    double profit = 0.0;
    double cumulative = 0.0;
};

struct Report {
    double total_profit = 0.0;     ///< EUR
    double volume_mwh = 0.0;       ///< sum |u| * energy factor
    double profit_per_trade = 0.0; ///< EUR/MWh
    std::size_t periods = 0;
    std::size_t trades = 0; ///< periods with u != 0
    std::vector<DailyProfit> daily;
    struct AlphaPoint {
        std::int64_t timestamp;
        double alpha_long;
        double alpha_short;
    };
    std::vector<AlphaPoint> alpha;
};

/// Totals in ledger order so the sum identity holds exactly.
inline Report summarize(std::span<const TradeRecord> records, double energy_factor) {
    Report rep;
    for (const auto& r : records) {
        const double pr = record_profit(r, energy_factor);
        rep.total_profit += pr;
        rep.volume_mwh += std::abs(r.position) * energy_factor;
        ++rep.periods;
        if (r.position != 0.0) ++rep.trades;
        const auto day = utc_day(r.timestamp);
        if (rep.daily.empty() || rep.daily.back().day != day) rep.daily.push_back({day, 0.0, 0.0});
        rep.daily.back().profit += pr;
        rep.alpha.push_back({r.timestamp, r.alpha_long, r.alpha_short});
    }
    double cum = 0.0;
    for (auto& d : rep.daily) {
        cum += d.profit;
        d.cumulative = cum;
    }
    rep.profit_per_trade = rep.volume_mwh > 0.0 ? rep.total_profit / rep.volume_mwh : 0.0;
    return rep;
}

struct BacktestResult {
    std::vector<TradeRecord> ledger;
    std::vector<SkipEvent> skipped;
    std::vector<TraceStep> trace;
    Report report;
};

/// Replays the ticks inside the configured range.
inline BacktestResult run_backtest(const SimConfig& cfg, const TrainedModels& models,
                                   std::span<const MarketTick> ticks, bool keep_trace = false) {
    Backtester bt(models, cfg, keep_trace);
    for (const auto& t : ticks) {
        if (t.timestamp < cfg.from || t.timestamp >= cfg.to) continue;
        bt.step(t);
    }
    BacktestResult out{bt.records(), bt.skipped(), bt.trace(), {}};
    out.report = summarize(out.ledger, cfg.energy_factor);
    return out;
}

// ---------------------------------------------------------------------------
// Ledger and report files

inline std::string ledger_csv(std::span<const TradeRecord> records, double energy_factor) {
    std::string out = "# energy_factor_h=";
    detail::put_double(out, energy_factor);
    out += "\n# profit_eur = (settlement_price - fill_price) * position_mw * energy_factor_h\n"
           "# profit_mw_period = (settlement_price - fill_price) * position_mw\n"
           "timestamp,position_mw,fill_price,settlement_price,alpha_long,alpha_short,measure,profit_eur,"
           "profit_mw_period\n";
    for (const auto& r : records) {
        out += format_utc(r.timestamp);
        for (double v : {r.position, r.fill_price, r.realized_price, r.alpha_long, r.alpha_short}) {
            out += ',';
            detail::put_double(out, v);
        }
        out += ',';
        out += to_string(r.measure);
        out += ',';
        detail::put_double(out, record_profit(r, energy_factor));
        out += ',';
        detail::put_double(out, record_profit(r, 1.0));
        out += '\n';
    }
    return out;
}

struct Ledger {
    double energy_factor = 0.25;
    std::vector<TradeRecord> records;
};

inline Ledger parse_ledger(std::istream& in) {
    Ledger l;
    bool have_factor = false, have_header = false;
    std::string line;
    std::vector<Diagnostic> diags;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            constexpr std::string_view key = "# energy_factor_h=";
            if (line.starts_with(key)) {
                have_factor = detail::parse_double(std::string_view(line).substr(key.size()), l.energy_factor);
                if (!have_factor) diags.push_back({n, "unreadable energy factor"});
            }
            continue;
        }
        if (!have_header) {
            if (!line.starts_with("timestamp,position_mw,fill_price,settlement_price,alpha_long,alpha_short,measure")) {
                throw DataError("not a ledger file", {{n, "unexpected header"}});
            }
            have_header = true;
            continue;
        }
        const auto f = detail::split_csv(line);
        if (f.size() != 9) {
            diags.push_back({n, "expected 9 fields, found " + std::to_string(f.size())});
            continue;
        }
        TradeRecord r;
        try {
            r.timestamp = parse_utc(f[0]);
            r.measure = parse_risk_kind(f[6]);
        } catch (const std::exception& e) {
            diags.push_back({n, e.what()});
            continue;
        }
        double* dst[] = {&r.position, &r.fill_price, &r.realized_price, &r.alpha_long, &r.alpha_short};
        bool ok = true;
        for (std::size_t k = 0; k < 5; ++k) ok = detail::parse_double(f[k + 1], *dst[k]) && ok;
        if (!ok) {
            diags.push_back({n, "unparseable number"});
            continue;
        }
        l.records.push_back(r);
    }
    if (!have_header) throw DataError("ledger is empty", {});
    if (!have_factor) diags.push_back({0, "missing energy factor comment"});
    if (!diags.empty()) throw DataError("invalid ledger", std::move(diags));
    return l;
}

inline Ledger load_ledger(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    return parse_ledger(in);
}

inline std::string report_csv(const Report& r) {
    std::string out = "total_profit_eur,volume_mwh,profit_per_trade_eur_mwh,periods,trades\n";
    for (double v : {r.total_profit, r.volume_mwh, r.profit_per_trade}) {
        detail::put_double(out, v);
        out += ',';
    }
    out += std::to_string(r.periods) + "," + std::to_string(r.trades) + "\n";
    return out;
}

inline std::string daily_csv(const Report& r) {
    std::string out = "day,profit_eur,cumulative_profit_eur\n";
    for (const auto& d : r.daily) {
        out += format_utc(d.day).substr(0, 10) + ",";
        detail::put_double(out, d.profit);
        out += ',';
        detail::put_double(out, d.cumulative);
        out += '\n';
    }
    return out;
}

inline std::string alpha_csv(const Report& r) {
    std::string out = "timestamp,alpha_long,alpha_short\n";
    for (const auto& a : r.alpha) {
        out += format_utc(a.timestamp) + ",";
        detail::put_double(out, a.alpha_long);
        out += ',';
        detail::put_double(out, a.alpha_short);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Impact sweep

struct SweepResult {
    std::vector<double> beta_est;
    std::vector<double> beta_true;
    std::vector<std::vector<double>> profit; ///< [i_est][j_true], EUR

    [[nodiscard]] std::string to_csv() const {
        std::string out = "beta_est";
        for (double b : beta_true) {
            out += ",beta_true=";
            detail::put_double(out, b);
        }
        out += '\n';
        for (std::size_t i = 0; i < beta_est.size(); ++i) {
            detail::put_double(out, beta_est[i]);
            for (double p : profit[i]) {
                out += ',';
                detail::put_double(out, p);
            }
            out += '\n';
        }
        return out;
    }
};

/// One backtest per (beta_est, beta_true) cell, cells spread over `workers`
/// threads. Results do not depend on the worker count.
inline SweepResult beta_sweep(const SimConfig& base, const TrainedModels& models, std::span<const MarketTick> ticks,
                              std::span<const double> beta_est, std::span<const double> beta_true,
                              std::size_t workers = 0) {
    if (beta_est.empty() || beta_true.empty()) throw std::invalid_argument("beta grids must not be empty");
    SweepResult out{{beta_est.begin(), beta_est.end()},
                    {beta_true.begin(), beta_true.end()},
                    std::vector<std::vector<double>>(beta_est.size(), std::vector<double>(beta_true.size()))};
    std::vector<SimConfig> cells;
    for (double be : beta_est) {
        for (double bt : beta_true) {
            SimConfig c = base;
            c.beta_est = be;
            c.beta_true = bt;
            c.validate();
            cells.push_back(c);
        }
    }
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, cells.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(cells.size());
    auto work = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < cells.size();) {
            try {
                out.profit[k / beta_true.size()][k % beta_true.size()] =
                    run_backtest(cells[k], models, ticks).report.total_profit;
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

} // namespace imbalance
