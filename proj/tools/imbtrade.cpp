// imbtrade: generate, train, forecast, benchmark, backtest, sweep, report.

#include <cstdlib>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imbalance/backtest.hpp"

namespace fs = std::filesystem;
using namespace imbalance;

namespace {

struct Common {
    std::uint64_t seed = 1;
    std::string out = "out";
    int verbosity = 0;
};

/// Accepts a date (midnight UTC) or a full timestamp.
std::int64_t parse_time_arg(const std::string& s) {
    return parse_utc(s.size() == 10 ? s + "T00:00:00Z" : s);
}

struct Range {
    std::string from;
    std::string to;

    void add(CLI::App* app, const std::string& what) {
        app->add_option("--from", from, what + " start, inclusive (YYYY-MM-DD or UTC timestamp)");
        app->add_option("--to", to, what + " end, exclusive");
    }

    [[nodiscard]] std::pair<std::int64_t, std::int64_t> resolve(std::int64_t lo, std::int64_t hi) const {
        const auto f = from.empty() ? lo : parse_time_arg(from);
        const auto t = to.empty() ? hi : parse_time_arg(to);
        if (t <= f) throw std::invalid_argument("empty date range " + format_utc(f) + " .. " + format_utc(t));
        return {f, t};
    }
};

Dataset load_dataset(const std::string& market, const std::string& books, bool allow_gaps) {
    auto rows = load_market_csv(market, {}, {allow_gaps});
    OrderBooks b;
    if (!books.empty()) b = load_order_books(books);
    return Dataset::from_rows(std::move(rows), std::move(b));
}

// Data span of a dataset's feature rows: [first, last + 15 min).
std::pair<std::int64_t, std::int64_t> span_of(const Dataset& d) {
    if (d.features.x.rows() == 0) throw std::invalid_argument("dataset has no usable rows");
    return {d.row(0).timestamp, d.row(d.features.x.rows() - 1).timestamp + kQuarterHour};
}

void log(const Common& c, const std::string& msg) {
    if (c.verbosity >= 0) std::cerr << msg << "\n";
}

fs::path out_file(const Common& c, const std::string& name) { return fs::path(c.out) / name; }

// ---------------------------------------------------------------------------

struct GenerateArgs {
    SyntheticConfig cfg;
    double days = 28;
    std::string start = "2024-01-01";
    bool noise_free = false;
};

void cmd_generate(const Common& c, GenerateArgs a) {
    SyntheticConfig cfg = a.cfg;
    if (a.noise_free) {
        const auto nf = SyntheticConfig::noise_free();
        cfg.daily_amplitude = nf.daily_amplitude;
        cfg.gap_sd = nf.gap_sd;
        cfg.price_noise_sd = nf.price_noise_sd;
        cfg.activation_noise_sd = nf.activation_noise_sd;
    }
    cfg.seed = c.seed;
    cfg.start = parse_time_arg(a.start);
    if (!(a.days > 0.0)) throw std::invalid_argument("--days must be positive");
    cfg.periods = static_cast<std::size_t>(a.days * 96.0);
    const auto m = generate_synthetic_market(cfg);
    write_text(out_file(c, "market.csv"), market_csv(m.rows));
    write_text(out_file(c, "books.csv"), order_book_csv(m.books));
    const nlohmann::json truth{
        {"seed", cfg.seed},
        {"periods", cfg.periods},
        {"impact", {{"beta", m.truth.impact.beta}, {"k_mdp", m.truth.impact.k_mdp}, {"k_mip", m.truth.impact.k_mip}}},
        {"down_activation", {{"weights", m.truth.down_activation.weights}, {"biases", m.truth.down_activation.biases}}},
        {"up_activation", {{"weights", m.truth.up_activation.weights}, {"biases", m.truth.up_activation.biases}}},
        {"mean_pi", std::accumulate(m.truth.pi.begin(), m.truth.pi.end(), 0.0) / static_cast<double>(m.truth.pi.size())},
    };
    write_text(out_file(c, "truth.json"), truth.dump(1) + "\n");
    log(c, "generated " + std::to_string(m.rows.size()) + " periods into " + c.out);
}

// Inputs default to the files an upstream command wrote into --out.
struct DataArgs {
    std::string market;
    std::string books;
    std::string models;
    bool allow_gaps = false;

    void add(CLI::App* app, bool books_opt, bool models_opt) {
        app->add_option("--market", market, "market CSV [OUT/market.csv]");
        if (books_opt) app->add_option("--books", books, "order book CSV [OUT/books.csv]");
        if (models_opt) app->add_option("--models", models, "trained model file [OUT/models.json]");
        app->add_flag("--allow-gaps", allow_gaps, "accept missing quarter-hours");
    }

    void resolve(const Common& c) {
        auto fix = [&](std::string& p, const char* name) {
            p = p.empty() ? out_file(c, name).string() : data_path(p).string();
        };
        fix(market, "market.csv");
        fix(books, "books.csv");
        fix(models, "models.json");
    }
};

struct TrainArgs {
    DataArgs data;
    Range range;
    TrainingConfig cfg;
    double train_fraction = 0.7;
};

void cmd_train(const Common& c, TrainArgs a) {
    a.data.resolve(c);
    const auto d = load_dataset(a.data.market, "", a.data.allow_gaps);
    const auto [lo, hi] = span_of(d);
    const auto days = (hi - lo) / kDay;
    const auto def_to = lo + std::max<std::int64_t>(1, static_cast<std::int64_t>(static_cast<double>(days) * a.train_fraction)) * kDay;
    const auto [from, to] = a.range.resolve(lo, std::min(def_to, hi));
    a.cfg.seed = c.seed;
    const auto m = train_models(d, from, to, a.cfg);
    save_models(m, out_file(c, "models.json"));
    log(c, "trained on " + format_utc(from) + " .. " + format_utc(to) + "; K_mdp=" +
               std::to_string(m.impact.k_mdp) + " K_mip=" + std::to_string(m.impact.k_mip) +
               " w_u=" + std::to_string(m.position_weight.position_weight()));
}

struct ForecastArgs {
    DataArgs data;
    Range range;
    double u = 0.0;
    double beta_est = 1.0;
};

void cmd_forecast(const Common& c, ForecastArgs a) {
    a.data.resolve(c);
    const auto m = load_models(a.data.models);
    const auto d = load_dataset(a.data.market, "", a.data.allow_gaps);
    const auto [from, to] = a.range.resolve(m.train_to, span_of(d).second);
    std::string out = "timestamp,u_mw,pi,mean,std,q05,q25,q50,q75,q95,realized_price\n";
    std::size_t n = 0;
    for (auto i : d.rows_in(from, to)) {
        const auto& r = d.row(i);
        const auto x = d.features.x.row(i);
        const auto z = price_model_input(m, x);
        const auto mf = make_forecaster(m, x, z, r.o_down, r.o_up, a.beta_est)(a.u);
        const auto f = flatten(mf);
        out += format_utc(r.timestamp);
        const double realized = realized_settlement_price(r.imbalance_mw, 0.0, m.impact, r.p_mdp, r.p_mip);
        for (double v : {a.u, mf.pi, f.expectation(), f.stddev(), f.quantile(0.05), f.quantile(0.25), f.quantile(0.5),
                         f.quantile(0.75), f.quantile(0.95), realized}) {
            out += ',';
            detail::put_double(out, v);
        }
        out += '\n';
        ++n;
    }
    write_text(out_file(c, "forecasts.csv"), out);
    log(c, "wrote " + std::to_string(n) + " forecasts");
}

void cmd_benchmark(const Common& c, ForecastArgs a) {
    a.data.resolve(c);
    const auto m = load_models(a.data.models);
    const auto d = load_dataset(a.data.market, "", a.data.allow_gaps);
    const auto [from, to] = a.range.resolve(m.train_to, span_of(d).second);
    if (from < m.train_to) throw std::invalid_argument("benchmark range overlaps the training range");
    std::vector<double> observed;
    const auto fc = benchmark_forecasts(m, d, from, to, observed);
    const auto table = run_benchmark(fc, observed);
    write_text(out_file(c, "benchmark.csv"), table.to_csv());
    write_text(out_file(c, "benchmark.txt"), table.to_text());
    std::cout << table.to_text();
}

struct BacktestArgs {
    DataArgs data;
    Range range;
    std::string measure = "cvar";
    std::string alpha = "adaptive";
    double beta_est = 1.0;
    double beta_true = 1.0;
    std::size_t window = 500;
    std::size_t grid_size = 200;
    double step = 0.1;
    double u_max = 5.0;
    bool long_only = false;
    double energy_factor = 0.25;
    std::vector<double> beta_est_grid{0.0, 0.5, 1.0};
    std::vector<double> beta_true_grid{0.0, 0.5, 1.0};
    std::size_t workers = 0;

    void add(CLI::App* app) {
        data.add(app, true, true);
        range.add(app, "backtest");
        app->add_option("--measure", measure, "expectation, cvar or evar")
            ->check(CLI::IsMember({"expectation", "cvar", "evar"}))
            ->capture_default_str();
        app->add_option("--alpha", alpha, "fixed alpha in [0, 1] or 'adaptive'")->capture_default_str();
        app->add_option("--window", window, "adaptive alpha window N")->capture_default_str();
        app->add_option("--grid-size", grid_size, "alpha grid points")->capture_default_str();
        app->add_option("--step", step, "smallest tradable unit, MW")->capture_default_str();
        app->add_option("--u-max", u_max, "largest position, MW")->capture_default_str();
        app->add_flag("--long-only", long_only, "disable short positions");
        app->add_option("--energy-factor", energy_factor, "hours per settlement period")->capture_default_str();
    }

    [[nodiscard]] SimConfig config(const Common& c) const {
        SimConfig s;
        s.measure = parse_risk_kind(measure);
        if (alpha != "adaptive") {
            double v = 0.0;
            if (!detail::parse_double(alpha, v)) throw std::invalid_argument("--alpha must be a number or 'adaptive'");
            s.fixed_alpha = v;
        }
        s.beta_est = beta_est;
        s.beta_true = beta_true;
        s.window = window;
        s.alpha_grid_size = grid_size;
        s.actions = {step, u_max, !long_only};
        s.seed = c.seed;
        s.energy_factor = energy_factor;
        return s;
    }
};

struct Loaded {
    TrainedModels models;
    Dataset data;
    std::vector<MarketTick> ticks;
    SimConfig sim;
};

Loaded load_backtest(const Common& c, BacktestArgs a) {
    a.data.resolve(c);
    Loaded l{load_models(a.data.models), load_dataset(a.data.market, a.data.books, a.data.allow_gaps), {}, a.config(c)};
    const auto [from, to] = a.range.resolve(l.models.train_to, span_of(l.data).second);
    l.sim.from = from;
    l.sim.to = to;
    l.sim.validate();
    check_no_leakage(l.models, l.sim);
    l.ticks = make_ticks(l.models, l.data, from, to);
    return l;
}

void write_report(const Common& c, const Report& r, const std::string& prefix) {
    write_text(out_file(c, prefix + "report.csv"), report_csv(r));
    write_text(out_file(c, prefix + "daily.csv"), daily_csv(r));
    write_text(out_file(c, prefix + "alpha.csv"), alpha_csv(r));
}

void cmd_backtest(const Common& c, const BacktestArgs& a) {
    const auto l = load_backtest(c, a);
    const auto res = run_backtest(l.sim, l.models, l.ticks);
    write_text(out_file(c, "ledger.csv"), ledger_csv(res.ledger, l.sim.energy_factor));
    std::string skipped = "timestamp,reason\n";
    for (const auto& s : res.skipped) skipped += format_utc(s.timestamp) + "," + s.reason + "\n";
    write_text(out_file(c, "skipped.csv"), skipped);
    write_report(c, res.report, "");
    for (const auto& s : res.skipped) log(c, "skipped " + format_utc(s.timestamp) + ": " + s.reason);
    std::cout << report_csv(res.report);
}

void cmd_sweep(const Common& c, const BacktestArgs& a) {
    const auto l = load_backtest(c, a);
    const auto s = beta_sweep(l.sim, l.models, l.ticks, a.beta_est_grid, a.beta_true_grid, a.workers);
    write_text(out_file(c, "sweep.csv"), s.to_csv());
    std::cout << s.to_csv();
}

void cmd_report(const Common& c, std::vector<std::string> ledgers) {
    if (ledgers.empty()) ledgers.push_back(out_file(c, "ledger.csv").string());
    std::string summary = "ledger,total_profit_eur,volume_mwh,profit_per_trade_eur_mwh,periods,trades\n";
    for (const auto& path : ledgers) {
        const auto l = load_ledger(data_path(path));
        const auto r = summarize(l.records, l.energy_factor);
        const std::string stem = fs::path(path).stem().string();
        write_report(c, r, stem + "_");
        auto row = report_csv(r);
        row = row.substr(row.find('\n') + 1);
        summary += stem + "," + row;
    }
    write_text(out_file(c, "summary.csv"), summary);
    std::cout << summary;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Imbalance-price forecasting and risk-aware trading on single-price balancing markets"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "INI file; [section] keys set the options of that subcommand");
    Common common;
    app.add_option("--seed", common.seed, "random seed")->capture_default_str();
    app.add_option("--out", common.out, "output directory")->capture_default_str();
    app.add_flag("-v,--verbose", common.verbosity, "more output");
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "no progress messages");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "write a synthetic market dataset");
    g->add_option("--days", gen.days, "length in days")->capture_default_str();
    g->add_option("--start", gen.start, "first period (UTC)")->capture_default_str();
    g->add_option("--persistence", gen.cfg.persistence, "AR(1) coefficient of forecast errors")->capture_default_str();
    g->add_option("--signal", gen.cfg.signal, "feature strength in the regime logit")->capture_default_str();
    g->add_option("--base-logit", gen.cfg.base_logit, "regime logit intercept")->capture_default_str();
    g->add_option("--gap-mean", gen.cfg.gap_mean, "MIP minus MDP ladder intercept")->capture_default_str();
    g->add_option("--gap-sd", gen.cfg.gap_sd, "spread of the ladder gap")->capture_default_str();
    g->add_option("--price-noise", gen.cfg.price_noise_sd, "regulation price noise")->capture_default_str();
    g->add_option("--k-mdp", gen.cfg.k_mdp, "planted MDP sensitivity")->capture_default_str();
    g->add_option("--k-mip", gen.cfg.k_mip, "planted MIP sensitivity")->capture_default_str();
    g->add_option("--book-levels", gen.cfg.book_levels, "levels per book side")->capture_default_str();
    g->add_option("--book-depth", gen.cfg.book_depth, "MW per level")->capture_default_str();
    g->add_option("--half-spread", gen.cfg.half_spread, "EUR/MWh")->capture_default_str();
    g->add_flag("--noise-free", gen.noise_free, "prices exactly on the planted models");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "fit weight models, quantile banks, sensitivities and benchmarks");
    tr.data.add(t, false, false);
    tr.range.add(t, "training");
    t->add_option("--quantiles", tr.cfg.n_quantiles, "quantile levels per regime")->capture_default_str();
    t->add_option("--u-max", tr.cfg.u_max, "position range of the augmented weight model")->capture_default_str();
    t->add_option("--augmentation-beta", tr.cfg.augmentation_beta, "impact assumed when relabelling")->capture_default_str();
    t->add_option("--folds", tr.cfg.folds, "cross-validation folds for z")->capture_default_str();
    t->add_option("--horizon", tr.cfg.horizon, "RSMM lead time in periods")->capture_default_str();
    t->add_option("--train-fraction", tr.train_fraction, "default training share of the days")->capture_default_str();

    ForecastArgs fc;
    auto* f = app.add_subcommand("forecast", "write mixture forecasts for a date range");
    fc.data.add(f, false, true);
    fc.range.add(f, "forecast");
    f->add_option("--u", fc.u, "position the forecast is conditioned on, MW")->capture_default_str();
    f->add_option("--beta-est", fc.beta_est, "assumed market impact")->capture_default_str();

    ForecastArgs bm;
    auto* b = app.add_subcommand("benchmark", "score the mixture against the RSMM and linear benchmarks");
    bm.data.add(b, false, true);
    bm.range.add(b, "evaluation");

    BacktestArgs bt;
    auto* r = app.add_subcommand("backtest", "replay the trading loop");
    bt.add(r);
    r->add_option("--beta-est", bt.beta_est, "impact the strategy assumes")->capture_default_str();
    r->add_option("--beta-true", bt.beta_true, "impact applied at settlement")->capture_default_str();

    BacktestArgs sw;
    auto* s = app.add_subcommand("sweep", "backtest every (beta_est, beta_true) pair");
    sw.add(s);
    s->add_option("--beta-est", sw.beta_est_grid, "comma-separated beta_est values")->delimiter(',')->capture_default_str();
    s->add_option("--beta-true", sw.beta_true_grid, "comma-separated beta_true values")->delimiter(',')->capture_default_str();
    s->add_option("--workers", sw.workers, "threads, 0 for all cores")->capture_default_str();

    std::vector<std::string> ledgers;
    auto* rp = app.add_subcommand("report", "summarize ledger files");
    rp->add_option("--ledger", ledgers, "ledger CSV files [OUT/ledger.csv]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (quiet) common.verbosity = -1;

    try {
        if (g->parsed()) cmd_generate(common, gen);
        else if (t->parsed()) cmd_train(common, tr);
        else if (f->parsed()) cmd_forecast(common, fc);
        else if (b->parsed()) cmd_benchmark(common, bm);
        else if (r->parsed()) cmd_backtest(common, bt);
        else if (s->parsed()) cmd_sweep(common, sw);
        else if (rp->parsed()) cmd_report(common, ledgers);
    } catch (const std::exception& e) {
        std::cerr << "imbtrade: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
