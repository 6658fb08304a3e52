#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "imbalance/price_models.hpp"
#include "imbalance/regime.hpp"
#include "imbalance/strategy.hpp"

namespace imbalance {

// ---------------------------------------------------------------------------
// Time

inline constexpr std::int64_t kQuarterHour = 900;
inline constexpr std::int64_t kDay = 86400;

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS]" with an optional trailing
/// "Z"; always read as UTC.
inline std::int64_t parse_utc(std::string_view s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    auto num = [&](std::size_t pos, std::size_t len, int& out) {
        if (pos + len > s.size()) return false;
        auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
        return r.ec == std::errc{} && r.ptr == s.data() + pos + len;
    };
    bool ok = s.size() >= 10 && num(0, 4, y) && s[4] == '-' && num(5, 2, mo) && s[7] == '-' && num(8, 2, d);
    std::size_t end = 10;
    if (ok && s.size() > 10 && (s[10] == 'T' || s[10] == ' ')) {
        ok = num(11, 2, h) && s.size() >= 16 && s[13] == ':' && num(14, 2, mi);
        end = 16;
        if (ok && s.size() > 16 && s[16] == ':') {
            ok = num(17, 2, se);
            end = 19;
        }
    }
    if (ok && end < s.size()) ok = end + 1 == s.size() && s[end] == 'Z';
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ok || !ymd.ok() || h > 23 || mi > 59 || se > 59) {
        throw std::invalid_argument("bad UTC timestamp '" + std::string(s) + "'");
    }
    return static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * kDay + h * 3600 + mi * 60 + se;
}

/// "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_utc(std::int64_t t) {
    using namespace std::chrono;
    const std::int64_t days = t >= 0 ? t / kDay : -((-t + kDay - 1) / kDay);
    const std::int64_t sec = t - days * kDay;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(sec / 3600),
                  static_cast<int>(sec / 60 % 60), static_cast<int>(sec % 60));
    return buf;
}

/// UTC midnight of the day containing t.
inline std::int64_t utc_day(std::int64_t t) {
    const std::int64_t days = t >= 0 ? t / kDay : -((-t + kDay - 1) / kDay);
    return days * kDay;
}

/// Offset of Brussels local time from UTC in seconds (EU summer time runs
/// from 01:00 UTC on the last Sunday of March to 01:00 UTC on the last Sunday
/// of October).
inline std::int64_t brussels_offset(std::int64_t utc) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{std::chrono::days{utc_day(utc) / kDay}}};
    const auto start = sys_days{ymd.year() / March / Sunday[last]}.time_since_epoch().count() * kDay + 3600;
    const auto end = sys_days{ymd.year() / October / Sunday[last]}.time_since_epoch().count() * kDay + 3600;
    return utc >= start && utc < end ? 7200 : 3600;
}

/// Quarter-hour index 0..95 of the market-local clock.
inline std::size_t local_quarter_of_day(std::int64_t utc) {
    const std::int64_t local = utc + brussels_offset(utc);
    return static_cast<std::size_t>((local - utc_day(local)) / kQuarterHour);
}

// ---------------------------------------------------------------------------
// Market data schema

/// One quarter-hour of recorded market data.
struct MarketRow {
    std::int64_t timestamp = 0; ///< UTC seconds, start of the settlement period
    double imbalance_mw = 0.0;
    double p_mdp = 0.0;
    double p_mip = 0.0;
    double solar_id = 0.0, solar_da = 0.0;
    double wind_id = 0.0, wind_da = 0.0;
    double load_id = 0.0, load_da = 0.0;
    double price_da = 0.0, price_id = 0.0;
    std::vector<double> o_down; ///< downward reserve prices over the grid
    std::vector<double> o_up;   ///< upward reserve prices over the grid

    bool operator==(const MarketRow&) const = default;
};

/// Column contract of the market CSV. Ladder columns are named
/// <direction>_<product>_<volume>, e.g. up_mfrr_700.
struct MarketCsvSchema {
    ReserveGrid grid = ReserveGrid::belgian();

    static constexpr const char* kScalarColumns[] = {"timestamp", "imbalance_mw", "p_mdp",   "p_mip",
                                                     "solar_id",  "solar_da",     "wind_id", "wind_da",
                                                     "load_id",   "load_da",      "price_da", "price_id"};

    [[nodiscard]] std::vector<std::string> ladder_columns(std::string_view direction) const {
        std::vector<std::string> out;
        auto add = [&](std::string_view product, const std::vector<double>& vols) {
            for (double v : vols) {
                std::ostringstream os;
                os << direction << '_' << product << '_' << v;
                out.push_back(os.str());
            }
        };
        add("afrr", grid.afrr_volumes);
        add("mfrr", grid.mfrr_volumes);
        return out;
    }

    [[nodiscard]] std::vector<std::string> columns() const {
        std::vector<std::string> out(std::begin(kScalarColumns), std::end(kScalarColumns));
        for (const char* dir : {"down", "up"}) {
            const auto l = ladder_columns(dir);
            out.insert(out.end(), l.begin(), l.end());
        }
        return out;
    }
};

/// Problem found while reading a file; row is the 1-based file line.
struct Diagnostic {
    std::size_t row = 0;
    std::string message;
};

class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::vector<Diagnostic> diags)
        : std::runtime_error(what + summarize(diags)), diagnostics(std::move(diags)) {}

    std::vector<Diagnostic> diagnostics;

private:
    static std::string summarize(const std::vector<Diagnostic>& d) {
        std::string s;
        for (std::size_t i = 0; i < d.size() && i < 10; ++i) {
            s += "\n  line " + std::to_string(d[i].row) + ": " + d[i].message;
        }
        if (d.size() > 10) s += "\n  ... " + std::to_string(d.size() - 10) + " more";
        return s;
    }
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto c = line.find(',', start);
        out.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
        if (c == std::string_view::npos) break;
        start = c + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().remove_suffix(1);
    return out;
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc{} && r.ptr == s.data() + s.size() && std::isfinite(out);
}

/// Shortest text that reads back to the same double.
inline void put_double(std::string& out, double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

} // namespace detail

struct LoadOptions {
    /// Missing quarter-hours are reported as errors unless allowed.
    bool allow_gaps = false;
};

/// Parses market CSV text. All problems are collected and thrown together.
inline std::vector<MarketRow> parse_market_csv(std::istream& in, const MarketCsvSchema& schema = {},
                                               const LoadOptions& opt = {}) {
    std::vector<Diagnostic> diags;
    std::string line;
    std::size_t line_no = 0;
    // Header: every schema column must be present, in any order.
    do {
        if (!std::getline(in, line)) throw DataError("empty market file", {});
        ++line_no;
    } while (!line.empty() && line[0] == '#');
    const auto header = detail::split_csv(line);
    std::map<std::string, std::size_t, std::less<>> where;
    for (std::size_t i = 0; i < header.size(); ++i) where.emplace(std::string(header[i]), i);
    const auto cols = schema.columns();
    std::vector<std::size_t> idx;
    for (const auto& c : cols) {
        auto it = where.find(c);
        if (it == where.end()) {
            diags.push_back({line_no, "missing column " + c});
        } else {
            idx.push_back(it->second);
        }
    }
    if (!diags.empty()) throw DataError("market CSV does not match the schema", diags);

    const std::size_t n_ladder = schema.grid.size();
    std::vector<MarketRow> rows;
    std::vector<double> vals(cols.size());
    // Continuity is checked against the last readable timestamp, so one bad
    // row yields one diagnostic rather than a trail of gaps.
    std::optional<std::int64_t> last;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        const auto f = detail::split_csv(line);
        const std::size_t before = diags.size();
        MarketRow r;
        bool have_time = false;
        if (idx[0] < f.size()) {
            try {
                r.timestamp = parse_utc(f[idx[0]]);
                have_time = true;
            } catch (const std::invalid_argument& e) {
                diags.push_back({line_no, e.what()});
            }
        }
        // An unreadable timestamp is assumed to occupy the next slot.
        if (!have_time && last) *last += kQuarterHour;
        if (have_time) {
            if (r.timestamp % kQuarterHour != 0) {
                diags.push_back({line_no, "timestamp " + format_utc(r.timestamp) + " is not quarter-hour aligned"});
                have_time = false;
                if (last) *last += kQuarterHour;
            } else if (last && r.timestamp == *last) {
                diags.push_back({line_no, "duplicate timestamp " + format_utc(r.timestamp)});
            } else if (last && r.timestamp < *last) {
                diags.push_back({line_no, "timestamp " + format_utc(r.timestamp) + " goes back in time"});
            } else {
                if (last && r.timestamp != *last + kQuarterHour && !opt.allow_gaps) {
                    diags.push_back({line_no, "gap of " + std::to_string((r.timestamp - *last) / kQuarterHour - 1) +
                                                  " quarter-hours before " + format_utc(r.timestamp)});
                }
                last = r.timestamp;
            }
        }
        if (f.size() != header.size()) {
            diags.push_back({line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                          std::to_string(f.size())});
            continue;
        }
        for (std::size_t c = 1; c < cols.size(); ++c) {
            if (!detail::parse_double(f[idx[c]], vals[c])) {
                diags.push_back({line_no, "column " + cols[c] + ": not a finite number '" + std::string(f[idx[c]]) + "'"});
            }
        }
        if (diags.size() != before || !have_time) continue;
        double* scalars[] = {nullptr,     &r.imbalance_mw, &r.p_mdp,   &r.p_mip,    &r.solar_id, &r.solar_da,
                             &r.wind_id,  &r.wind_da,      &r.load_id, &r.load_da,  &r.price_da, &r.price_id};
        const std::size_t n_scalar = std::size(MarketCsvSchema::kScalarColumns);
        for (std::size_t c = 1; c < n_scalar; ++c) *scalars[c] = vals[c];
        r.o_down.assign(vals.begin() + static_cast<std::ptrdiff_t>(n_scalar),
                        vals.begin() + static_cast<std::ptrdiff_t>(n_scalar + n_ladder));
        r.o_up.assign(vals.begin() + static_cast<std::ptrdiff_t>(n_scalar + n_ladder), vals.end());
        rows.push_back(std::move(r));
    }
    if (!diags.empty()) throw DataError("market CSV failed validation", diags);
    return rows;
}

inline std::vector<MarketRow> load_market_csv(const std::filesystem::path& path, const MarketCsvSchema& schema = {},
                                              const LoadOptions& opt = {}) {
    auto in = detail::open_for_read(path);
    try {
        return parse_market_csv(in, schema, opt);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": ", e.diagnostics);
    }
}

inline std::string market_csv(std::span<const MarketRow> rows, const MarketCsvSchema& schema = {}) {
    std::string out;
    const auto cols = schema.columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += ',';
        out += cols[i];
    }
    out += '\n';
    for (const auto& r : rows) {
        if (r.o_down.size() != schema.grid.size() || r.o_up.size() != schema.grid.size()) {
            throw std::invalid_argument("reserve ladder does not match the schema grid");
        }
        out += format_utc(r.timestamp);
        for (double v : {r.imbalance_mw, r.p_mdp, r.p_mip, r.solar_id, r.solar_da, r.wind_id, r.wind_da, r.load_id,
                         r.load_da, r.price_da, r.price_id}) {
            out += ',';
            detail::put_double(out, v);
        }
        for (const auto* ladder : {&r.o_down, &r.o_up}) {
            for (double v : *ladder) {
                out += ',';
                detail::put_double(out, v);
            }
        }
        out += '\n';
    }
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------------------
// Order-book ladder CSV: timestamp,side,level,price,volume
// One snapshot per settlement period, taken when the strategy trades. Level 0
// is the best price; asks ascend and bids descend.

using OrderBooks = std::map<std::int64_t, OrderBook>;

inline OrderBooks parse_order_books(std::istream& in) {
    std::vector<Diagnostic> diags;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("empty order-book file", {});
    ++line_no;
    if (detail::split_csv(line) != std::vector<std::string_view>{"timestamp", "side", "level", "price", "volume"}) {
        throw DataError("order-book CSV does not match the schema", {{1, "expected header timestamp,side,level,price,volume"}});
    }
    OrderBooks books;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 5) {
            diags.push_back({line_no, "expected 5 fields"});
            continue;
        }
        std::int64_t t = 0;
        try {
            t = parse_utc(f[0]);
        } catch (const std::invalid_argument& e) {
            diags.push_back({line_no, e.what()});
            continue;
        }
        double level = 0, price = 0, volume = 0;
        if (!detail::parse_double(f[2], level) || !detail::parse_double(f[3], price) ||
            !detail::parse_double(f[4], volume) || (f[1] != "ask" && f[1] != "bid")) {
            diags.push_back({line_no, "malformed order-book level"});
            continue;
        }
        auto& side = f[1] == "ask" ? books[t].asks : books[t].bids;
        if (level != static_cast<double>(side.size())) {
            diags.push_back({line_no, "levels must be listed in order from 0"});
            continue;
        }
        side.push_back({price, volume});
    }
    for (const auto& [t, b] : books) {
        try {
            b.validate();
        } catch (const std::invalid_argument& e) {
            diags.push_back({0, format_utc(t) + ": " + e.what()});
        }
    }
    if (!diags.empty()) throw DataError("order-book CSV failed validation", diags);
    return books;
}

inline OrderBooks load_order_books(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    try {
        return parse_order_books(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": ", e.diagnostics);
    }
}

inline std::string order_book_csv(const OrderBooks& books) {
    std::string out = "timestamp,side,level,price,volume\n";
    for (const auto& [t, b] : books) {
        for (const auto* side : {&b.asks, &b.bids}) {
            for (std::size_t i = 0; i < side->size(); ++i) {
                out += format_utc(t);
                out += side == &b.asks ? ",ask," : ",bid,";
                out += std::to_string(i);
                out += ',';
                detail::put_double(out, (*side)[i].price);
                out += ',';
                detail::put_double(out, (*side)[i].volume);
                out += '\n';
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Features

/// Lags of the system imbalance available at trading time: the last hour
/// before the one-hour gate closure.
inline constexpr std::size_t kFirstLag = 5;
inline constexpr std::size_t kLastLag = 8;
inline constexpr std::size_t kQuarters = 96;

inline std::vector<std::string> feature_names() {
    std::vector<std::string> n;
    for (std::size_t l = kFirstLag; l <= kLastLag; ++l) n.push_back("s_lag" + std::to_string(l));
    for (std::size_t q = 0; q < kQuarters; ++q) n.push_back("qh_" + std::to_string(q));
    for (const char* v : {"solar", "wind", "load"}) n.push_back(std::string(v) + "_id_minus_da");
    for (const char* v : {"solar", "wind", "load"}) n.push_back(std::string(v) + "_id_dev_hour");
    n.push_back("price_id_minus_da");
    return n;
}

/// Columns of the exogenous block (everything but the imbalance lags), used
/// by the dynamic transition models.
inline constexpr std::size_t kExogenousBegin = kLastLag - kFirstLag + 1;

struct FeatureSet {
    std::vector<std::string> names;
    std::vector<std::size_t> source_row; ///< index into the raw rows
    FeatureMatrix x;
};

/// Weight-model inputs per row. Rows whose lags are not all present in the
/// data are dropped.
inline FeatureSet build_features(std::span<const MarketRow> rows) {
    FeatureSet fs;
    fs.names = feature_names();
    std::map<std::int64_t, std::size_t> by_time;
    for (std::size_t i = 0; i < rows.size(); ++i) by_time.emplace(rows[i].timestamp, i);
    // Clock-hour means of the intraday forecasts.
    std::map<std::int64_t, std::array<double, 4>> hourly; // solar, wind, load, count
    for (const auto& r : rows) {
        auto& h = hourly[r.timestamp - r.timestamp % 3600];
        h[0] += r.solar_id;
        h[1] += r.wind_id;
        h[2] += r.load_id;
        h[3] += 1.0;
    }
    std::vector<double> f(fs.names.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        bool have_lags = true;
        for (std::size_t l = kFirstLag; l <= kLastLag && have_lags; ++l) {
            auto it = by_time.find(r.timestamp - static_cast<std::int64_t>(l) * kQuarterHour);
            if (it == by_time.end()) {
                have_lags = false;
            } else {
                f[l - kFirstLag] = rows[it->second].imbalance_mw;
            }
        }
        if (!have_lags) continue;
        std::fill(f.begin() + kExogenousBegin, f.end(), 0.0);
        std::size_t k = kExogenousBegin;
        f[k + local_quarter_of_day(r.timestamp)] = 1.0;
        k += kQuarters;
        f[k++] = r.solar_id - r.solar_da;
        f[k++] = r.wind_id - r.wind_da;
        f[k++] = r.load_id - r.load_da;
        const auto& h = hourly.at(r.timestamp - r.timestamp % 3600);
        f[k++] = r.solar_id - h[0] / h[3];
        f[k++] = r.wind_id - h[1] / h[3];
        f[k++] = r.load_id - h[2] / h[3];
        f[k++] = r.price_id - r.price_da;
        fs.x.push_row(f);
        fs.source_row.push_back(i);
    }
    if (fs.x.rows() == 0 && !rows.empty()) {
        throw std::invalid_argument("not enough history for the imbalance lags");
    }
    return fs;
}

/// Column subset of a feature matrix.
inline FeatureMatrix select_columns(const FeatureMatrix& x, std::size_t begin, std::size_t end) {
    FeatureMatrix out(x.rows(), end - begin);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = x.row(i);
        std::copy(r.begin() + static_cast<std::ptrdiff_t>(begin), r.begin() + static_cast<std::ptrdiff_t>(end),
                  out.row(i).begin());
    }
    return out;
}

/// Out-of-fold predictions of the regular weight model over k contiguous,
/// time-ordered folds: each row's value comes from a model that never saw it.
inline std::vector<double> cross_validated_weights(const FeatureMatrix& x, std::span<const std::uint8_t> labels,
                                                   std::size_t k = 5, const LogisticFitOptions& opt = {}) {
    if (k < 2) throw std::invalid_argument("k-fold preparation needs k >= 2");
    if (x.rows() < k) throw std::invalid_argument("fewer rows than folds");
    std::vector<double> out(x.rows());
    for (std::size_t fold = 0; fold < k; ++fold) {
        const std::size_t lo = x.rows() * fold / k, hi = x.rows() * (fold + 1) / k;
        FeatureMatrix train;
        std::vector<std::uint8_t> y;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (i >= lo && i < hi) continue;
            train.push_row(x.row(i));
            y.push_back(labels[i]);
        }
        const auto m = fit_logistic(train, y, opt).model;
        for (std::size_t i = lo; i < hi; ++i) out[i] = m.predict(x.row(i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Data directory

/// Relative paths resolve against $IMBALANCE_DATA_DIR when it is set.
inline std::filesystem::path data_path(const std::filesystem::path& p) {
    if (p.is_absolute()) return p;
    if (const char* dir = std::getenv("IMBALANCE_DATA_DIR"); dir && *dir) return std::filesystem::path(dir) / p;
    return p;
}

// ---------------------------------------------------------------------------
// Synthetic market

/// Generator settings. Forecast errors and the intraday-day-ahead spread are
/// unit-variance AR(1) processes; the regime is Bernoulli with a logit that
/// is linear in them, so a logistic weight model on the engineered features
/// is well specified.
struct SyntheticConfig {
    std::uint64_t seed = 7;
    std::size_t periods = 96 * 28;
    std::int64_t start = 1704067200; ///< 2024-01-01T00:00:00Z
    double persistence = 0.95;       ///< AR(1) coefficient of the forecast errors
    double signal = 1.5;             ///< scale of the feature part of the regime logit
    double base_logit = 0.2;
    double price_level = 90.0;       ///< EUR/MWh
    double daily_amplitude = 20.0;
    double gap_mean = 120.0;         ///< MIP ladder intercept minus MDP ladder intercept
    double gap_sd = 20.0;
    double price_noise_sd = 5.0;
    double activation_noise_sd = 0.2; ///< log-normal spread of the activated volume
    double activation_gain = 3.0;     ///< how sharply the activation mix follows the regime probability
    double k_mdp = 0.40;              ///< EUR/MWh per MW
    double k_mip = 0.41;
    std::size_t book_levels = 3;
    double book_depth = 2.0; ///< MW per level
    double half_spread = 1.0;
    double level_step = 2.0;
    ReserveGrid grid = ReserveGrid::belgian();

    void validate() const {
        if (periods == 0) throw std::invalid_argument("periods must be positive");
        if (start % kQuarterHour != 0) throw std::invalid_argument("start must be quarter-hour aligned");
        if (!(persistence >= 0.0 && persistence < 1.0)) throw std::invalid_argument("persistence must lie in [0, 1)");
        for (double v : {daily_amplitude, gap_sd, price_noise_sd, activation_noise_sd}) {
            if (!(v >= 0.0)) throw std::invalid_argument("variances and amplitudes must be non-negative");
        }
        if (book_levels == 0 || !(book_depth > 0.0)) throw std::invalid_argument("order books need depth");
        grid.validate();
    }

    /// Regulation prices exactly equal to the planted softmax inner products
    /// and affine in s_t within each regime.
    static SyntheticConfig noise_free() {
        SyntheticConfig c;
        c.daily_amplitude = 0.0;
        c.gap_sd = 0.0;
        c.price_noise_sd = 0.0;
        c.activation_noise_sd = 0.0;
        return c;
    }
};

/// Generating parameters, for recovery tests.
struct SyntheticTruth {
    ImpactParams impact;             ///< planted K, beta = 1
    std::vector<double> pi;          ///< P(s_t >= 0) per row
    std::vector<Regime> regime;
    /// The planted price models take z = pi.
    SoftmaxPriceModel down_activation;
    SoftmaxPriceModel up_activation;
};

struct SyntheticMarket {
    std::vector<MarketRow> rows;
    OrderBooks books;
    SyntheticTruth truth;
};

inline SyntheticMarket generate_synthetic_market(const SyntheticConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<double> vols = cfg.grid.afrr_volumes;
    vols.insert(vols.end(), cfg.grid.mfrr_volumes.begin(), cfg.grid.mfrr_volumes.end());
    const double v_max = *std::max_element(vols.begin(), vols.end());
    const std::size_t r = vols.size();

    SyntheticMarket out;
    auto& truth = out.truth;
    truth.impact = {1.0, cfg.k_mdp, cfg.k_mip};
    // Down activations grow with pi, up activations shrink with it.
    truth.down_activation = SoftmaxPriceModel::zeros(r, 1);
    truth.up_activation = SoftmaxPriceModel::zeros(r, 1);
    for (std::size_t k = 0; k < r; ++k) {
        const double g = cfg.activation_gain * vols[k] / v_max;
        truth.down_activation.weights[k] = 2.0 * g;
        truth.down_activation.biases[k] = -g;
        truth.up_activation.weights[k] = -2.0 * g;
        truth.up_activation.biases[k] = g;
    }

    const double rho = cfg.persistence;
    const double innov = std::sqrt(1.0 - rho * rho);
    double e_solar = normal(rng), e_wind = normal(rng), e_load = normal(rng), e_price = normal(rng);
    const double pi_const = 3.14159265358979323846;
    std::vector<double> o_down(r), o_up(r), z(1);

    for (std::size_t t = 0; t < cfg.periods; ++t) {
        MarketRow row;
        row.timestamp = cfg.start + static_cast<std::int64_t>(t) * kQuarterHour;
        const double hour = static_cast<double>(row.timestamp % kDay) / 3600.0;
        e_solar = rho * e_solar + innov * normal(rng);
        e_wind = rho * e_wind + innov * normal(rng);
        e_load = rho * e_load + innov * normal(rng);
        e_price = rho * e_price + innov * normal(rng);

        row.solar_da = 800.0 * std::max(0.0, std::sin(pi_const * (hour - 6.0) / 12.0));
        row.solar_id = row.solar_da + 50.0 * e_solar;
        row.wind_da = 1500.0 + 300.0 * std::sin(2.0 * pi_const * static_cast<double>(t) / (96.0 * 5.0));
        row.wind_id = row.wind_da + 100.0 * e_wind;
        row.load_da = 9000.0 + 1500.0 * std::sin(2.0 * pi_const * (hour - 9.0) / 24.0);
        row.load_id = row.load_da + 150.0 * e_load;
        const double level = cfg.price_level + cfg.daily_amplitude * std::sin(2.0 * pi_const * (hour - 8.0) / 24.0);
        row.price_da = level;
        row.price_id = level + 10.0 * e_price;

        // Surplus when renewables beat their forecast, shortage when load does
        // or the intraday market trades above day-ahead.
        const double eta = cfg.base_logit + cfg.signal * 0.5 * (e_wind + e_solar - e_load - e_price);
        const double pi = sigmoid(eta);
        const Regime regime = unif(rng) < pi ? Regime::mdp : Regime::mip;

        const double gap = std::max(0.0, cfg.gap_mean + cfg.gap_sd * normal(rng));
        const double c_down = level - 0.5 * gap, c_up = level + 0.5 * gap;
        for (std::size_t k = 0; k < r; ++k) {
            o_down[k] = c_down - cfg.k_mdp * vols[k];
            o_up[k] = c_up + cfg.k_mip * vols[k];
        }
        z[0] = pi;
        const auto w_down = softmax_weights(truth.down_activation, z);
        const auto w_up = softmax_weights(truth.up_activation, z);
        const double sa = cfg.activation_noise_sd;
        const double a_down = dot(w_down, vols) * std::exp(sa * normal(rng) - 0.5 * sa * sa);
        const double a_up = dot(w_up, vols) * std::exp(sa * normal(rng) - 0.5 * sa * sa);
        const double noise_down = cfg.price_noise_sd * normal(rng);
        const double noise_up = cfg.price_noise_sd * normal(rng);
        row.imbalance_mw = regime == Regime::mdp ? a_down : -a_up;
        // The ladders are affine in volume, so <w, o> = c - K <w, v>.
        row.p_mdp = (sa == 0.0 ? dot(w_down, o_down) : c_down - cfg.k_mdp * a_down) + noise_down;
        row.p_mip = (sa == 0.0 ? dot(w_up, o_up) : c_up + cfg.k_mip * a_up) + noise_up;
        row.o_down = o_down;
        row.o_up = o_up;

        OrderBook book;
        for (std::size_t l = 0; l < cfg.book_levels; ++l) {
            const double step = cfg.half_spread + cfg.level_step * static_cast<double>(l);
            book.asks.push_back({row.price_id + step, cfg.book_depth});
            book.bids.push_back({row.price_id - step, cfg.book_depth});
        }
        out.books.emplace(row.timestamp, std::move(book));
        truth.pi.push_back(pi);
        truth.regime.push_back(regime);
        out.rows.push_back(std::move(row));
    }
    return out;
}

} // namespace imbalance
