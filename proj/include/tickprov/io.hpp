#pragma once

// File formats.
//
// Market conditions, snapshots, allocations and configs are JSON objects
// carrying "schema_version": 1. Swap events, liquidity tables and result
// tables are CSV with a mandatory header row. Numbers are written in their
// shortest round-trip form, so every file re-reads to the same value.

#include "tickprov/backtest.hpp"
#include "tickprov/config.hpp"
#include "tickprov/core.hpp"
#include "tickprov/estimate.hpp"
#include "tickprov/volume.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace tickprov::io {

using json = nlohmann::json;
inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Numbers and files

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& text, const std::string& where) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
    if (first < last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        throw Error(ErrorKind::Schema, where + ": '" + text + "' is not a number", where);
    }
    return v;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Schema, "cannot open '" + path.string() + "'", path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Schema, "cannot write '" + path.string() + "'", path.string());
    out << text;
}

// ---------------------------------------------------------------------------
// JSON helpers

inline json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw Error(ErrorKind::Schema,
                    source + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")",
                    source);
    }
}

namespace detail {

inline const json& field(const json& j, const std::string& name, const std::string& ctx) {
    if (!j.is_object()) throw Error(ErrorKind::Schema, ctx + " must be a JSON object", ctx);
    const auto it = j.find(name);
    if (it == j.end()) {
        throw Error(ErrorKind::Schema, ctx + ": missing field '" + name + "'", name);
    }
    return *it;
}

inline double number(const json& j, const std::string& name) {
    if (!j.is_number()) throw Error(ErrorKind::Schema, "field '" + name + "' must be a number", name);
    return j.get<double>();
}

inline std::string text(const json& j, const std::string& name) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    throw Error(ErrorKind::Schema, "field '" + name + "' must be a string", name);
}

inline std::vector<double> numbers(const json& j, const std::string& name) {
    if (!j.is_array()) throw Error(ErrorKind::Schema, "field '" + name + "' must be an array", name);
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(number(j[i], name + "[" + std::to_string(i) + "]"));
    return out;
}

inline void check_version(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw Error(ErrorKind::Schema, ctx + " must be a JSON object", ctx);
    const auto it = j.find("schema_version");
    if (it != j.end() && !(it->is_number_integer() && it->get<int>() == kSchemaVersion)) {
        throw Error(ErrorKind::Schema, ctx + ": unsupported schema_version", "schema_version");
    }
}

inline json tick_json(const TickSpec& t) {
    return {{"id", t.id},
            {"pool_id", t.pool_id},
            {"price_lo", t.price_lo},
            {"price_hi", t.price_hi},
            {"fee_rate", t.fee_rate}};
}

inline TickSpec tick_from(const json& j, const std::string& ctx) {
    TickSpec t;
    t.id = text(field(j, "id", ctx), "id");
    if (j.contains("pool_id")) t.pool_id = text(j["pool_id"], "pool_id");
    t.price_lo = number(field(j, "price_lo", ctx), "price_lo");
    t.price_hi = number(field(j, "price_hi", ctx), "price_hi");
    t.fee_rate = number(field(j, "fee_rate", ctx), "fee_rate");
    return t;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Market conditions

inline json to_json(const MarketConditions& mc) {
    json j = {{"schema_version", kSchemaVersion},
              {"d", mc.d},
              {"current_price", mc.current_price},
              {"a", mc.a},
              {"b", mc.b}};
    if (!mc.c.empty()) j["c"] = mc.c;
    if (!mc.ticks.empty()) {
        json ticks = json::array();
        for (const auto& t : mc.ticks) ticks.push_back(detail::tick_json(t));
        j["ticks"] = std::move(ticks);
    }
    return j;
}

inline MarketConditions conditions_from_json(const json& j) {
    const std::string ctx = "market conditions";
    detail::check_version(j, ctx);
    MarketConditions mc;
    mc.d = detail::number(detail::field(j, "d", ctx), "d");
    mc.a = detail::numbers(detail::field(j, "a", ctx), "a");
    mc.b = detail::numbers(detail::field(j, "b", ctx), "b");
    if (j.contains("c")) mc.c = detail::numbers(j["c"], "c");
    if (j.contains("current_price")) mc.current_price = detail::number(j["current_price"], "current_price");
    if (j.contains("ticks")) {
        const auto& ticks = j["ticks"];
        if (!ticks.is_array()) throw Error(ErrorKind::Schema, "field 'ticks' must be an array", "ticks");
        for (std::size_t i = 0; i < ticks.size(); ++i)
            mc.ticks.push_back(detail::tick_from(ticks[i], "ticks[" + std::to_string(i) + "]"));
    }
    return mc;
}

/// Tick identifiers, falling back to positions when ticks are absent.
inline std::vector<std::string> tick_ids(const MarketConditions& mc) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < mc.size(); ++i)
        ids.push_back(i < mc.ticks.size() ? mc.ticks[i].id : std::to_string(i));
    return ids;
}

// ---------------------------------------------------------------------------
// Allocation

inline const char* to_string(SolveStatus s) {
    return s == SolveStatus::Optimal ? "optimal" : "suboptimal";
}

inline json to_json(const Allocation& a, const std::string& problem,
                    const std::vector<std::string>& ids) {
    return {{"schema_version", kSchemaVersion},
            {"problem", problem},
            {"status", to_string(a.status)},
            {"tick_ids", ids},
            {"x", a.x},
            {"dual", a.dual},
            {"objective", a.objective},
            {"kkt_residual", a.kkt_residual},
            {"iterations", a.iterations}};
}

inline Allocation allocation_from_json(const json& j) {
    const std::string ctx = "allocation";
    detail::check_version(j, ctx);
    Allocation a;
    a.x = detail::numbers(detail::field(j, "x", ctx), "x");
    a.dual = detail::number(detail::field(j, "dual", ctx), "dual");
    a.objective = detail::number(detail::field(j, "objective", ctx), "objective");
    a.kkt_residual = detail::number(detail::field(j, "kkt_residual", ctx), "kkt_residual");
    if (j.contains("iterations")) a.iterations = j["iterations"].get<int>();
    if (j.contains("status"))
        a.status = j["status"] == "optimal" ? SolveStatus::Optimal : SolveStatus::Suboptimal;
    return a;
}

// ---------------------------------------------------------------------------
// Run config

inline json to_json(const RunConfig& c) {
    return {{"schema_version", kSchemaVersion},
            {"d", c.d},
            {"horizon_days", c.horizon_days},
            {"train_days", c.train_days},
            {"stride_days", c.stride_days},
            {"sigma", c.sigma},
            {"drift", c.drift},
            {"range_pct", c.range_pct},
            {"candidate_pct", c.candidate_pct},
            {"epsilon_b", c.epsilon_b},
            {"quad_points", c.quad_points},
            {"quad_span", c.quad_span},
            {"seed", c.seed},
            {"hedge_base", c.hedge_base},
            {"strategies", c.strategies},
            {"renormalize_volume", c.renormalize_volume},
            {"bracket_hints", c.bracket_hints},
            {"parallel", c.parallel}};
}

/// Reads the fields present in `j` over `base`; unknown fields are errors.
inline RunConfig config_from_json(const json& j, RunConfig base = {}) {
    detail::check_version(j, "config");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "schema_version") continue;
            else if (key == "d") base.d = detail::number(value, key);
            else if (key == "horizon_days") base.horizon_days = detail::number(value, key);
            else if (key == "train_days") base.train_days = detail::number(value, key);
            else if (key == "stride_days") base.stride_days = detail::number(value, key);
            else if (key == "sigma") base.sigma = detail::number(value, key);
            else if (key == "drift") base.drift = detail::number(value, key);
            else if (key == "range_pct") base.range_pct = detail::number(value, key);
            else if (key == "candidate_pct") base.candidate_pct = detail::number(value, key);
            else if (key == "epsilon_b") base.epsilon_b = detail::number(value, key);
            else if (key == "quad_points") base.quad_points = value.get<int>();
            else if (key == "quad_span") base.quad_span = detail::number(value, key);
            else if (key == "seed") base.seed = value.get<std::uint64_t>();
            else if (key == "hedge_base") base.hedge_base = value.get<std::string>();
            else if (key == "strategies") base.strategies = value.get<std::vector<std::string>>();
            else if (key == "renormalize_volume") base.renormalize_volume = value.get<bool>();
            else if (key == "bracket_hints") base.bracket_hints = value.get<bool>();
            else if (key == "parallel") base.parallel = value.get<bool>();
            else throw Error(ErrorKind::Schema, "config: unknown field '" + key + "'", key);
        } catch (const json::exception&) {
            throw Error(ErrorKind::Schema, "config: field '" + key + "' has the wrong type", key);
        }
    }
    return base;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines; // source line of each row

    std::size_t column(const std::string& name, const std::string& source) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error(ErrorKind::Schema, source + ": missing column '" + name + "'", name);
    }

    std::optional<std::size_t> find_column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline CsvTable parse_csv(const std::string& text, const std::string& source) {
    CsvTable t;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw Error(ErrorKind::Schema,
                        source + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(t.header.size()) + " fields, found " +
                            std::to_string(cells.size()),
                        source);
        }
        t.rows.push_back(std::move(cells));
        t.lines.push_back(lineno);
    }
    if (t.header.empty()) throw Error(ErrorKind::Schema, source + ": missing header row", source);
    return t;
}

inline std::string cell_where(const std::string& source, std::size_t line, const std::string& col) {
    return source + ":" + std::to_string(line) + " field '" + col + "'";
}

// Swap events ---------------------------------------------------------------

inline std::string swaps_to_csv(const std::vector<SwapEvent>& events) {
    bool blocks = false;
    for (const auto& e : events) blocks = blocks || !e.block.empty();
    std::ostringstream os;
    os << "timestamp,pool_id,price_before,price_after,volume_stable" << (blocks ? ",block" : "")
       << "\n";
    for (const auto& e : events) {
        os << format_number(e.timestamp) << ',' << e.pool_id << ',' << format_number(e.price_before)
           << ',' << format_number(e.price_after) << ',' << format_number(e.volume_stable);
        if (blocks) os << ',' << e.block;
        os << '\n';
    }
    return os.str();
}

/// Parses swap events and sorts them by timestamp (stable).
inline std::vector<SwapEvent> swaps_from_csv(const std::string& text,
                                             const std::string& source = "swaps.csv") {
    const auto t = parse_csv(text, source);
    const auto c_ts = t.column("timestamp", source);
    const auto c_pool = t.column("pool_id", source);
    const auto c_pb = t.column("price_before", source);
    const auto c_pa = t.column("price_after", source);
    const auto c_vol = t.column("volume_stable", source);
    const auto c_block = t.find_column("block");
    std::vector<SwapEvent> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const auto line = t.lines[r];
        SwapEvent e;
        e.timestamp = parse_number(row[c_ts], cell_where(source, line, "timestamp"));
        e.pool_id = row[c_pool];
        e.price_before = parse_number(row[c_pb], cell_where(source, line, "price_before"));
        e.price_after = parse_number(row[c_pa], cell_where(source, line, "price_after"));
        e.volume_stable = parse_number(row[c_vol], cell_where(source, line, "volume_stable"));
        if (c_block) e.block = row[*c_block];
        try {
            validate_swap(e);
        } catch (const Error& err) {
            throw Error(ErrorKind::Schema, source + ":" + std::to_string(line) + ": " + err.what(),
                        err.field());
        }
        out.push_back(std::move(e));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const SwapEvent& l, const SwapEvent& r) { return l.timestamp < r.timestamp; });
    return out;
}

// Liquidity snapshots --------------------------------------------------------

inline std::string snapshots_to_csv(const std::vector<LiquiditySnapshot>& snaps) {
    const bool stamped = snaps.size() > 1 || (snaps.size() == 1 && snaps[0].timestamp != 0.0);
    std::ostringstream os;
    os << "tick_id,pool_id,price_lo,price_hi,fee_rate,liquidity_value_stable"
       << (stamped ? ",timestamp" : "") << "\n";
    for (const auto& s : snaps) {
        for (std::size_t i = 0; i < s.ticks.size(); ++i) {
            const auto& t = s.ticks[i];
            os << t.id << ',' << t.pool_id << ',' << format_number(t.price_lo) << ','
               << format_number(t.price_hi) << ',' << format_number(t.fee_rate) << ','
               << format_number(s.liquidity[i]);
            if (stamped) os << ',' << format_number(s.timestamp);
            os << '\n';
        }
    }
    return os.str();
}

/// Rows sharing a timestamp form one snapshot; without a timestamp column
/// the whole table is a single snapshot at time 0.
inline std::vector<LiquiditySnapshot> snapshots_from_csv(const std::string& text,
                                                         const std::string& source = "liquidity.csv") {
    const auto t = parse_csv(text, source);
    const auto c_id = t.column("tick_id", source);
    const auto c_pool = t.column("pool_id", source);
    const auto c_lo = t.column("price_lo", source);
    const auto c_hi = t.column("price_hi", source);
    const auto c_fee = t.column("fee_rate", source);
    const auto c_liq = t.column("liquidity_value_stable", source);
    const auto c_ts = t.find_column("timestamp");
    std::map<double, LiquiditySnapshot> by_time;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const auto line = t.lines[r];
        TickSpec tick;
        tick.id = row[c_id];
        tick.pool_id = row[c_pool];
        tick.price_lo = parse_number(row[c_lo], cell_where(source, line, "price_lo"));
        tick.price_hi = parse_number(row[c_hi], cell_where(source, line, "price_hi"));
        tick.fee_rate = parse_number(row[c_fee], cell_where(source, line, "fee_rate"));
        const double liq = parse_number(row[c_liq], cell_where(source, line, "liquidity_value_stable"));
        const double ts = c_ts ? parse_number(row[*c_ts], cell_where(source, line, "timestamp")) : 0.0;
        auto& snap = by_time[ts];
        snap.timestamp = ts;
        snap.ticks.push_back(std::move(tick));
        snap.liquidity.push_back(liq);
    }
    std::vector<LiquiditySnapshot> out;
    for (auto& [ts, snap] : by_time) {
        try {
            validate_snapshot(snap);
        } catch (const Error& err) {
            throw Error(ErrorKind::Schema, source + ": " + err.what(), err.field());
        }
        out.push_back(std::move(snap));
    }
    if (out.empty()) throw Error(ErrorKind::Schema, source + ": no liquidity rows", source);
    return out;
}

inline json to_json(const LiquiditySnapshot& s) {
    json ticks = json::array();
    for (std::size_t i = 0; i < s.ticks.size(); ++i) {
        auto t = detail::tick_json(s.ticks[i]);
        t["liquidity_value_stable"] = s.liquidity[i];
        ticks.push_back(std::move(t));
    }
    return {{"schema_version", kSchemaVersion}, {"timestamp", s.timestamp}, {"ticks", ticks}};
}

inline LiquiditySnapshot snapshot_from_json(const json& j) {
    const std::string ctx = "snapshot";
    detail::check_version(j, ctx);
    LiquiditySnapshot s;
    if (j.contains("timestamp")) s.timestamp = detail::number(j["timestamp"], "timestamp");
    const auto& ticks = detail::field(j, "ticks", ctx);
    if (!ticks.is_array()) throw Error(ErrorKind::Schema, "field 'ticks' must be an array", "ticks");
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        const std::string where = "ticks[" + std::to_string(i) + "]";
        s.ticks.push_back(detail::tick_from(ticks[i], where));
        s.liquidity.push_back(detail::number(
            detail::field(ticks[i], "liquidity_value_stable", where), "liquidity_value_stable"));
    }
    validate_snapshot(s);
    return s;
}

/// Loads snapshots from a .json file (one snapshot) or a .csv table.
inline std::vector<LiquiditySnapshot> load_snapshots(const std::filesystem::path& path) {
    const auto text = read_file(path);
    if (path.extension() == ".json") return {snapshot_from_json(parse_json(text, path.string()))};
    return snapshots_from_csv(text, path.string());
}

// Results --------------------------------------------------------------------

inline json to_json(const PeriodResult& r) {
    return {{"strategy", r.strategy},
            {"fee_income", r.fee_income},
            {"reserve_pnl", r.reserve_pnl},
            {"hedge_pnl", r.hedge_pnl},
            {"return_pct", r.return_pct}};
}

inline PeriodResult period_result_from_json(const json& j) {
    const std::string ctx = "period result";
    PeriodResult r;
    r.strategy = detail::text(detail::field(j, "strategy", ctx), "strategy");
    r.fee_income = detail::number(detail::field(j, "fee_income", ctx), "fee_income");
    r.reserve_pnl = detail::number(detail::field(j, "reserve_pnl", ctx), "reserve_pnl");
    r.hedge_pnl = detail::number(detail::field(j, "hedge_pnl", ctx), "hedge_pnl");
    r.return_pct = detail::number(detail::field(j, "return_pct", ctx), "return_pct");
    return r;
}

inline json windows_to_json(const BacktestTable& table) {
    json windows = json::array();
    for (const auto& rep : table.windows) {
        json results = json::array();
        for (const auto& r : rep.results) results.push_back(to_json(r));
        windows.push_back({{"train_block", rep.window.train_label},
                           {"test_block", rep.window.test_label},
                           {"train_start", rep.window.train_start},
                           {"test_start", rep.window.test_start},
                           {"test_end", rep.window.test_end},
                           {"open_price", rep.window.open_price},
                           {"close_price", rep.window.close_price},
                           {"snapshot_updated", rep.snapshot_updated},
                           {"results", results}});
    }
    return {{"schema_version", kSchemaVersion},
            {"strategies", table.strategies},
            {"windows", windows},
            {"mean", table.mean},
            {"std", table.stddev},
            {"notes", table.notes}};
}

/// Table layout: one row per window (train block, test block, one return
/// column per strategy) followed by "mean" and "std" footer rows. Returns
/// are fractions of capital.
inline std::string table_to_csv(const BacktestTable& table) {
    std::ostringstream os;
    os << "train_block,test_block";
    for (const auto& s : table.strategies) os << ',' << s;
    os << '\n';
    for (const auto& rep : table.windows) {
        os << rep.window.train_label << ',' << rep.window.test_label;
        for (const auto& r : rep.results) os << ',' << format_number(r.return_pct);
        os << '\n';
    }
    os << "mean,";
    for (double m : table.mean) os << ',' << format_number(m);
    os << "\nstd,";
    for (double s : table.stddev) os << ',' << format_number(s);
    os << '\n';
    return os.str();
}

} // namespace tickprov::io
