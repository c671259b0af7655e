#pragma once

// Command-line front end: waterfill, optimize, sweep, backtest, estimate.
//
// Exit codes: 0 success, 2 schema/usage, 3 solver failure, 4 data
// insufficiency. Failures print {"error": {...}} on the error stream.

#include "tickprov/backtest.hpp"
#include "tickprov/config.hpp"
#include "tickprov/estimate.hpp"
#include "tickprov/io.hpp"
#include "tickprov/max_return.hpp"
#include "tickprov/waterfill.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace tickprov::cli {

namespace fs = std::filesystem;
using io::json;

enum ExitCode : int { kOk = 0, kUsage = 2, kSolver = 3, kData = 4 };

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::DegenerateObjective:
    case ErrorKind::NonConvergence: return kSolver;
    case ErrorKind::InsufficientData: return kData;
    default: return kUsage;
    }
}

inline void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                         const std::string& field = {}) {
    json e = {{"kind", kind}, {"message", message}};
    if (!field.empty()) e["field"] = field;
    err << json{{"error", e}}.dump() << '\n';
}

/// Config flags shared by every subcommand. Values given on the command
/// line win over the config file, which wins over the defaults.
struct RunFlags {
    std::string config_path;
    fs::path out_dir = ".";
    RunConfig values;
    std::string strategies;
    std::vector<std::pair<std::string, CLI::Option*>> given;

    void attach(CLI::App& sub) {
        sub.add_option("--config", config_path, "JSON run configuration");
        sub.add_option("--out", out_dir, "output directory");
        given = {
            {"seed", sub.add_option("--seed", values.seed, "random seed")},
            {"d", sub.add_option("--d", values.d, "total capital")},
            {"sigma", sub.add_option("--sigma", values.sigma, "annualized volatility")},
            {"horizon_days", sub.add_option("--horizon-days", values.horizon_days, "holding period T")},
            {"train_days", sub.add_option("--train-days", values.train_days, "estimation window S")},
            {"stride_days", sub.add_option("--stride-days", values.stride_days, "window stride R")},
            {"range_pct", sub.add_option("--range-pct", values.range_pct, "uniform range half-width")},
            {"drift", sub.add_option("--drift", values.drift, "annualized price drift")},
            {"candidate_pct", sub.add_option("--candidate-pct", values.candidate_pct,
                                             "candidate band around the price (0 = all ticks)")},
            {"epsilon_b", sub.add_option("--epsilon-b", values.epsilon_b, "liquidity floor factor")},
            {"quad_points", sub.add_option("--quad-points", values.quad_points, "price grid size")},
            {"quad_span", sub.add_option("--quad-span", values.quad_span, "price grid span in sigmas")},
            {"hedge_base", sub.add_option("--hedge-base", values.hedge_base,
                                          "delta-neutral base: range or tick_by_tick")},
            {"strategies", sub.add_option("--strategies", strategies, "comma-separated strategies")},
        };
    }

    bool has(const std::string& name) const {
        for (const auto& [key, opt] : given)
            if (key == name) return opt->count() > 0;
        return false;
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path.empty()) {
            cfg = io::config_from_json(io::parse_json(io::read_file(config_path), config_path));
        }
        json overrides = json::object();
        const json flag_values = io::to_json(values);
        for (const auto& [name, opt] : given) {
            if (opt->count() == 0) continue;
            if (name == "strategies") {
                std::vector<std::string> list;
                std::stringstream ss(strategies);
                for (std::string item; std::getline(ss, item, ',');)
                    if (!item.empty()) list.push_back(item);
                overrides[name] = list;
            } else {
                overrides[name] = flag_values[name];
            }
        }
        cfg = io::config_from_json(overrides, cfg);
        validate_config(cfg);
        return cfg;
    }
};

inline std::string allocation_csv(const MarketConditions& mc, const std::vector<double>& x) {
    std::ostringstream os;
    os << "tick_id,price_lo,price_hi,x,b\n";
    const auto ids = io::tick_ids(mc);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool has_tick = i < mc.ticks.size();
        os << ids[i] << ',' << (has_tick ? io::format_number(mc.ticks[i].price_lo) : "") << ','
           << (has_tick ? io::format_number(mc.ticks[i].price_hi) : "") << ','
           << io::format_number(x[i]) << ',' << io::format_number(mc.b[i]) << '\n';
    }
    return os.str();
}

inline json consistency_json(const ConsistencyReport& r) {
    return {{"volume_center", r.volume_center}, {"volume_spread", r.volume_spread},
            {"price_center", r.price_center},   {"price_spread", r.price_spread},
            {"tick_width", r.tick_width},       {"center_offset_flag", r.center_offset_flag},
            {"spread_ratio_flag", r.spread_ratio_flag}, {"warnings", r.warnings}};
}

struct HistoryInputs {
    std::vector<SwapEvent> events;
    LiquiditySnapshot snapshot;
    double price = 0.0;
};

inline HistoryInputs load_history(const std::string& snapshot_path, const std::string& history_path,
                                  double price_override) {
    HistoryInputs in;
    in.events = io::swaps_from_csv(io::read_file(history_path), history_path);
    if (in.events.empty()) {
        throw Error(ErrorKind::InsufficientData, history_path + ": no swap events", "history");
    }
    MarketData data;
    data.snapshots = io::load_snapshots(snapshot_path);
    in.snapshot = snapshot_at(data, in.events.back().timestamp);
    in.price = price_override > 0.0 ? price_override : in.events.back().price_after;
    return in;
}

inline std::string estimates_csv(const Estimates& est, const std::vector<double>* x) {
    const auto& mc = est.conditions;
    std::ostringstream os;
    os << "tick_id,price_lo,price_hi,a,b,c,historical_volume" << (x ? ",x" : "") << '\n';
    for (std::size_t k = 0; k < mc.size(); ++k) {
        const auto& t = mc.ticks[k];
        os << t.id << ',' << io::format_number(t.price_lo) << ',' << io::format_number(t.price_hi)
           << ',' << io::format_number(mc.a[k]) << ',' << io::format_number(mc.b[k]) << ','
           << io::format_number(mc.c[k]) << ','
           << io::format_number(est.fit.profile.per_tick_volume[est.candidates[k]]);
        if (x) os << ',' << io::format_number((*x)[k]);
        os << '\n';
    }
    return os.str();
}

inline json estimates_json(const Estimates& est) {
    return {{"schema_version", io::kSchemaVersion},
            {"tick_ids", io::tick_ids(est.conditions)},
            {"a", est.conditions.a},
            {"b", est.conditions.b},
            {"c", est.conditions.c},
            {"current_price", est.conditions.current_price},
            {"sigma_volume", est.fit.sigma_volume},
            {"volume_center", est.fit.center},
            {"total_volume", est.fit.total_per_period},
            {"forecast_volume", est.forecast_volume},
            {"consistency", consistency_json(est.consistency)}};
}

inline std::vector<double> parse_d_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) continue;
        out.push_back(io::parse_number(item, "--d-list"));
    }
    if (out.empty()) throw Error(ErrorKind::Schema, "--d-list must name at least one capital level", "d_list");
    return out;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"Tick-by-tick liquidity provisioning"};
    app.require_subcommand(1);

    RunFlags wf_flags, opt_flags, sweep_flags, bt_flags, est_flags;
    std::string wf_conditions, sweep_conditions, d_list_text, data_dir;
    std::string opt_snapshot, opt_history, est_snapshot, est_history;
    double opt_price = 0.0, est_price = 0.0;

    auto* wf = app.add_subcommand("waterfill", "solve the maximum-revenue problem");
    wf->add_option("conditions", wf_conditions, "market conditions JSON")->required();
    wf_flags.attach(*wf);

    auto* opt = app.add_subcommand("optimize", "estimate conditions and solve the maximum-return problem");
    opt->add_option("--snapshot", opt_snapshot, "liquidity snapshot (.json or .csv)")->required();
    opt->add_option("--history", opt_history, "swap events CSV")->required();
    opt->add_option("--price", opt_price, "current price (default: last traded price)");
    opt_flags.attach(*opt);

    auto* sweep = app.add_subcommand("sweep", "maximum-return allocations across capital levels");
    sweep->add_option("conditions", sweep_conditions, "market conditions JSON")->required();
    sweep->add_option("--d-list", d_list_text, "comma-separated ascending capital levels")->required();
    sweep_flags.attach(*sweep);

    auto* bt = app.add_subcommand("backtest", "rolling train/test strategy comparison");
    bt->add_option("data", data_dir, "directory with swaps.csv and liquidity.csv")->required();
    bt_flags.attach(*bt);

    auto* est = app.add_subcommand("estimate", "estimate fee and reserve-return vectors");
    est->add_option("--snapshot", est_snapshot, "liquidity snapshot (.json or .csv)")->required();
    est->add_option("--history", est_history, "swap events CSV")->required();
    est->add_option("--price", est_price, "current price (default: last traded price)");
    est_flags.attach(*est);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage", e.what());
        return kUsage;
    }

    try {
        if (wf->parsed()) {
            const RunConfig cfg = wf_flags.resolve();
            auto mc = io::conditions_from_json(
                io::parse_json(io::read_file(wf_conditions), wf_conditions));
            if (wf_flags.has("d")) mc.d = cfg.d;
            const auto alloc = solve_waterfill(mc, cfg.epsilon_b);
            const auto ids = io::tick_ids(mc);
            const auto dir = wf_flags.out_dir;
            io::write_file(dir / "allocation.json",
                           io::to_json(alloc, "max_revenue", ids).dump(2) + "\n");
            io::write_file(dir / "allocation.csv", allocation_csv(mc, alloc.x));

            const auto valid = validate_conditions(mc, cfg.epsilon_b);
            std::ostringstream prof;
            prof << "tick_id,height,width,x,water_level\n";
            for (std::size_t i = 0; i < valid.size(); ++i) {
                const bool flat = valid.a[i] <= 0.0;
                prof << ids[i] << ','
                     << (flat ? "inf" : io::format_number(std::sqrt(valid.b[i] / valid.a[i]))) << ','
                     << io::format_number(std::sqrt(valid.a[i] * valid.b[i])) << ','
                     << io::format_number(alloc.x[i]) << ',' << io::format_number(alloc.dual) << '\n';
            }
            io::write_file(dir / "waterfill_profile.csv", prof.str());
            out << json{{"status", "optimal"}, {"objective", alloc.objective}, {"water_level", alloc.dual}}.dump()
                << '\n';
        } else if (opt->parsed() || est->parsed()) {
            const bool solve = opt->parsed();
            const RunFlags& flags = solve ? opt_flags : est_flags;
            const RunConfig cfg = flags.resolve();
            const auto in = solve ? load_history(opt_snapshot, opt_history, opt_price)
                                  : load_history(est_snapshot, est_history, est_price);
            const auto estimates = estimate_conditions(in.events, in.snapshot, in.price, cfg);
            const auto& mc = estimates.conditions;
            const auto dir = flags.out_dir;
            io::write_file(dir / "conditions.json", io::to_json(mc).dump(2) + "\n");
            io::write_file(dir / "estimates.json", estimates_json(estimates).dump(2) + "\n");
            if (!solve) {
                io::write_file(dir / "estimates.csv", estimates_csv(estimates, nullptr));
                out << json{{"status", "ok"}, {"consistent", estimates.consistency.ok()}}.dump() << '\n';
                return kOk;
            }
            MaxReturnOptions sopts;
            sopts.epsilon_b = cfg.epsilon_b;
            const auto alloc = solve_max_return(mc, sopts);
            const auto ids = io::tick_ids(mc);
            io::write_file(dir / "allocation.json", io::to_json(alloc, "max_return", ids).dump(2) + "\n");
            io::write_file(dir / "allocation.csv", allocation_csv(mc, alloc.x));
            io::write_file(dir / "estimates.csv", estimates_csv(estimates, &alloc.x));
            json audit = {{"schema_version", io::kSchemaVersion},
                          {"conditions", io::to_json(mc)},
                          {"dual", alloc.dual},
                          {"objective", alloc.objective},
                          {"kkt_residual", alloc.kkt_residual},
                          {"consistency", consistency_json(estimates.consistency)},
                          {"sigma_volume", estimates.fit.sigma_volume},
                          {"total_volume", estimates.fit.total_per_period},
                          {"forecast_volume", estimates.forecast_volume},
                          {"config", io::to_json(cfg)}};
            io::write_file(dir / "audit.json", audit.dump(2) + "\n");
            out << json{{"status", "optimal"}, {"objective", alloc.objective},
                        {"consistent", estimates.consistency.ok()}}.dump()
                << '\n';
        } else if (sweep->parsed()) {
            const RunConfig cfg = sweep_flags.resolve();
            const auto d_list = parse_d_list(d_list_text);
            const auto mc = io::conditions_from_json(
                io::parse_json(io::read_file(sweep_conditions), sweep_conditions));
            SweepOptions sopts;
            sopts.solver.epsilon_b = cfg.epsilon_b;
            sopts.bracket_hints = cfg.bracket_hints;
            sopts.parallel = cfg.parallel;
            const auto results = capital_sweep(mc, d_list, sopts);
            const auto ids = io::tick_ids(mc);

            std::ostringstream csv;
            csv << "d,tick_id,x,b\n";
            bool monotone = true;
            json duals = json::array(), objectives = json::array(), residuals = json::array();
            for (std::size_t k = 0; k < results.size(); ++k) {
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    csv << io::format_number(d_list[k]) << ',' << ids[i] << ','
                        << io::format_number(results[k].x[i]) << ',' << io::format_number(mc.b[i])
                        << '\n';
                    if (k > 0 && results[k - 1].x[i] > 0.0 && !(results[k].x[i] > 0.0))
                        monotone = false;
                }
                duals.push_back(results[k].dual);
                objectives.push_back(results[k].objective);
                residuals.push_back(results[k].kkt_residual);
            }
            io::write_file(sweep_flags.out_dir / "sweep.csv", csv.str());
            json meta = {{"schema_version", io::kSchemaVersion}, {"d_list", d_list},
                         {"dual", duals},   {"objective", objectives},
                         {"kkt_residual", residuals}, {"support_monotone", monotone}};
            io::write_file(sweep_flags.out_dir / "sweep.json", meta.dump(2) + "\n");
            out << json{{"status", "optimal"}, {"points", d_list.size()},
                        {"support_monotone", monotone}}.dump()
                << '\n';
        } else if (bt->parsed()) {
            const RunConfig cfg = bt_flags.resolve();
            const fs::path dir = data_dir;
            MarketData data;
            data.events = io::swaps_from_csv(io::read_file(dir / "swaps.csv"), (dir / "swaps.csv").string());
            const auto liq = fs::exists(dir / "liquidity.csv") ? dir / "liquidity.csv" : dir / "snapshot.json";
            data.snapshots = io::load_snapshots(liq);
            if (data.events.empty()) throw Error(ErrorKind::InsufficientData, "swaps.csv has no events");
            data.start = data.events.front().timestamp;
            data.end = data.events.back().timestamp;
            if (fs::exists(dir / "dataset.json")) {
                const auto meta = io::parse_json(io::read_file(dir / "dataset.json"), "dataset.json");
                if (meta.contains("start")) data.start = meta["start"].get<double>();
                if (meta.contains("end")) data.end = meta["end"].get<double>();
            }
            const auto table = rolling_backtest(data, cfg);
            io::write_file(bt_flags.out_dir / "table.csv", io::table_to_csv(table));
            io::write_file(bt_flags.out_dir / "windows.json", io::windows_to_json(table).dump(2) + "\n");
            out << json{{"status", "ok"}, {"windows", table.windows.size()}}.dump() << '\n';
        }
    } catch (const Error& e) {
        report_error(err, to_string(e.kind()), e.what(), e.field());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        report_error(err, "schema", e.what());
        return kUsage;
    }
    return kOk;
}

} // namespace tickprov::cli
