// Command-line front end for the markdown pricing engine.
//
// Exit codes: 0 success, 1 bad input or configuration, 2 infeasible
// instance, 3 anything else.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mdpricer/bench.hpp"
#include "mdpricer/config.hpp"
#include "mdpricer/csv.hpp"
#include "mdpricer/dates.hpp"
#include "mdpricer/errors.hpp"
#include "mdpricer/pipeline.hpp"
#include "mdpricer/simulator.hpp"

namespace {

using namespace mdpricer;

EngineConfig config_or_default(const std::string& path) {
    if (path.empty()) return EngineConfig{};
    return load_engine_config_file(path);
}

int cmd_fit(const std::string& history_path, const std::string& config_path,
            const std::string& resume_path, const std::string& out_path) {
    if (!resume_path.empty() && !config_path.empty())
        throw ConfigError("--resume carries its own configuration; drop --config");
    std::vector<RawRow> rows = parse_history_csv(read_csv_file(history_path));
    ModelBundle bundle;
    if (resume_path.empty()) {
        bundle = fit_bundle(std::move(rows), config_or_default(config_path));
    } else {
        bundle = load_bundle(resume_path);
        update_bundle(bundle, std::move(rows));
    }
    save_bundle(bundle, out_path);
    std::printf("fitted %zu skus through %s, design width %d, %lld regression rows\n",
                bundle.skus.size(), format_iso_date(bundle.last_date).c_str(),
                bundle.elasticity.width(), static_cast<long long>(bundle.elasticity.sample_count()));
    return 0;
}

int cmd_predict(const std::string& model_path, std::vector<std::string> skus,
                std::vector<std::string> stores, int periods, const std::string& base_csv,
                const std::string& out_path) {
    if (periods < 1) throw ConfigError("--periods must be >= 1");
    const ModelBundle bundle = load_bundle(model_path);
    const auto estimate = bundle.elasticity.estimate();
    const std::vector<Discount> grid = bundle.config.grid();

    std::optional<CsvForecaster> override_fc;
    if (!base_csv.empty()) override_fc = parse_base_csv(read_csv_file(base_csv));
    const Forecaster& forecaster =
        override_fc ? static_cast<const Forecaster&>(*override_fc) : bundle.forecaster;

    if (skus.empty())
        for (const auto& [sku, meta] : bundle.skus) skus.push_back(sku);

    std::vector<DemandCurve> curves;
    for (const auto& sku : skus) {
        auto meta_it = bundle.skus.find(sku);
        if (meta_it == bundle.skus.end()) throw DataError("unknown sku '" + sku + "'");
        const EffectModifierVector design = encode_category(meta_it->second.category, bundle.taxonomy);

        std::vector<std::string> sku_stores = stores;
        if (sku_stores.empty()) {
            for (const auto& [key, stats] : bundle.forecaster.sku_store_stats())
                if (key.first == sku) sku_stores.push_back(key.second);
            if (sku_stores.empty())
                throw DataError("sku '" + sku + "' has no per-store history; pass --store");
        }
        for (const auto& store : sku_stores)
            for (int t = 1; t <= periods; ++t) {
                const BaseForecast base = forecaster.predict_base(sku, store, t);
                curves.push_back(build_curve(estimate, design, base, grid,
                                             CurveOptions{bundle.config.curve_cap_multiple}));
                curves.back().period = t;
            }
    }
    const std::string csv = curves_to_csv(curves);
    if (out_path.empty())
        std::fputs(csv.c_str(), stdout);
    else
        write_file_atomic(out_path, csv);
    return 0;
}

int cmd_optimize(const std::string& model_path, const std::string& instance_path,
                 const std::string& date_str, int jobs, const std::string& out_path) {
    const ModelBundle bundle = load_bundle(model_path);
    const std::vector<OptimizeRequest> requests =
        parse_instances_csv(read_csv_file(instance_path), bundle.config);
    const int parallelism = jobs > 0 ? jobs : bundle.config.parallelism;
    const std::vector<OptimizeOutcome> outcomes = optimize_all(bundle, requests, parallelism);

    const int date = parse_iso_date(date_str);
    const std::string csv = decisions_to_csv(outcomes, date);
    if (out_path.empty())
        std::fputs(csv.c_str(), stdout);
    else
        write_file_atomic(out_path, csv);

    int infeasible = 0;
    for (const auto& o : outcomes)
        if (!o.decision) {
            ++infeasible;
            std::fprintf(stderr, "infeasible: %s\n", o.error.c_str());
        }
    if (infeasible > 0) {
        std::fprintf(stderr, "%d of %zu instances infeasible\n", infeasible, outcomes.size());
        return 2;
    }
    return 0;
}

PolicySpec parse_policy(const std::string& text) {
    PolicySpec policy;
    if (text == "engine") return policy;
    if (text.rfind("fixed:", 0) == 0) {
        policy.kind = PolicySpec::Kind::fixed;
        policy.fixed_discount = parse_double(text.substr(6), "--policy");
        return policy;
    }
    throw ConfigError("--policy must be 'engine' or 'fixed:<discount>'");
}

int cmd_simulate(const std::string& spec_path, const std::string& config_path,
                 const std::string& policy_str, const std::string& out_dir) {
    const MarketSpec spec = load_market_spec(IniFile::parse_file(spec_path));
    const EngineConfig cfg = config_or_default(config_path);
    const PolicySpec policy = parse_policy(policy_str);

    const Market market = generate_market(spec);
    const SimulationReport report = run_receding_horizon(market, cfg, policy);

    write_file_atomic(out_dir + "/history.csv", history_to_csv(market.history));
    write_file_atomic(out_dir + "/trajectories.csv", trajectories_to_csv(report.rows));
    {
        std::string trace = "date,theta_max_abs_error\n";
        for (const auto& [date, err] : report.elasticity_trace)
            trace += format_iso_date(date) + "," + format_double(err) + "\n";
        write_file_atomic(out_dir + "/trace.csv", trace);
    }
    nlohmann::json summary;
    summary["policy"] = policy.kind == PolicySpec::Kind::engine
                            ? std::string("engine")
                            : "fixed:" + format_double(policy.fixed_discount);
    summary["seed"] = spec.seed;
    summary["campaign_rows"] = report.rows.size();
    summary["total_reward"] = report.total_reward;
    summary["waste_units"] = report.waste_units;
    summary["tcr_normal"] = report.metrics.tcr_normal;
    summary["tcr_markdown"] = report.metrics.tcr_markdown;
    summary["tcr_total"] = report.metrics.tcr_total;
    summary["gmv_improvement"] = report.metrics.gmv_improvement;
    write_file_atomic(out_dir + "/summary.json", summary.dump(1) + "\n");
    std::printf("%s\n", summary.dump().c_str());
    return 0;
}

int cmd_evaluate(const std::string& trajectories_path, const std::string& out_path) {
    const std::vector<TrajectoryRow> rows = trajectories_from_csv(read_csv_file(trajectories_path));
    const CompletionMetrics m = completion_metrics(rows);
    nlohmann::json summary;
    summary["tcr_normal"] = m.tcr_normal;
    summary["tcr_markdown"] = m.tcr_markdown;
    summary["tcr_total"] = m.tcr_total;
    summary["gmv_improvement"] = m.gmv_improvement;
    if (!out_path.empty()) write_file_atomic(out_path, summary.dump(1) + "\n");
    std::printf("%s\n", summary.dump().c_str());
    return 0;
}

int cmd_bench(const std::string& mode, int reps, const std::string& out_path) {
    std::string csv = "mode,shops,inventory,horizon,actions,seconds\n";
    auto emit = [&csv](const std::string& mode_name, const std::vector<BenchPoint>& points) {
        std::printf("%-10s %6s %10s %8s %8s %12s\n", "mode", "shops", "inventory", "horizon",
                    "actions", "seconds");
        for (const auto& p : points) {
            std::printf("%-10s %6d %10lld %8d %8d %12.6f\n", mode_name.c_str(), p.shops,
                        static_cast<long long>(p.inventory), p.horizon, p.actions, p.seconds);
            csv += mode_name + "," + std::to_string(p.shops) + "," + std::to_string(p.inventory) +
                   "," + std::to_string(p.horizon) + "," + std::to_string(p.actions) + "," +
                   format_double(p.seconds) + "\n";
        }
    };

    if (mode == "shops" || mode == "both")
        emit("shops", bench_shop_scaling({1, 2, 4, 8, 16, 32, 64}, 100, 5, 15, reps));
    if (mode == "inventory" || mode == "both")
        emit("inventory", bench_inventory_scaling({25, 50, 100, 200, 400}, 1, 5, 15, reps));
    if (mode != "shops" && mode != "inventory" && mode != "both")
        throw ConfigError("--mode must be shops, inventory, or both");

    try {
        (void)exact_joint_dp(synthetic_instance(64, 100, 5, 15));
        std::printf("exact solver: unexpectedly accepted the 64-shop instance\n");
    } catch (const CapacityError& e) {
        std::printf("exact solver refusal (expected): %s\n", e.what());
    }

    if (!out_path.empty()) write_file_atomic(out_path, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markdown pricing engine for perishable goods"};
    app.require_subcommand(1);

    std::string history_path, config_path, resume_path, model_out;
    auto* fit = app.add_subcommand("fit", "Fit or extend a model from history CSV");
    fit->add_option("--history", history_path, "History CSV")->required()->envname("MDPRICER_HISTORY");
    fit->add_option("--config", config_path, "Engine config INI")->envname("MDPRICER_CONFIG");
    fit->add_option("--resume", resume_path, "Existing model to extend")->envname("MDPRICER_MODEL");
    fit->add_option("--out", model_out, "Output model path")->required()->envname("MDPRICER_OUT");

    std::string model_path, base_csv, curves_out;
    std::vector<std::string> skus, stores;
    int periods = 1;
    auto* predict = app.add_subcommand("predict", "Demand curves over the discount grid");
    predict->add_option("--model", model_path, "Model file")->required()->envname("MDPRICER_MODEL");
    predict->add_option("--sku", skus, "SKU ids (default: all)");
    predict->add_option("--store", stores, "Store ids (default: stores with history)");
    predict->add_option("--periods", periods, "Forecast periods");
    predict->add_option("--base-csv", base_csv, "Prepared base forecasts CSV")->envname("MDPRICER_BASE");
    predict->add_option("--out", curves_out, "Output CSV (default: stdout)")->envname("MDPRICER_OUT");

    std::string opt_model, instance_path, date_str = "1970-01-01", decisions_out;
    int jobs = 0;
    auto* optimize = app.add_subcommand("optimize", "First-period discounts for instance CSV");
    optimize->add_option("--model", opt_model, "Model file")->required()->envname("MDPRICER_MODEL");
    optimize->add_option("--instance", instance_path, "Instance CSV")->required()->envname("MDPRICER_INSTANCE");
    optimize->add_option("--date", date_str, "Decision date (YYYY-MM-DD)");
    optimize->add_option("--jobs", jobs, "Worker threads (default: config)");
    optimize->add_option("--out", decisions_out, "Output CSV (default: stdout)")->envname("MDPRICER_OUT");

    std::string spec_path, sim_config, policy_str = "engine", sim_out;
    auto* simulate = app.add_subcommand("simulate", "Synthetic market campaign");
    simulate->add_option("--spec", spec_path, "Market spec INI")->required()->envname("MDPRICER_SPEC");
    simulate->add_option("--config", sim_config, "Engine config INI")->envname("MDPRICER_CONFIG");
    simulate->add_option("--policy", policy_str, "engine or fixed:<discount>");
    simulate->add_option("--out", sim_out, "Output directory")->required()->envname("MDPRICER_OUT");

    std::string traj_path, eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "Score stored trajectories");
    evaluate->add_option("--trajectories", traj_path, "Trajectories CSV")->required()->envname("MDPRICER_TRAJECTORIES");
    evaluate->add_option("--out", eval_out, "Summary JSON output")->envname("MDPRICER_OUT");

    std::string bench_mode = "both", bench_out;
    int bench_reps = 9;
    auto* bench = app.add_subcommand("bench", "Solver scaling measurements");
    bench->add_option("--mode", bench_mode, "shops, inventory, or both");
    bench->add_option("--reps", bench_reps, "Timing repetitions");
    bench->add_option("--out", bench_out, "Output CSV")->envname("MDPRICER_OUT");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (fit->parsed()) return cmd_fit(history_path, config_path, resume_path, model_out);
        if (predict->parsed()) return cmd_predict(model_path, skus, stores, periods, base_csv, curves_out);
        if (optimize->parsed()) return cmd_optimize(opt_model, instance_path, date_str, jobs, decisions_out);
        if (simulate->parsed()) return cmd_simulate(spec_path, sim_config, policy_str, sim_out);
        if (evaluate->parsed()) return cmd_evaluate(traj_path, eval_out);
        if (bench->parsed()) return cmd_bench(bench_mode, bench_reps, bench_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 3;
}
