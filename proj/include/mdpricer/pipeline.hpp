#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mdpricer/base_forecast.hpp"
#include "mdpricer/config.hpp"
#include "mdpricer/counterfactual.hpp"
#include "mdpricer/csv.hpp"
#include "mdpricer/dates.hpp"
#include "mdpricer/domain.hpp"
#include "mdpricer/elasticity.hpp"
#include "mdpricer/errors.hpp"
#include "mdpricer/ingest.hpp"
#include "mdpricer/mdp.hpp"

namespace mdpricer {

struct SkuMeta {
    CategoryPath category;
    Money retail_price = 0.0;  // latest seen list price
};

// Everything a daily run needs to pick up where the last one stopped: the
// learned statistics, the forecaster state, the ingest windows, and the
// taxonomy the design vectors were built against.
struct ModelBundle {
    EngineConfig config;
    Taxonomy taxonomy;
    ElasticityModel elasticity;
    EwmaForecaster forecaster;
    IngestState ingest;
    std::map<SkuId, SkuMeta> skus;
    int last_date = 0;
    bool has_data = false;

    ModelBundle()
        : forecaster(EwmaForecasterConfig{}), ingest(IngestOptions{}) {}

    explicit ModelBundle(const EngineConfig& cfg)
        : config(cfg),
          forecaster(EwmaForecasterConfig{cfg.forecaster_decay, cfg.discount_window}),
          ingest(IngestOptions{cfg.discount_window, cfg.normal_floor}) {
        config.validate();
    }
};

// Regression rows for one day of records. Zero markdown sales carry no log
// ratio and are dropped here; they still feed the forecaster.
inline std::vector<ElasticitySample> samples_from_records(
    std::span<const ObservationRecord> records, const Taxonomy& taxonomy) {
    std::vector<ElasticitySample> samples;
    samples.reserve(records.size());
    for (const auto& rec : records) {
        if (!(rec.sales_markdown > 0.0)) continue;
        samples.emplace_back(std::log(rec.sales_markdown / rec.sales_normal_baseline),
                             std::log(rec.discount_observed), encode_category(rec.category, taxonomy));
    }
    return samples;
}

namespace detail {

inline void absorb_day(ModelBundle& bundle, std::vector<RawRow> day_rows) {
    for (const auto& row : day_rows) {
        auto [it, inserted] = bundle.skus.try_emplace(row.sku, SkuMeta{row.category, row.retail_price});
        if (!inserted && row.retail_price > 0.0) it->second.retail_price = row.retail_price;
    }
    const int date = day_rows.front().date;
    std::vector<ObservationRecord> records = bundle.ingest.push_day(std::move(day_rows), bundle.taxonomy);
    bundle.forecaster.ingest_day(records);
    std::vector<ElasticitySample> samples = samples_from_records(records, bundle.taxonomy);
    if (!samples.empty()) bundle.elasticity.update(samples);
    bundle.last_date = date;
    bundle.has_data = true;
}

inline std::vector<std::vector<RawRow>> group_by_date(std::vector<RawRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
        return std::tie(a.date, a.sku, a.store) < std::tie(b.date, b.sku, b.store);
    });
    std::vector<std::vector<RawRow>> days;
    std::size_t start = 0;
    while (start < rows.size()) {
        std::size_t end = start;
        while (end < rows.size() && rows[end].date == rows[start].date) ++end;
        days.emplace_back(rows.begin() + static_cast<std::ptrdiff_t>(start),
                          rows.begin() + static_cast<std::ptrdiff_t>(end));
        start = end;
    }
    return days;
}

}  // namespace detail

using DayCallback = std::function<void(const ModelBundle&, int date)>;

// Batch fit: the taxonomy is frozen from the full history first (the design
// width must be known before the first regression update), then days are
// replayed in order through the same path incremental updates use.
inline ModelBundle fit_bundle(std::vector<RawRow> rows, const EngineConfig& cfg,
                              const DayCallback& after_day = {}) {
    if (rows.empty()) throw DataError("fit requires at least one row");
    ModelBundle bundle(cfg);
    auto days = detail::group_by_date(std::move(rows));
    for (const auto& day : days)
        for (const auto& row : day) {
            row.validate();
            bundle.taxonomy.add(row.category);
        }
    bundle.elasticity = ElasticityModel::init(cfg.ridge, cfg.forgetting, bundle.taxonomy.total_width());
    for (auto& day : days) {
        const int date = day.front().date;
        detail::absorb_day(bundle, std::move(day));
        if (after_day) after_day(bundle, date);
    }
    return bundle;
}

// Incremental update with newer days. Unseen category ids would change the
// design width mid-stream, so they demand a refit instead.
inline void update_bundle(ModelBundle& bundle, std::vector<RawRow> rows,
                          const DayCallback& after_day = {}) {
    if (!bundle.has_data) throw DataError("cannot update an unfitted model");
    if (rows.empty()) return;
    auto days = detail::group_by_date(std::move(rows));
    if (days.front().front().date <= bundle.last_date)
        throw DataError("update rows must be dated after " + format_iso_date(bundle.last_date));
    for (const auto& day : days)
        for (const auto& row : day) {
            row.validate();
            if (!bundle.taxonomy.knows(row.category))
                throw DataError("category '" + row.category.str() +
                                "' was not in the fitted taxonomy; refit the model");
        }
    for (auto& day : days) {
        const int date = day.front().date;
        detail::absorb_day(bundle, std::move(day));
        if (after_day) after_day(bundle, date);
    }
}

// ---------------------------------------------------------------------------
// Instance construction

struct ShopRequest {
    StoreId store;
    std::int64_t inventory = 0;
    int horizon = 1;
    Money waste_weight = 0.0;
    Discount lower_bound = 0.3;
    Discount upper_bound = 1.0;
};

struct OptimizeRequest {
    SkuId sku;
    Money retail_price = 0.0;  // <= 0 means take the price from the model
    std::vector<ShopRequest> shops;
};

inline MdpInstance build_instance(const ModelBundle& bundle, const ElasticityModel::Estimate& estimate,
                                  const OptimizeRequest& req) {
    auto meta_it = bundle.skus.find(req.sku);
    if (meta_it == bundle.skus.end())
        throw DataError("unknown sku '" + req.sku + "': not present in the fitted history");
    const SkuMeta& meta = meta_it->second;
    const Money price = req.retail_price > 0.0 ? req.retail_price : meta.retail_price;
    if (!(price > 0.0))
        throw DataError("sku '" + req.sku + "': no positive retail price available");

    const EffectModifierVector design = encode_category(meta.category, bundle.taxonomy);

    MdpInstance instance;
    instance.sku = req.sku;
    instance.grid = bundle.config.grid();
    for (const auto& shop_req : req.shops) {
        BaseForecast base = bundle.forecaster.predict_base(req.sku, shop_req.store, 1);
        DemandCurve curve = build_curve(estimate, design, base, instance.grid,
                                        CurveOptions{bundle.config.curve_cap_multiple});
        ShopProblem shop;
        shop.shop = shop_req.store;
        shop.inventory = shop_req.inventory;
        shop.horizon = shop_req.horizon;
        shop.retail_price = price;
        shop.waste_weight = shop_req.waste_weight;
        shop.normal_forecast.assign(static_cast<std::size_t>(shop_req.horizon), base.normal_sales);
        shop.bounds.assign(static_cast<std::size_t>(shop_req.horizon),
                           {shop_req.lower_bound, shop_req.upper_bound});
        shop.demand_curves.reserve(static_cast<std::size_t>(shop_req.horizon));
        for (int t = 1; t <= shop_req.horizon; ++t) {
            DemandCurve per_period = curve;
            per_period.period = t;
            shop.demand_curves.push_back(std::move(per_period));
        }
        instance.shops.push_back(std::move(shop));
    }
    instance.validate();
    return instance;
}

struct OptimizeOutcome {
    SkuId sku;
    std::optional<PricingDecision> decision;
    std::string error;  // set when the instance was infeasible
};

// Fans the per-SKU solves across threads. Requests keep their input order in
// the results regardless of scheduling.
inline std::vector<OptimizeOutcome> optimize_all(const ModelBundle& bundle,
                                                 const std::vector<OptimizeRequest>& requests,
                                                 int parallelism) {
    const ElasticityModel::Estimate estimate = bundle.elasticity.estimate();
    std::vector<OptimizeOutcome> outcomes(requests.size());

    auto solve_one = [&](std::size_t i) {
        outcomes[i].sku = requests[i].sku;
        try {
            outcomes[i].decision = optimize_first_period(build_instance(bundle, estimate, requests[i]));
        } catch (const InfeasibleError& e) {
            outcomes[i].error = e.what();
        }
    };

    if (parallelism <= 1 || requests.size() <= 1) {
        for (std::size_t i = 0; i < requests.size(); ++i) solve_one(i);
        return outcomes;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            try {
                solve_one(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const int n = std::min<int>(parallelism, static_cast<int>(requests.size()));
    threads.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return outcomes;
}

// ---------------------------------------------------------------------------
// Persistence (JSON; numbers round-trip exactly)

namespace detail {

inline nlohmann::json window_to_json(const std::deque<std::pair<int, double>>& entries, double sum) {
    nlohmann::json j;
    j["sum"] = sum;
    auto& arr = j["entries"] = nlohmann::json::array();
    for (const auto& [day, v] : entries) arr.push_back({day, v});
    return j;
}

inline nlohmann::json ingest_window_to_json(const IngestState::Window& w) {
    return window_to_json(w.entries, w.sum);
}

inline IngestState::Window ingest_window_from_json(const nlohmann::json& j) {
    IngestState::Window w;
    w.sum = j.at("sum").get<double>();
    for (const auto& e : j.at("entries")) w.entries.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
    return w;
}

inline nlohmann::json ingest_to_json(const IngestState& state) {
    nlohmann::json j;
    j["started"] = state.started();
    j["last_day"] = state.last_day();
    auto dump_pair_map = [](const std::map<std::pair<SkuId, StoreId>, IngestState::Window>& m) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [key, w] : m) {
            nlohmann::json row = ingest_window_to_json(w);
            row["sku"] = key.first;
            row["store"] = key.second;
            arr.push_back(std::move(row));
        }
        return arr;
    };
    j["normal"] = dump_pair_map(state.normal_windows());
    j["discount"] = dump_pair_map(state.discount_windows());
    auto& cat = j["category_normal"] = nlohmann::json::array();
    for (const auto& [key, w] : state.category_windows()) {
        nlohmann::json row = ingest_window_to_json(w);
        row["key"] = key;
        cat.push_back(std::move(row));
    }
    return j;
}

inline IngestState ingest_from_json(const nlohmann::json& j, const IngestOptions& opts) {
    IngestState state(opts);
    auto load_pair_map = [](const nlohmann::json& arr) {
        std::map<std::pair<SkuId, StoreId>, IngestState::Window> m;
        for (const auto& row : arr)
            m[{row.at("sku").get<std::string>(), row.at("store").get<std::string>()}] =
                ingest_window_from_json(row);
        return m;
    };
    std::map<std::string, IngestState::Window> cat;
    for (const auto& row : j.at("category_normal"))
        cat[row.at("key").get<std::string>()] = ingest_window_from_json(row);
    state.restore_state(j.at("started").get<bool>(), j.at("last_day").get<int>(),
                        load_pair_map(j.at("normal")), load_pair_map(j.at("discount")), std::move(cat));
    return state;
}

inline nlohmann::json keystats_to_json(const EwmaForecaster::KeyStats& k) {
    nlohmann::json j;
    j["ratio_num"] = k.ratio_num;
    j["ratio_den"] = k.ratio_den;
    j["normal_num"] = k.normal_num;
    j["normal_den"] = k.normal_den;
    j["last_day"] = k.last_day;
    j["touched"] = k.touched;
    j["discounts"] = window_to_json(k.discounts, k.discount_sum);
    return j;
}

inline EwmaForecaster::KeyStats keystats_from_json(const nlohmann::json& j) {
    EwmaForecaster::KeyStats k;
    k.ratio_num = j.at("ratio_num").get<double>();
    k.ratio_den = j.at("ratio_den").get<double>();
    k.normal_num = j.at("normal_num").get<double>();
    k.normal_den = j.at("normal_den").get<double>();
    k.last_day = j.at("last_day").get<int>();
    k.touched = j.at("touched").get<bool>();
    k.discount_sum = j.at("discounts").at("sum").get<double>();
    for (const auto& e : j.at("discounts").at("entries"))
        k.discounts.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
    return k;
}

inline nlohmann::json config_to_json(const EngineConfig& c) {
    return {{"forgetting", c.forgetting},
            {"ridge", c.ridge},
            {"grid_min", c.grid_min},
            {"grid_max", c.grid_max},
            {"grid_step", c.grid_step},
            {"default_lower_bound", c.default_lower_bound},
            {"default_upper_bound", c.default_upper_bound},
            {"default_waste_weight", c.default_waste_weight},
            {"forecaster_decay", c.forecaster_decay},
            {"discount_window", c.discount_window},
            {"normal_floor", c.normal_floor},
            {"curve_cap_multiple", c.curve_cap_multiple},
            {"parallelism", c.parallelism},
            {"seed", c.seed}};
}

inline EngineConfig config_from_json(const nlohmann::json& j) {
    EngineConfig c;
    c.forgetting = j.at("forgetting").get<double>();
    c.ridge = j.at("ridge").get<double>();
    c.grid_min = j.at("grid_min").get<double>();
    c.grid_max = j.at("grid_max").get<double>();
    c.grid_step = j.at("grid_step").get<double>();
    c.default_lower_bound = j.at("default_lower_bound").get<double>();
    c.default_upper_bound = j.at("default_upper_bound").get<double>();
    c.default_waste_weight = j.at("default_waste_weight").get<double>();
    c.forecaster_decay = j.at("forecaster_decay").get<double>();
    c.discount_window = j.at("discount_window").get<int>();
    c.normal_floor = j.at("normal_floor").get<double>();
    c.curve_cap_multiple = j.at("curve_cap_multiple").get<double>();
    c.parallelism = j.at("parallelism").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

}  // namespace detail

inline nlohmann::json bundle_to_json(const ModelBundle& bundle) {
    nlohmann::json j;
    j["format"] = "mdpricer-model";
    j["version"] = 1;
    j["config"] = detail::config_to_json(bundle.config);
    j["last_date"] = bundle.last_date;
    j["has_data"] = bundle.has_data;

    auto& tax = j["taxonomy"];
    tax["level1"] = bundle.taxonomy.ids(0);
    tax["level2"] = bundle.taxonomy.ids(1);
    tax["level3"] = bundle.taxonomy.ids(2);
    auto& l12 = tax["links12"] = nlohmann::json::array();
    for (const auto& [a, b] : bundle.taxonomy.level12_links()) l12.push_back({a, b});
    auto& l23 = tax["links23"] = nlohmann::json::array();
    for (const auto& [a, b] : bundle.taxonomy.level23_links()) l23.push_back({a, b});
    tax["fingerprint"] = bundle.taxonomy.fingerprint();

    auto& el = j["elasticity"];
    el["width"] = bundle.elasticity.width();
    el["ridge"] = bundle.elasticity.ridge();
    el["forgetting"] = bundle.elasticity.forgetting();
    el["sample_count"] = bundle.elasticity.sample_count();
    auto& gram = el["gram"] = nlohmann::json::array();
    const auto& g = bundle.elasticity.gram();
    for (Eigen::Index r = 0; r < g.rows(); ++r)
        for (Eigen::Index c = 0; c < g.cols(); ++c) gram.push_back(g(r, c));
    auto& moment = el["moment"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < bundle.elasticity.moment().size(); ++i)
        moment.push_back(bundle.elasticity.moment()(i));

    auto& fc = j["forecaster"];
    fc["decay"] = bundle.forecaster.config().decay;
    fc["window"] = bundle.forecaster.config().discount_window;
    auto dump_keyed = [](const auto& m, auto key_fn) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [key, stats] : m) {
            nlohmann::json row = detail::keystats_to_json(stats);
            key_fn(row, key);
            arr.push_back(std::move(row));
        }
        return arr;
    };
    fc["sku_store"] = dump_keyed(bundle.forecaster.sku_store_stats(), [](nlohmann::json& r, const auto& k) {
        r["sku"] = k.first;
        r["store"] = k.second;
    });
    fc["sku"] = dump_keyed(bundle.forecaster.sku_stats(),
                           [](nlohmann::json& r, const auto& k) { r["key"] = k; });
    fc["level3"] = dump_keyed(bundle.forecaster.level3_stats(),
                              [](nlohmann::json& r, const auto& k) { r["key"] = k; });
    fc["level2"] = dump_keyed(bundle.forecaster.level2_stats(),
                              [](nlohmann::json& r, const auto& k) { r["key"] = k; });
    fc["level1"] = dump_keyed(bundle.forecaster.level1_stats(),
                              [](nlohmann::json& r, const auto& k) { r["key"] = k; });
    auto& cats = fc["categories"] = nlohmann::json::array();
    for (const auto& [sku, path] : bundle.forecaster.sku_categories())
        cats.push_back({{"sku", sku}, {"l1", path.level1}, {"l2", path.level2}, {"l3", path.level3}});

    auto& skus = j["skus"] = nlohmann::json::array();
    for (const auto& [sku, meta] : bundle.skus)
        skus.push_back({{"sku", sku},
                        {"l1", meta.category.level1},
                        {"l2", meta.category.level2},
                        {"l3", meta.category.level3},
                        {"retail_price", meta.retail_price}});

    j["ingest"] = detail::ingest_to_json(bundle.ingest);
    return j;
}

inline ModelBundle bundle_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "mdpricer-model")
        throw DataError("not a model file (missing format marker)");
    if (j.at("version").get<int>() != 1) throw DataError("unsupported model version");

    ModelBundle bundle(detail::config_from_json(j.at("config")));
    bundle.last_date = j.at("last_date").get<int>();
    bundle.has_data = j.at("has_data").get<bool>();

    const auto& tax = j.at("taxonomy");
    std::array<std::vector<std::string>, 3> ids = {
        tax.at("level1").get<std::vector<std::string>>(),
        tax.at("level2").get<std::vector<std::string>>(),
        tax.at("level3").get<std::vector<std::string>>()};
    std::vector<std::pair<std::string, std::string>> links12, links23;
    for (const auto& e : tax.at("links12")) links12.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    for (const auto& e : tax.at("links23")) links23.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    bundle.taxonomy = Taxonomy::restore(std::move(ids), links12, links23);
    if (bundle.taxonomy.fingerprint() != tax.at("fingerprint").get<std::uint64_t>())
        throw DataError("model taxonomy fingerprint mismatch; file is corrupt or hand-edited");

    const auto& el = j.at("elasticity");
    const int width = el.at("width").get<int>();
    Eigen::MatrixXd gram(width + 2, width + 2);
    const auto& gram_arr = el.at("gram");
    if (static_cast<int>(gram_arr.size()) != (width + 2) * (width + 2))
        throw DataError("model elasticity statistics have the wrong size");
    for (Eigen::Index r = 0; r < gram.rows(); ++r)
        for (Eigen::Index c = 0; c < gram.cols(); ++c)
            gram(r, c) = gram_arr.at(static_cast<std::size_t>(r * gram.cols() + c)).get<double>();
    const auto& moment_arr = el.at("moment");
    if (static_cast<int>(moment_arr.size()) != width + 2)
        throw DataError("model elasticity moment has the wrong size");
    Eigen::VectorXd moment(width + 2);
    for (Eigen::Index i = 0; i < moment.size(); ++i)
        moment(i) = moment_arr.at(static_cast<std::size_t>(i)).get<double>();
    bundle.elasticity =
        ElasticityModel::restore(el.at("ridge").get<double>(), el.at("forgetting").get<double>(),
                                 width, el.at("sample_count").get<std::int64_t>(), std::move(gram),
                                 std::move(moment));

    const auto& fc = j.at("forecaster");
    std::map<std::pair<SkuId, StoreId>, EwmaForecaster::KeyStats> sku_store;
    for (const auto& row : fc.at("sku_store"))
        sku_store[{row.at("sku").get<std::string>(), row.at("store").get<std::string>()}] =
            detail::keystats_from_json(row);
    auto load_keyed = [](const nlohmann::json& arr) {
        std::map<std::string, EwmaForecaster::KeyStats> m;
        for (const auto& row : arr) m[row.at("key").get<std::string>()] = detail::keystats_from_json(row);
        return m;
    };
    std::map<SkuId, EwmaForecaster::KeyStats> by_sku;
    for (const auto& row : fc.at("sku")) by_sku[row.at("key").get<std::string>()] = detail::keystats_from_json(row);
    std::map<SkuId, CategoryPath> categories;
    for (const auto& row : fc.at("categories"))
        categories[row.at("sku").get<std::string>()] =
            CategoryPath{row.at("l1").get<std::string>(), row.at("l2").get<std::string>(),
                         row.at("l3").get<std::string>()};
    bundle.forecaster = EwmaForecaster(
        EwmaForecasterConfig{fc.at("decay").get<double>(), fc.at("window").get<int>()});
    bundle.forecaster.restore_state(std::move(sku_store), std::move(by_sku),
                                    load_keyed(fc.at("level3")), load_keyed(fc.at("level2")),
                                    load_keyed(fc.at("level1")), std::move(categories));

    for (const auto& row : j.at("skus")) {
        SkuMeta meta;
        meta.category = CategoryPath{row.at("l1").get<std::string>(), row.at("l2").get<std::string>(),
                                     row.at("l3").get<std::string>()};
        meta.retail_price = row.at("retail_price").get<double>();
        bundle.skus.emplace(row.at("sku").get<std::string>(), std::move(meta));
    }

    bundle.ingest = detail::ingest_from_json(
        j.at("ingest"), IngestOptions{bundle.config.discount_window, bundle.config.normal_floor});
    return bundle;
}

inline void save_bundle(const ModelBundle& bundle, const std::string& path) {
    write_file_atomic(path, bundle_to_json(bundle).dump(1) + "\n");
}

inline ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return bundle_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file '" + path + "' is malformed: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV schemas

// History: date, sku, store, category_l1, category_l2, category_l3, discount,
// sales_markdown, sales_normal, retail_price.
inline std::vector<RawRow> parse_history_csv(const CsvTable& table) {
    const int c_date = table.column("date");
    const int c_sku = table.column("sku");
    const int c_store = table.column("store");
    const int c_l1 = table.column("category_l1");
    const int c_l2 = table.column("category_l2");
    const int c_l3 = table.column("category_l3");
    const int c_disc = table.column("discount");
    const int c_md = table.column("sales_markdown");
    const int c_nor = table.column("sales_normal");
    const int c_price = table.column("retail_price");

    std::vector<RawRow> rows;
    rows.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        const std::string where = table.origin + " row " + std::to_string(i + 2);
        RawRow row;
        row.date = parse_iso_date(r[static_cast<std::size_t>(c_date)]);
        row.sku = r[static_cast<std::size_t>(c_sku)];
        row.store = r[static_cast<std::size_t>(c_store)];
        row.category = CategoryPath{r[static_cast<std::size_t>(c_l1)], r[static_cast<std::size_t>(c_l2)],
                                    r[static_cast<std::size_t>(c_l3)]};
        row.discount = parse_double_field(r[static_cast<std::size_t>(c_disc)], where);
        row.sales_markdown = parse_double_field(r[static_cast<std::size_t>(c_md)], where);
        row.sales_normal = parse_double_field(r[static_cast<std::size_t>(c_nor)], where);
        row.retail_price = parse_double_field(r[static_cast<std::size_t>(c_price)], where);
        try {
            row.validate();
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string history_to_csv(const std::vector<RawRow>& rows) {
    std::string out =
        "date,sku,store,category_l1,category_l2,category_l3,discount,sales_markdown,sales_normal,retail_price\n";
    for (const auto& r : rows)
        out += format_iso_date(r.date) + "," + r.sku + "," + r.store + "," + r.category.level1 + "," +
               r.category.level2 + "," + r.category.level3 + "," + format_double(r.discount) + "," +
               format_double(r.sales_markdown) + "," + format_double(r.sales_normal) + "," +
               format_double(r.retail_price) + "\n";
    return out;
}

// Instances: sku, store, inventory, horizon, retail_price, waste_weight,
// lower_bound, upper_bound. One row per (sku, store); rows of a SKU merge
// into one multi-shop instance. Bounds snap inward to the grid.
inline std::vector<OptimizeRequest> parse_instances_csv(const CsvTable& table,
                                                        const EngineConfig& cfg) {
    const int c_sku = table.column("sku");
    const int c_store = table.column("store");
    const int c_inv = table.column("inventory");
    const int c_hor = table.column("horizon");
    const int c_price = table.column("retail_price");
    const int c_waste = table.column("waste_weight");
    const int c_lb = table.column("lower_bound");
    const int c_ub = table.column("upper_bound");

    std::vector<OptimizeRequest> requests;
    std::map<SkuId, std::size_t> index;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        const std::string where = table.origin + " row " + std::to_string(i + 2);
        const SkuId sku = r[static_cast<std::size_t>(c_sku)];
        if (sku.empty()) throw DataError(where + ": empty sku");

        ShopRequest shop;
        shop.store = r[static_cast<std::size_t>(c_store)];
        if (shop.store.empty()) throw DataError(where + ": empty store");
        shop.inventory = parse_int_field(r[static_cast<std::size_t>(c_inv)], where);
        if (shop.inventory < 0) throw DataError(where + ": inventory must be >= 0");
        shop.horizon = static_cast<int>(parse_int_field(r[static_cast<std::size_t>(c_hor)], where));
        if (shop.horizon < 1) throw DataError(where + ": horizon must be >= 1");
        shop.waste_weight = parse_double_field(r[static_cast<std::size_t>(c_waste)], where);
        shop.lower_bound = parse_double_field(r[static_cast<std::size_t>(c_lb)], where);
        shop.upper_bound = parse_double_field(r[static_cast<std::size_t>(c_ub)], where);
        if (!(shop.lower_bound <= shop.upper_bound))
            throw DataError(where + ": lower bound exceeds upper bound");

        const Money price = parse_double_field(r[static_cast<std::size_t>(c_price)], where);
        auto [it, inserted] = index.try_emplace(sku, requests.size());
        if (inserted) {
            OptimizeRequest req;
            req.sku = sku;
            req.retail_price = price;
            requests.push_back(std::move(req));
        } else if (requests[it->second].retail_price != price) {
            throw DataError(where + ": retail price disagrees with an earlier row for sku '" + sku + "'");
        }
        requests[it->second].shops.push_back(std::move(shop));
    }
    if (requests.empty()) throw DataError(table.origin + ": no instance rows");

    // Snap bounds inward onto grid points so the optimizer's feasible sets
    // are exactly the intended grid slices.
    const std::vector<Discount> grid = cfg.grid();
    for (auto& req : requests)
        for (auto& shop : req.shops) {
            double lo = 2.0, hi = -1.0;
            for (double d : grid) {
                if (d >= shop.lower_bound - 1e-9) lo = std::min(lo, d);
                if (d <= shop.upper_bound + 1e-9) hi = std::max(hi, d);
            }
            if (lo <= hi) {
                shop.lower_bound = lo;
                shop.upper_bound = hi;
            }
            // No grid point inside: leave the raw bounds so the optimizer
            // reports the infeasibility (or applies its late-period fallback).
        }
    return requests;
}

inline std::string decisions_to_csv(const std::vector<OptimizeOutcome>& outcomes, int date) {
    std::string out = "sku,date,first_discount,first_price,expected_total_reward,feasible_action_count,status\n";
    for (const auto& o : outcomes) {
        out += o.sku + "," + format_iso_date(date) + ",";
        if (o.decision) {
            out += format_double(o.decision->first_discount) + "," +
                   format_double(o.decision->first_price) + "," +
                   format_double(o.decision->expected_total_reward) + "," +
                   std::to_string(o.decision->feasible_action_count) + ",ok\n";
        } else {
            out += ",,,0,infeasible\n";
        }
    }
    return out;
}

inline std::string curves_to_csv(const std::vector<DemandCurve>& curves) {
    std::string out = "sku,store,period,discount,expected_sales\n";
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.grid.size(); ++i)
            out += c.sku + "," + c.store + "," + std::to_string(c.period) + "," +
                   format_double(c.grid[i]) + "," + format_double(c.expected_sales[i]) + "\n";
    return out;
}

// Prepared base forecasts: sku, store, period, base_discount, base_sales,
// normal_sales.
inline CsvForecaster parse_base_csv(const CsvTable& table) {
    const int c_sku = table.column("sku");
    const int c_store = table.column("store");
    const int c_period = table.column("period");
    const int c_do = table.column("base_discount");
    const int c_yo = table.column("base_sales");
    const int c_z = table.column("normal_sales");
    CsvForecaster fc;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        const std::string where = table.origin + " row " + std::to_string(i + 2);
        BaseForecast b;
        b.sku = r[static_cast<std::size_t>(c_sku)];
        b.store = r[static_cast<std::size_t>(c_store)];
        b.period = static_cast<int>(parse_int_field(r[static_cast<std::size_t>(c_period)], where));
        b.base_discount = parse_double_field(r[static_cast<std::size_t>(c_do)], where);
        b.base_sales = parse_double_field(r[static_cast<std::size_t>(c_yo)], where);
        b.normal_sales = parse_double_field(r[static_cast<std::size_t>(c_z)], where);
        try {
            fc.add(std::move(b));
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return fc;
}

}  // namespace mdpricer
