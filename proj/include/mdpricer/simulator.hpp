#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mdpricer/config.hpp"
#include "mdpricer/dates.hpp"
#include "mdpricer/domain.hpp"
#include "mdpricer/errors.hpp"
#include "mdpricer/ingest.hpp"
#include "mdpricer/pipeline.hpp"
#include "mdpricer/poisson.hpp"
#include "mdpricer/rng.hpp"

namespace mdpricer {

enum class NoiseMode { poisson, none, negbin };

// Synthetic market with a planted constant-elasticity demand system:
// markdown demand rate = normal_level * exp(intercept) * d^e, with e built
// from a shared slope plus per-category offsets at each taxonomy level.
struct MarketSpec {
    std::uint64_t seed = 1;
    int num_skus = 30;
    int shape_level1 = 2, shape_level2 = 2, shape_level3 = 2;  // ids per level, full cross product of leaves
    int num_shops = 2;
    int history_days = 60;
    int base_date = days_from_civil(2025, 1, 1);

    double theta_shared = -2.0;
    double level1_spread = 0.4, level2_spread = 0.25, level3_spread = 0.15;
    double intercept = std::log(0.8);

    double normal_sales_min = 15.0, normal_sales_max = 45.0;
    double base_discount_min = 0.55, base_discount_max = 0.85;
    double discount_halfwidth = 0.10;  // history discounts drawn around the base
    double retail_price_min = 4.0, retail_price_max = 25.0;

    int horizon_min = 3, horizon_max = 6;
    double stock_ratio_min = 0.5, stock_ratio_max = 1.3;  // inventory as a multiple of expected sell-through
    std::int64_t max_inventory = 300;
    double waste_weight_min = 0.0, waste_weight_max = 0.0;

    NoiseMode noise = NoiseMode::poisson;
    double negbin_dispersion = 8.0;

    int leaf_count() const { return shape_level1 * shape_level2 * shape_level3; }

    void validate() const {
        if (num_skus < 1) throw ConfigError("market needs at least one sku");
        if (shape_level1 < 1 || shape_level2 < 1 || shape_level3 < 1)
            throw ConfigError("taxonomy shape counts must be >= 1");
        if (num_skus < leaf_count())
            throw ConfigError("num_skus must cover every leaf category at least once (need >= " +
                              std::to_string(leaf_count()) + ")");
        if (num_shops < 1) throw ConfigError("market needs at least one shop");
        if (history_days < 1) throw ConfigError("history must span at least one day");
        if (!(theta_shared + level1_spread + level2_spread + level3_spread < 0.0))
            throw ConfigError("elasticity spreads must keep every leaf elasticity negative");
        if (!(normal_sales_min > 0.0 && normal_sales_max >= normal_sales_min))
            throw ConfigError("normal sales range must be positive");
        require_discount(base_discount_min, "base discount min");
        require_discount(base_discount_max, "base discount max");
        if (base_discount_min > base_discount_max) throw ConfigError("base discount range inverted");
        if (!(discount_halfwidth >= 0.0 && discount_halfwidth < 0.5))
            throw ConfigError("discount halfwidth must lie in [0, 0.5)");
        if (!(retail_price_min > 0.0 && retail_price_max >= retail_price_min))
            throw ConfigError("retail price range must be positive");
        if (horizon_min < 1 || horizon_max < horizon_min) throw ConfigError("horizon range invalid");
        if (!(stock_ratio_min > 0.0 && stock_ratio_max >= stock_ratio_min))
            throw ConfigError("stock ratio range must be positive");
        if (max_inventory < 1) throw ConfigError("max inventory must be >= 1");
        if (!(waste_weight_min >= 0.0 && waste_weight_max >= waste_weight_min))
            throw ConfigError("waste weight range invalid");
        if (!(std::isfinite(negbin_dispersion) && negbin_dispersion > 0.0))
            throw ConfigError("negative binomial dispersion must be > 0");
    }
};

struct SkuTruth {
    SkuId sku;
    CategoryPath category;
    double elasticity = 0.0;  // theta' [1, L] for this SKU's leaf
    Money retail_price = 0.0;
    Discount base_discount = 0.7;
    std::vector<Discount> history_levels;    // the few discounts this SKU posted historically
    std::vector<double> normal_level;        // per shop index
    std::vector<std::int64_t> initial_inventory;  // per shop index, campaign start
    std::vector<int> horizon;                // per shop index, campaign length
    std::vector<Money> waste_weight;         // per shop index
};

struct GroundTruth {
    Taxonomy taxonomy;
    Eigen::VectorXd theta_star;  // minimum-norm representative, length m + 1
    double intercept = 0.0;
    std::vector<SkuTruth> skus;
    std::vector<StoreId> shops;

    double demand_rate(std::size_t sku_idx, std::size_t shop_idx, Discount d) const {
        const SkuTruth& s = skus[sku_idx];
        return s.normal_level[shop_idx] * std::exp(intercept) * std::pow(d, s.elasticity);
    }
};

struct Market {
    MarketSpec spec;
    GroundTruth truth;
    std::vector<RawRow> history;
};

namespace detail {

// Key tags for the market's independent random streams.
enum : std::uint64_t {
    kDrawHistoryDiscount = 10,
    kDrawHistoryMarkdown = 11,
    kDrawHistoryNormal = 12,
    kDrawCampaignMarkdown = 20,
    kDrawCampaignNormal = 21,
    kDrawSkuParam = 30,
    kDrawShopParam = 31,
    kDrawThetaOffset = 32
};

inline double uniform_in(double lo, double hi, double u) { return lo + u * (hi - lo); }

// History rows may carry fractional sales, so noise-free histories reproduce
// the planted rates exactly. Campaign draws move physical stock and must be
// whole units.
inline double realize_history(NoiseMode mode, double lambda, double u, double dispersion) {
    switch (mode) {
        case NoiseMode::poisson: return static_cast<double>(poisson_inverse_draw(u, lambda));
        case NoiseMode::negbin:
            return static_cast<double>(negative_binomial_inverse_draw(u, lambda, dispersion));
        case NoiseMode::none: return lambda;
    }
    return 0.0;
}

inline std::int64_t realize_units(NoiseMode mode, double lambda, double u, double dispersion) {
    switch (mode) {
        case NoiseMode::poisson: return poisson_inverse_draw(u, lambda);
        case NoiseMode::negbin: return negative_binomial_inverse_draw(u, lambda, dispersion);
        case NoiseMode::none: return std::llround(lambda);
    }
    return 0;
}

}  // namespace detail

// Builds the market deterministically from the seed. SKUs cover the leaves
// round-robin in id order, so a model fitted on this history indexes its
// design vectors exactly like the planted coefficient vector.
inline Market generate_market(const MarketSpec& spec) {
    spec.validate();
    Market market;
    market.spec = spec;
    GroundTruth& truth = market.truth;
    truth.intercept = spec.intercept;

    const int k1 = spec.shape_level1, k2 = spec.shape_level2, k3 = spec.shape_level3;
    const int leaves = spec.leaf_count();
    auto id_name = [](char prefix, int idx) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%c%03d", prefix, idx);
        return std::string(buf);
    };
    auto leaf_path = [&](int leaf) {
        return CategoryPath{id_name('a', leaf / (k2 * k3)), id_name('b', (leaf / k3) % k2),
                            id_name('c', leaf % k3)};
    };

    for (int j = 0; j < spec.num_shops; ++j) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "shop%02d", j);
        truth.shops.emplace_back(buf);
    }

    // Planted coefficients: shared slope plus one offset per category id.
    const int m = k1 + k2 + k3;
    Eigen::VectorXd theta_raw = Eigen::VectorXd::Zero(m + 1);
    theta_raw(0) = spec.theta_shared;
    const double spreads[3] = {spec.level1_spread, spec.level2_spread, spec.level3_spread};
    const int counts[3] = {k1, k2, k3};
    int offset = 1;
    for (int level = 0; level < 3; ++level) {
        for (int idx = 0; idx < counts[level]; ++idx) {
            const double u = keyed_uniform(spec.seed, {detail::kDrawThetaOffset,
                                                       static_cast<std::uint64_t>(level),
                                                       static_cast<std::uint64_t>(idx)});
            theta_raw(offset + idx) = (2.0 * u - 1.0) * spreads[level];
        }
        offset += counts[level];
    }

    // SKUs: leaf assignment round-robin, parameters from keyed streams.
    for (int i = 0; i < spec.num_skus; ++i) {
        SkuTruth sku;
        char buf[16];
        std::snprintf(buf, sizeof buf, "sku%04d", i);
        sku.sku = buf;
        sku.category = leaf_path(i % leaves);
        truth.taxonomy.add(sku.category);

        auto param = [&](std::uint64_t which) {
            return keyed_uniform(spec.seed, {detail::kDrawSkuParam, static_cast<std::uint64_t>(i), which});
        };
        sku.retail_price =
            std::llround(detail::uniform_in(spec.retail_price_min, spec.retail_price_max, param(0)) * 100.0) /
            100.0;
        sku.base_discount = detail::uniform_in(spec.base_discount_min, spec.base_discount_max, param(1));

        // Prices change infrequently: each SKU posts only 1-3 distinct
        // discounts across its whole history, all near its base.
        const int n_levels = 1 + std::min(2, static_cast<int>(std::floor(param(2) * 3.0)));
        for (int k = 0; k < n_levels; ++k)
            sku.history_levels.push_back(
                std::clamp(detail::uniform_in(sku.base_discount - spec.discount_halfwidth,
                                              sku.base_discount + spec.discount_halfwidth,
                                              param(3 + static_cast<std::uint64_t>(k))),
                           0.05, 1.0));

        for (int j = 0; j < spec.num_shops; ++j) {
            auto shop_param = [&](std::uint64_t which) {
                return keyed_uniform(spec.seed, {detail::kDrawShopParam, static_cast<std::uint64_t>(i),
                                                 static_cast<std::uint64_t>(j), which});
            };
            sku.normal_level.push_back(
                detail::uniform_in(spec.normal_sales_min, spec.normal_sales_max, shop_param(0)));
            sku.horizon.push_back(spec.horizon_min +
                                  static_cast<int>(std::floor(shop_param(1) *
                                                              (spec.horizon_max - spec.horizon_min + 1))));
            sku.waste_weight.push_back(
                detail::uniform_in(spec.waste_weight_min, spec.waste_weight_max, shop_param(2)));
        }
        truth.skus.push_back(std::move(sku));
    }

    // Per-SKU elasticities off the raw plant; the reported coefficient vector
    // is its minimum-norm representative over the observed leaf designs (the
    // one-hot blocks are collinear, so only that representative is learnable).
    Eigen::MatrixXd designs(leaves, m + 1);
    for (int leaf = 0; leaf < leaves; ++leaf) {
        const EffectModifierVector l = encode_category(leaf_path(leaf), truth.taxonomy);
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m + 1);
        row(0) = 1.0;
        for (int pos : l.hot_positions()) row(pos + 1) = 1.0;
        designs.row(leaf) = row;
    }
    truth.theta_star = designs.completeOrthogonalDecomposition().solve(designs * theta_raw);
    for (auto& sku : truth.skus) {
        const EffectModifierVector l = encode_category(sku.category, truth.taxonomy);
        sku.elasticity = l.dot_augmented(theta_raw);
    }

    // Inventories sized against expected sell-through over the horizon.
    for (std::size_t i = 0; i < truth.skus.size(); ++i) {
        SkuTruth& sku = truth.skus[i];
        for (int j = 0; j < spec.num_shops; ++j) {
            const double daily = truth.demand_rate(i, static_cast<std::size_t>(j), sku.base_discount) +
                                 sku.normal_level[static_cast<std::size_t>(j)];
            const double ratio = detail::uniform_in(
                spec.stock_ratio_min, spec.stock_ratio_max,
                keyed_uniform(spec.seed, {detail::kDrawShopParam, static_cast<std::uint64_t>(i),
                                          static_cast<std::uint64_t>(j), 9}));
            const double target = ratio * daily * sku.horizon[static_cast<std::size_t>(j)];
            sku.initial_inventory.push_back(
                std::clamp<std::int64_t>(std::llround(target), 1, spec.max_inventory));
        }
    }

    // History: every (sku, shop) trades every day at one of the SKU's few
    // posted discounts.
    market.history.reserve(static_cast<std::size_t>(spec.history_days) *
                           static_cast<std::size_t>(spec.num_skus) *
                           static_cast<std::size_t>(spec.num_shops));
    for (int day = 0; day < spec.history_days; ++day) {
        const int date = spec.base_date + day;
        for (int i = 0; i < spec.num_skus; ++i) {
            const SkuTruth& sku = truth.skus[static_cast<std::size_t>(i)];
            for (int j = 0; j < spec.num_shops; ++j) {
                auto u = [&](std::uint64_t tag) {
                    return keyed_uniform(spec.seed, {tag, static_cast<std::uint64_t>(date),
                                                     static_cast<std::uint64_t>(i),
                                                     static_cast<std::uint64_t>(j)});
                };
                const auto& levels = sku.history_levels;
                const auto pick = std::min(
                    levels.size() - 1, static_cast<std::size_t>(std::floor(
                                           u(detail::kDrawHistoryDiscount) *
                                           static_cast<double>(levels.size()))));
                const double d = levels[pick];
                const double rate =
                    truth.demand_rate(static_cast<std::size_t>(i), static_cast<std::size_t>(j), d);
                RawRow row;
                row.date = date;
                row.sku = sku.sku;
                row.store = truth.shops[static_cast<std::size_t>(j)];
                row.category = sku.category;
                row.discount = d;
                row.sales_markdown = detail::realize_history(
                    spec.noise, rate, u(detail::kDrawHistoryMarkdown), spec.negbin_dispersion);
                row.sales_normal = detail::realize_history(
                    spec.noise, sku.normal_level[static_cast<std::size_t>(j)],
                    u(detail::kDrawHistoryNormal), spec.negbin_dispersion);
                row.retail_price = sku.retail_price;
                market.history.push_back(std::move(row));
            }
        }
    }
    return market;
}

// ---------------------------------------------------------------------------
// Receding-horizon campaign

struct PolicySpec {
    enum class Kind { engine, fixed };
    Kind kind = Kind::engine;
    Discount fixed_discount = 0.7;
};

struct TrajectoryRow {
    int day = 1;  // campaign day, 1-based
    int date = 0;
    SkuId sku;
    StoreId store;
    Discount discount = 1.0;
    Money retail_price = 0.0;
    std::int64_t sales_markdown = 0;
    std::int64_t sales_normal = 0;
    std::int64_t inventory_begin = 0;
    std::int64_t inventory_end = 0;
};

struct CompletionMetrics {
    double tcr_normal = 0.0;    // normal-channel units sold / initial stock
    double tcr_markdown = 0.0;  // markdown units sold / initial stock
    double tcr_total = 0.0;     // sum of the two
    double gmv_improvement = 0.0;  // markdown GMV / normal GMV
};

struct SimulationReport {
    std::vector<TrajectoryRow> rows;
    std::vector<std::pair<int, double>> elasticity_trace;  // (date, max|theta - theta*|)
    Money total_reward = 0.0;      // sum over days of (p0 d + w) * markdown sales
    std::int64_t waste_units = 0;  // stock left when each shop's horizon ended
    CompletionMetrics metrics;
};

inline double rmae(const std::vector<double>& actual, const std::vector<double>& predicted) {
    if (actual.size() != predicted.size())
        throw DimensionError("rmae needs equally long actual and predicted vectors");
    if (actual.empty()) throw DataError("rmae of empty vectors");
    double abs_err = 0.0, total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        abs_err += std::abs(actual[i] - predicted[i]);
        total += actual[i];
    }
    if (!(total > 0.0)) throw DataError("rmae denominator is not positive");
    return abs_err / total;
}

// Aggregates from trajectory rows alone, so stored runs can be re-scored.
inline CompletionMetrics completion_metrics(const std::vector<TrajectoryRow>& rows) {
    if (rows.empty()) throw DataError("no trajectory rows to score");
    std::map<std::pair<SkuId, StoreId>, std::pair<int, std::int64_t>> first_seen;  // day -> stock
    double sold_normal = 0.0, sold_markdown = 0.0;
    double gmv_markdown = 0.0, gmv_normal = 0.0;
    for (const auto& r : rows) {
        auto key = std::make_pair(r.sku, r.store);
        auto it = first_seen.find(key);
        if (it == first_seen.end() || r.day < it->second.first)
            first_seen[key] = {r.day, r.inventory_begin};
        sold_normal += static_cast<double>(r.sales_normal);
        sold_markdown += static_cast<double>(r.sales_markdown);
        gmv_markdown += r.retail_price * r.discount * static_cast<double>(r.sales_markdown);
        gmv_normal += r.retail_price * static_cast<double>(r.sales_normal);
    }
    double initial_stock = 0.0;
    for (const auto& [key, day_stock] : first_seen) initial_stock += static_cast<double>(day_stock.second);
    if (!(initial_stock > 0.0)) throw DataError("trajectories carry no initial stock");

    CompletionMetrics m;
    m.tcr_normal = sold_normal / initial_stock;
    m.tcr_markdown = sold_markdown / initial_stock;
    m.tcr_total = m.tcr_normal + m.tcr_markdown;
    m.gmv_improvement = gmv_normal > 0.0 ? gmv_markdown / gmv_normal : 0.0;
    return m;
}

// Plays one markdown campaign over the market's ground truth. Demand draws
// are keyed by (seed, date, sku, shop, channel) only, so runs under different
// policies see common random numbers. The engine policy refits daily from
// realized sales; fixed policies post one discount throughout.
inline SimulationReport run_receding_horizon(const Market& market, const EngineConfig& cfg,
                                             const PolicySpec& policy = {}) {
    const MarketSpec& spec = market.spec;
    const GroundTruth& truth = market.truth;

    SimulationReport report;
    ModelBundle bundle;
    DayCallback trace = [&](const ModelBundle& b, int date) {
        const auto est = b.elasticity.estimate();
        if (est.theta.size() == truth.theta_star.size())
            report.elasticity_trace.emplace_back(
                date, (est.theta - truth.theta_star).cwiseAbs().maxCoeff());
    };
    if (policy.kind == PolicySpec::Kind::engine) bundle = fit_bundle(market.history, cfg, trace);

    Discount fixed = policy.fixed_discount;
    if (policy.kind == PolicySpec::Kind::fixed) {
        require_discount(fixed, "fixed policy");
        const auto grid = cfg.grid();
        double best = grid.front();
        for (double d : grid)
            if (std::abs(d - fixed) < std::abs(best - fixed)) best = d;
        fixed = best;
    }

    std::vector<std::vector<std::int64_t>> stock;
    int campaign_days = 0;
    for (const auto& sku : truth.skus) {
        stock.push_back(sku.initial_inventory);
        for (int t : sku.horizon) campaign_days = std::max(campaign_days, t);
    }

    const int history_end = spec.base_date + spec.history_days;  // first campaign date
    for (int t = 1; t <= campaign_days; ++t) {
        const int date = history_end + (t - 1);
        std::vector<RawRow> realized;

        // Decisions first (morning), then demand realizes, then the engine
        // learns from the day overnight.
        std::vector<Discount> decision(truth.skus.size(), fixed);
        if (policy.kind == PolicySpec::Kind::engine) {
            const auto estimate = bundle.elasticity.estimate();
            for (std::size_t i = 0; i < truth.skus.size(); ++i) {
                const SkuTruth& sku = truth.skus[i];
                OptimizeRequest req;
                req.sku = sku.sku;
                for (std::size_t j = 0; j < truth.shops.size(); ++j) {
                    if (t > sku.horizon[j]) continue;
                    ShopRequest shop;
                    shop.store = truth.shops[j];
                    shop.inventory = stock[i][j];
                    shop.horizon = sku.horizon[j] - t + 1;
                    shop.waste_weight = sku.waste_weight[j];
                    shop.lower_bound = cfg.default_lower_bound;
                    shop.upper_bound = cfg.default_upper_bound;
                    req.shops.push_back(std::move(shop));
                }
                if (req.shops.empty()) continue;
                decision[i] = optimize_first_period(build_instance(bundle, estimate, req)).first_discount;
            }
        }

        for (std::size_t i = 0; i < truth.skus.size(); ++i) {
            const SkuTruth& sku = truth.skus[i];
            for (std::size_t j = 0; j < truth.shops.size(); ++j) {
                if (t > sku.horizon[j]) continue;
                const Discount d = decision[i];
                const double md_rate = truth.demand_rate(i, j, d);
                auto u = [&](std::uint64_t tag) {
                    return keyed_uniform(spec.seed, {tag, static_cast<std::uint64_t>(date),
                                                     static_cast<std::uint64_t>(i),
                                                     static_cast<std::uint64_t>(j)});
                };
                const std::int64_t md_demand = detail::realize_units(
                    spec.noise, md_rate, u(detail::kDrawCampaignMarkdown), spec.negbin_dispersion);
                const std::int64_t nor_demand = detail::realize_units(
                    spec.noise, sku.normal_level[j], u(detail::kDrawCampaignNormal), spec.negbin_dispersion);

                TrajectoryRow row;
                row.day = t;
                row.date = date;
                row.sku = sku.sku;
                row.store = truth.shops[j];
                row.discount = d;
                row.retail_price = sku.retail_price;
                row.inventory_begin = stock[i][j];

                // The normal channel is served first when stock runs short.
                const std::int64_t sold_normal = std::min(nor_demand, stock[i][j]);
                const std::int64_t sold_markdown = std::min(md_demand, stock[i][j] - sold_normal);
                stock[i][j] -= sold_normal + sold_markdown;
                row.sales_normal = sold_normal;
                row.sales_markdown = sold_markdown;
                row.inventory_end = stock[i][j];
                report.total_reward +=
                    (sku.retail_price * d + sku.waste_weight[j]) * static_cast<double>(sold_markdown);
                if (t == sku.horizon[j]) report.waste_units += stock[i][j];

                if (policy.kind == PolicySpec::Kind::engine) {
                    RawRow raw;
                    raw.date = date;
                    raw.sku = sku.sku;
                    raw.store = truth.shops[j];
                    raw.category = sku.category;
                    raw.discount = d;
                    raw.sales_markdown = static_cast<double>(sold_markdown);
                    raw.sales_normal = static_cast<double>(sold_normal);
                    raw.retail_price = sku.retail_price;
                    realized.push_back(std::move(raw));
                }
                report.rows.push_back(std::move(row));
            }
        }

        if (policy.kind == PolicySpec::Kind::engine && !realized.empty() && t < campaign_days)
            update_bundle(bundle, std::move(realized), trace);
    }

    report.metrics = completion_metrics(report.rows);
    return report;
}

inline std::string trajectories_to_csv(const std::vector<TrajectoryRow>& rows) {
    std::string out =
        "day,date,sku,store,discount,retail_price,sales_markdown,sales_normal,inventory_begin,inventory_end\n";
    for (const auto& r : rows)
        out += std::to_string(r.day) + "," + format_iso_date(r.date) + "," + r.sku + "," + r.store +
               "," + format_double(r.discount) + "," + format_double(r.retail_price) + "," +
               std::to_string(r.sales_markdown) + "," + std::to_string(r.sales_normal) + "," +
               std::to_string(r.inventory_begin) + "," + std::to_string(r.inventory_end) + "\n";
    return out;
}

inline std::vector<TrajectoryRow> trajectories_from_csv(const CsvTable& table) {
    const int c_day = table.column("day");
    const int c_date = table.column("date");
    const int c_sku = table.column("sku");
    const int c_store = table.column("store");
    const int c_disc = table.column("discount");
    const int c_price = table.column("retail_price");
    const int c_md = table.column("sales_markdown");
    const int c_nor = table.column("sales_normal");
    const int c_beg = table.column("inventory_begin");
    const int c_end = table.column("inventory_end");
    std::vector<TrajectoryRow> rows;
    rows.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        const std::string where = table.origin + " row " + std::to_string(i + 2);
        TrajectoryRow row;
        row.day = static_cast<int>(parse_int_field(r[static_cast<std::size_t>(c_day)], where));
        row.date = parse_iso_date(r[static_cast<std::size_t>(c_date)]);
        row.sku = r[static_cast<std::size_t>(c_sku)];
        row.store = r[static_cast<std::size_t>(c_store)];
        row.discount = parse_double_field(r[static_cast<std::size_t>(c_disc)], where);
        row.retail_price = parse_double_field(r[static_cast<std::size_t>(c_price)], where);
        row.sales_markdown = parse_int_field(r[static_cast<std::size_t>(c_md)], where);
        row.sales_normal = parse_int_field(r[static_cast<std::size_t>(c_nor)], where);
        row.inventory_begin = parse_int_field(r[static_cast<std::size_t>(c_beg)], where);
        row.inventory_end = parse_int_field(r[static_cast<std::size_t>(c_end)], where);
        rows.push_back(std::move(row));
    }
    return rows;
}

// [market] section of an INI file; unknown keys are errors.
inline MarketSpec load_market_spec(const IniFile& file) {
    const IniFile::Section* section = file.find("market");
    if (!section) throw ConfigError(file.origin + ": missing [market] section");
    MarketSpec spec;
    bool versioned = false;
    for (const auto& e : section->entries) {
        const std::string where = file.origin + ":" + std::to_string(e.line);
        if (e.key == "version") {
            if (parse_int(e.value, where) != 1)
                throw ConfigError(where + ": unsupported market spec version");
            versioned = true;
        } else if (e.key == "seed") {
            spec.seed = static_cast<std::uint64_t>(parse_int(e.value, where));
        } else if (e.key == "num_skus") {
            spec.num_skus = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "shape_level1") {
            spec.shape_level1 = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "shape_level2") {
            spec.shape_level2 = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "shape_level3") {
            spec.shape_level3 = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "num_shops") {
            spec.num_shops = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "history_days") {
            spec.history_days = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "base_date") {
            spec.base_date = parse_iso_date(e.value);
        } else if (e.key == "theta_shared") {
            spec.theta_shared = parse_double(e.value, where);
        } else if (e.key == "level1_spread") {
            spec.level1_spread = parse_double(e.value, where);
        } else if (e.key == "level2_spread") {
            spec.level2_spread = parse_double(e.value, where);
        } else if (e.key == "level3_spread") {
            spec.level3_spread = parse_double(e.value, where);
        } else if (e.key == "intercept") {
            spec.intercept = parse_double(e.value, where);
        } else if (e.key == "normal_sales_min") {
            spec.normal_sales_min = parse_double(e.value, where);
        } else if (e.key == "normal_sales_max") {
            spec.normal_sales_max = parse_double(e.value, where);
        } else if (e.key == "base_discount_min") {
            spec.base_discount_min = parse_double(e.value, where);
        } else if (e.key == "base_discount_max") {
            spec.base_discount_max = parse_double(e.value, where);
        } else if (e.key == "discount_halfwidth") {
            spec.discount_halfwidth = parse_double(e.value, where);
        } else if (e.key == "retail_price_min") {
            spec.retail_price_min = parse_double(e.value, where);
        } else if (e.key == "retail_price_max") {
            spec.retail_price_max = parse_double(e.value, where);
        } else if (e.key == "horizon_min") {
            spec.horizon_min = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "horizon_max") {
            spec.horizon_max = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "stock_ratio_min") {
            spec.stock_ratio_min = parse_double(e.value, where);
        } else if (e.key == "stock_ratio_max") {
            spec.stock_ratio_max = parse_double(e.value, where);
        } else if (e.key == "max_inventory") {
            spec.max_inventory = parse_int(e.value, where);
        } else if (e.key == "waste_weight_min") {
            spec.waste_weight_min = parse_double(e.value, where);
        } else if (e.key == "waste_weight_max") {
            spec.waste_weight_max = parse_double(e.value, where);
        } else if (e.key == "noise") {
            if (e.value == "poisson") spec.noise = NoiseMode::poisson;
            else if (e.value == "none") spec.noise = NoiseMode::none;
            else if (e.value == "negbin") spec.noise = NoiseMode::negbin;
            else throw ConfigError(where + ": noise must be poisson, none, or negbin");
        } else if (e.key == "negbin_dispersion") {
            spec.negbin_dispersion = parse_double(e.value, where);
        } else {
            throw ConfigError(where + ": unknown key '" + e.key + "' in [market]");
        }
    }
    if (!versioned) throw ConfigError(file.origin + ": [market] must declare version = 1");
    spec.validate();
    return spec;
}

}  // namespace mdpricer
