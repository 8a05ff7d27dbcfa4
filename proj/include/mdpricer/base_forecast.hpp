#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mdpricer/domain.hpp"
#include "mdpricer/errors.hpp"

namespace mdpricer {

// What the demand side of the optimizer consumes: the anchor the
// counterfactual scaling pivots on, plus the normal-channel level.
struct BaseForecast {
    SkuId sku;
    StoreId store;
    int period = 1;
    Discount base_discount = 1.0;  // d_o, trailing average of posted discounts
    Sales base_sales = 0.0;        // y_o, expected markdown sales at d_o
    Sales normal_sales = 0.0;      // z, expected normal-channel sales

    void validate() const {
        require_discount(base_discount, "base forecast " + sku + "/" + store);
        if (!(std::isfinite(base_sales) && base_sales >= 0.0))
            throw DataError("base forecast " + sku + "/" + store + ": base sales must be finite and >= 0");
        if (!(std::isfinite(normal_sales) && normal_sales >= 0.0))
            throw DataError("base forecast " + sku + "/" + store + ": normal sales must be finite and >= 0");
    }
};

class Forecaster {
public:
    virtual ~Forecaster() = default;

    // `hint` supplies the category for SKUs with no history of their own.
    virtual BaseForecast predict_base(const SkuId& sku, const StoreId& store, int period,
                                      const std::optional<CategoryPath>& hint = {}) const = 0;
};

struct EwmaForecasterConfig {
    double decay = 0.8;        // per-day weight on older history
    int discount_window = 28;  // trailing days averaged into d_o

    void validate() const {
        if (!(std::isfinite(decay) && decay > 0.0 && decay <= 1.0))
            throw ConfigError("forecaster decay must lie in (0, 1]");
        if (discount_window < 1) throw ConfigError("discount window must be >= 1 day");
    }
};

// Exponentially weighted base forecaster with granularity fallback.
//
// Three components are tracked per key: the mean log sales ratio (so
// y_o = z * exp(h)), the mean normal-channel level z, and a plain average of
// discounts over a trailing window for d_o. Keys run from (sku, store) down
// to level-1 category; each component independently falls back to the first
// key that has data for it, so a SKU whose markdown channel never sold can
// still borrow a ratio from its category while keeping its own discounts.
class EwmaForecaster : public Forecaster {
public:
    struct KeyStats {
        double ratio_num = 0.0, ratio_den = 0.0;    // EW mean of ln(Y / Y_nor)
        double normal_num = 0.0, normal_den = 0.0;  // EW mean of baseline level
        int last_day = 0;
        bool touched = false;
        std::deque<std::pair<int, Discount>> discounts;  // (day, d) within window
        double discount_sum = 0.0;
    };

    explicit EwmaForecaster(EwmaForecasterConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    const EwmaForecasterConfig& config() const { return cfg_; }

    // Replays history in date order. Same training set, same state, whatever
    // order the rows arrived in.
    void fit(std::vector<ObservationRecord> history) {
        if (history.empty()) throw DataError("forecaster fit requires at least one record");
        std::stable_sort(history.begin(), history.end(),
                         [](const ObservationRecord& a, const ObservationRecord& b) {
                             return std::tie(a.date, a.sku, a.store) < std::tie(b.date, b.sku, b.store);
                         });
        std::size_t start = 0;
        while (start < history.size()) {
            std::size_t end = start;
            while (end < history.size() && history[end].date == history[start].date) ++end;
            ingest_day(std::span<const ObservationRecord>(history.data() + start, end - start));
            start = end;
        }
    }

    // Absorbs one day of records; days must arrive in nondecreasing date order.
    void ingest_day(std::span<const ObservationRecord> records) {
        for (const auto& rec : records) {
            rec.validate();
            if (!sku_category_.contains(rec.sku)) sku_category_.emplace(rec.sku, rec.category);
            touch(by_sku_store_[{rec.sku, rec.store}], rec);
            touch(by_sku_[rec.sku], rec);
            touch(by_level3_[rec.category.level3], rec);
            touch(by_level2_[rec.category.level2], rec);
            touch(by_level1_[rec.category.level1], rec);
        }
    }

    BaseForecast predict_base(const SkuId& sku, const StoreId& store, int period,
                              const std::optional<CategoryPath>& hint = {}) const override {
        const CategoryPath* category = nullptr;
        if (auto it = sku_category_.find(sku); it != sku_category_.end())
            category = &it->second;
        else if (hint)
            category = &*hint;
        else
            throw DataError("no history and no category hint for sku '" + sku + "'");

        const std::vector<const KeyStats*> chain = fallback_chain(sku, store, *category);

        BaseForecast out;
        out.sku = sku;
        out.store = store;
        out.period = period;

        const KeyStats* ratio_key = first_with(chain, [](const KeyStats& k) { return k.ratio_den > 0.0; });
        const KeyStats* normal_key = first_with(chain, [](const KeyStats& k) { return k.normal_den > 0.0; });
        const KeyStats* disc_key = first_with(chain, [](const KeyStats& k) { return !k.discounts.empty(); });
        std::string missing;
        if (!ratio_key) missing += " sales-ratio";
        if (!normal_key) missing += " normal-level";
        if (!disc_key) missing += " discount";
        if (!missing.empty())
            throw DataError("no base forecast for sku '" + sku + "' store '" + store +
                            "': no" + missing + " history at any fallback level");

        const double h = ratio_key->ratio_num / ratio_key->ratio_den;
        out.normal_sales = normal_key->normal_num / normal_key->normal_den;
        out.base_discount = std::min(1.0, disc_key->discount_sum / static_cast<double>(disc_key->discounts.size()));
        out.base_sales = out.normal_sales * std::exp(h);
        out.validate();
        return out;
    }

    // State access for persistence.
    const std::map<std::pair<SkuId, StoreId>, KeyStats>& sku_store_stats() const { return by_sku_store_; }
    const std::map<SkuId, KeyStats>& sku_stats() const { return by_sku_; }
    const std::map<std::string, KeyStats>& level3_stats() const { return by_level3_; }
    const std::map<std::string, KeyStats>& level2_stats() const { return by_level2_; }
    const std::map<std::string, KeyStats>& level1_stats() const { return by_level1_; }
    const std::map<SkuId, CategoryPath>& sku_categories() const { return sku_category_; }

    void restore_state(std::map<std::pair<SkuId, StoreId>, KeyStats> sku_store,
                       std::map<SkuId, KeyStats> sku, std::map<std::string, KeyStats> l3,
                       std::map<std::string, KeyStats> l2, std::map<std::string, KeyStats> l1,
                       std::map<SkuId, CategoryPath> categories) {
        by_sku_store_ = std::move(sku_store);
        by_sku_ = std::move(sku);
        by_level3_ = std::move(l3);
        by_level2_ = std::move(l2);
        by_level1_ = std::move(l1);
        sku_category_ = std::move(categories);
    }

private:
    void touch(KeyStats& k, const ObservationRecord& rec) {
        if (k.touched && rec.date < k.last_day)
            throw DataError("records must arrive in nondecreasing date order");
        if (k.touched && rec.date > k.last_day) {
            const double w = std::pow(cfg_.decay, static_cast<double>(rec.date - k.last_day));
            k.ratio_num *= w;
            k.ratio_den *= w;
            k.normal_num *= w;
            k.normal_den *= w;
        }
        k.last_day = rec.date;
        k.touched = true;

        // Markdown zeros have no log ratio but still carry discount and
        // normal-level information.
        if (rec.sales_markdown > 0.0) {
            k.ratio_num += std::log(rec.sales_markdown / rec.sales_normal_baseline);
            k.ratio_den += 1.0;
        }
        k.normal_num += rec.sales_normal_baseline;
        k.normal_den += 1.0;

        k.discounts.emplace_back(rec.date, rec.discount_observed);
        k.discount_sum += rec.discount_observed;
        const int cutoff = rec.date - cfg_.discount_window;
        while (!k.discounts.empty() && k.discounts.front().first <= cutoff) {
            k.discount_sum -= k.discounts.front().second;
            k.discounts.pop_front();
        }
    }

    std::vector<const KeyStats*> fallback_chain(const SkuId& sku, const StoreId& store,
                                                const CategoryPath& category) const {
        std::vector<const KeyStats*> chain;
        if (auto it = by_sku_store_.find({sku, store}); it != by_sku_store_.end()) chain.push_back(&it->second);
        if (auto it = by_sku_.find(sku); it != by_sku_.end()) chain.push_back(&it->second);
        if (auto it = by_level3_.find(category.level3); it != by_level3_.end()) chain.push_back(&it->second);
        if (auto it = by_level2_.find(category.level2); it != by_level2_.end()) chain.push_back(&it->second);
        if (auto it = by_level1_.find(category.level1); it != by_level1_.end()) chain.push_back(&it->second);
        return chain;
    }

    template <typename Pred>
    static const KeyStats* first_with(const std::vector<const KeyStats*>& chain, Pred pred) {
        for (const KeyStats* k : chain)
            if (pred(*k)) return k;
        return nullptr;
    }

    EwmaForecasterConfig cfg_;
    std::map<std::pair<SkuId, StoreId>, KeyStats> by_sku_store_;
    std::map<SkuId, KeyStats> by_sku_;
    std::map<std::string, KeyStats> by_level3_;
    std::map<std::string, KeyStats> by_level2_;
    std::map<std::string, KeyStats> by_level1_;
    std::map<SkuId, CategoryPath> sku_category_;
};

// Serves prepared base forecasts from a table, erroring on anything missing.
// Useful when an external system owns the baseline.
class CsvForecaster : public Forecaster {
public:
    void add(BaseForecast row) {
        row.validate();
        table_[{row.sku, row.store, row.period}] = std::move(row);
    }

    BaseForecast predict_base(const SkuId& sku, const StoreId& store, int period,
                              const std::optional<CategoryPath>& = {}) const override {
        auto it = table_.find({sku, store, period});
        if (it == table_.end())
            throw DataError("no prepared base forecast for sku '" + sku + "' store '" + store +
                            "' period " + std::to_string(period));
        return it->second;
    }

    std::size_t size() const { return table_.size(); }

private:
    std::map<std::tuple<SkuId, StoreId, int>, BaseForecast> table_;
};

}  // namespace mdpricer
