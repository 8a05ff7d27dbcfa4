#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mdpricer/domain.hpp"
#include "mdpricer/errors.hpp"

namespace mdpricer {

// One raw markdown-channel row as it arrives from the transaction log.
struct RawRow {
    int date = 0;
    SkuId sku;
    StoreId store;
    CategoryPath category;
    Discount discount = 1.0;
    Sales sales_markdown = 0.0;
    Sales sales_normal = 0.0;  // same-day normal-channel sales of the SKU
    Money retail_price = 0.0;

    void validate() const {
        if (sku.empty() || store.empty()) throw DataError("raw row missing sku or store id");
        require_discount(discount, "raw row " + sku + "/" + store);
        if (!(std::isfinite(sales_markdown) && sales_markdown >= 0.0))
            throw DataError("raw row " + sku + "/" + store + ": markdown sales must be finite and >= 0");
        if (!(std::isfinite(sales_normal) && sales_normal >= 0.0))
            throw DataError("raw row " + sku + "/" + store + ": normal sales must be finite and >= 0");
        if (!(std::isfinite(retail_price) && retail_price >= 0.0))
            throw DataError("raw row " + sku + "/" + store + ": retail price must be finite and >= 0");
    }
};

struct IngestOptions {
    int window = 28;           // trailing days for normal-level and discount averages
    double normal_floor = 0.5; // below this, the SKU's own normal level is too thin to trust

    void validate() const {
        if (window < 1) throw ConfigError("ingest window must be >= 1 day");
        if (!(std::isfinite(normal_floor) && normal_floor >= 0.0))
            throw ConfigError("normal floor must be finite and >= 0");
    }
};

// Turns raw rows into observation records with a smoothed normal baseline.
//
// The baseline divides the markdown sales inside a logarithm, so it must be
// positive and stable: the trailing average of the SKU's own normal sales is
// used when it clears the floor, the pooled level-3 category average
// otherwise, and one unit is added either way so sparse sellers do not blow
// up the ratio. Days must be pushed in nondecreasing date order.
class IngestState {
public:
    explicit IngestState(IngestOptions opts = {}) : opts_(opts) { opts_.validate(); }

    std::vector<ObservationRecord> push_day(std::vector<RawRow> rows, Taxonomy& taxonomy) {
        if (rows.empty()) return {};
        std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
            return std::tie(a.sku, a.store) < std::tie(b.sku, b.store);
        });
        const int day = rows.front().date;
        if (started_ && day < last_day_) throw DataError("days must be pushed in nondecreasing order");
        for (const auto& row : rows) {
            row.validate();
            if (row.date != day) throw DataError("push_day received rows from different dates");
        }
        started_ = true;
        last_day_ = day;

        // Absorb the whole day before emitting, so every baseline sees all of
        // today's rows regardless of row order.
        for (const auto& row : rows) {
            taxonomy.add(row.category);
            push(normal_win_[{row.sku, row.store}], day, row.sales_normal);
            push(discount_win_[{row.sku, row.store}], day, row.discount);
            push(category_normal_win_[row.category.level3], day, row.sales_normal);
        }

        std::vector<ObservationRecord> records;
        records.reserve(rows.size());
        for (const auto& row : rows) {
            ObservationRecord rec;
            rec.date = row.date;
            rec.sku = row.sku;
            rec.store = row.store;
            rec.category = row.category;
            rec.discount_observed = row.discount;
            rec.sales_markdown = row.sales_markdown;
            rec.retail_price = row.retail_price;

            const double own = mean(normal_win_.at({row.sku, row.store}));
            const double base =
                own >= opts_.normal_floor ? own : mean(category_normal_win_.at(row.category.level3));
            rec.sales_normal_baseline = base + 1.0;
            rec.base_discount = std::min(1.0, mean(discount_win_.at({row.sku, row.store})));
            rec.validate();
            records.push_back(std::move(rec));
        }
        return records;
    }

    struct Window {
        std::deque<std::pair<int, double>> entries;
        double sum = 0.0;
    };

    // State access for persistence.
    const std::map<std::pair<SkuId, StoreId>, Window>& normal_windows() const { return normal_win_; }
    const std::map<std::pair<SkuId, StoreId>, Window>& discount_windows() const { return discount_win_; }
    const std::map<std::string, Window>& category_windows() const { return category_normal_win_; }
    bool started() const { return started_; }
    int last_day() const { return last_day_; }

    void restore_state(bool started, int last_day,
                       std::map<std::pair<SkuId, StoreId>, Window> normal,
                       std::map<std::pair<SkuId, StoreId>, Window> discount,
                       std::map<std::string, Window> category) {
        started_ = started;
        last_day_ = last_day;
        normal_win_ = std::move(normal);
        discount_win_ = std::move(discount);
        category_normal_win_ = std::move(category);
    }

private:
    void push(Window& w, int day, double value) {
        w.entries.emplace_back(day, value);
        w.sum += value;
        const int cutoff = day - opts_.window;
        while (!w.entries.empty() && w.entries.front().first <= cutoff) {
            w.sum -= w.entries.front().second;
            w.entries.pop_front();
        }
    }

    static double mean(const Window& w) {
        return w.sum / static_cast<double>(w.entries.size());
    }

    IngestOptions opts_;
    bool started_ = false;
    int last_day_ = 0;
    std::map<std::pair<SkuId, StoreId>, Window> normal_win_;
    std::map<std::pair<SkuId, StoreId>, Window> discount_win_;
    std::map<std::string, Window> category_normal_win_;
};

// Batch form: sorts by date, replays day by day, returns the taxonomy built
// in first-seen order alongside the prepared records.
inline std::pair<Taxonomy, std::vector<ObservationRecord>> prepare_observations(
    std::vector<RawRow> rows, IngestOptions opts = {}) {
    if (rows.empty()) throw DataError("no rows to prepare");
    std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
        return std::tie(a.date, a.sku, a.store) < std::tie(b.date, b.sku, b.store);
    });
    Taxonomy taxonomy;
    IngestState state(opts);
    std::vector<ObservationRecord> records;
    records.reserve(rows.size());
    std::size_t start = 0;
    while (start < rows.size()) {
        std::size_t end = start;
        while (end < rows.size() && rows[end].date == rows[start].date) ++end;
        std::vector<RawRow> day(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                rows.begin() + static_cast<std::ptrdiff_t>(end));
        auto prepared = state.push_day(std::move(day), taxonomy);
        records.insert(records.end(), std::make_move_iterator(prepared.begin()),
                       std::make_move_iterator(prepared.end()));
        start = end;
    }
    return {std::move(taxonomy), std::move(records)};
}

}  // namespace mdpricer
