#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mdpricer/errors.hpp"

namespace mdpricer {

using SkuId = std::string;
using StoreId = std::string;
using Money = double;    // currency amounts, nonnegative where noted
using Sales = double;    // items per day; realized draws are integer-valued
using Discount = double; // fraction of retail price kept by the customer, in (0, 1]

// d = 0 is excluded everywhere: every model term takes ln d, and a 100%-off
// "sale" is a giveaway, not a price.
inline bool is_valid_discount(double d) {
    return std::isfinite(d) && d > 0.0 && d <= 1.0;
}

inline void require_discount(double d, const std::string& what) {
    if (!is_valid_discount(d))
        throw DataError(what + ": discount must lie in (0, 1], got " + std::to_string(d));
}

// Three-level category assignment, coarsest first.
struct CategoryPath {
    std::string level1;
    std::string level2;
    std::string level3;

    friend auto operator<=>(const CategoryPath&, const CategoryPath&) = default;

    std::string str() const { return level1 + "/" + level2 + "/" + level3; }
};

// Registry of category ids per level, indexed in first-seen order, plus the
// parent-child links observed in the data. Paths are valid only if both of
// their links (level1->level2, level2->level3) were registered.
class Taxonomy {
public:
    void add(const CategoryPath& path) {
        require_nonempty(path);
        for (int level = 0; level < 3; ++level) {
            const std::string& id = level_id(path, level);
            if (!index_[level].contains(id)) {
                index_[level].emplace(id, static_cast<int>(ids_[level].size()));
                ids_[level].push_back(id);
            }
        }
        links12_.emplace(path.level1, path.level2);
        links23_.emplace(path.level2, path.level3);
    }

    int level_count(int level) const { return static_cast<int>(ids_.at(check_level(level)).size()); }

    // Width of the concatenated one-hot design, m = c1 + c2 + c3.
    int total_width() const { return level_count(0) + level_count(1) + level_count(2); }

    std::optional<int> index_of(int level, const std::string& id) const {
        const auto& idx = index_.at(check_level(level));
        auto it = idx.find(id);
        if (it == idx.end()) return std::nullopt;
        return it->second;
    }

    const std::vector<std::string>& ids(int level) const { return ids_.at(check_level(level)); }

    bool knows(const CategoryPath& path) const {
        return index_[0].contains(path.level1) && index_[1].contains(path.level2) &&
               index_[2].contains(path.level3);
    }

    // True when every id is known and the parentage matches a registered path.
    bool consistent_with(const CategoryPath& path) const {
        return knows(path) && links12_.contains({path.level1, path.level2}) &&
               links23_.contains({path.level2, path.level3});
    }

    bool empty() const { return ids_[0].empty(); }

    // FNV-1a over a canonical dump; models persist this to detect taxonomy drift.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](const std::string& s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 1099511628211ull;
            }
            h ^= 0x1f;
            h *= 1099511628211ull;
        };
        for (const auto& level : ids_)
            for (const auto& id : level) mix(id);
        for (const auto& [a, b] : links12_) {
            mix(a);
            mix(b);
        }
        for (const auto& [b, c] : links23_) {
            mix(b);
            mix(c);
        }
        return h;
    }

    const std::set<std::pair<std::string, std::string>>& level12_links() const { return links12_; }
    const std::set<std::pair<std::string, std::string>>& level23_links() const { return links23_; }

    // Rebuild from persisted state; id order is the original first-seen order.
    static Taxonomy restore(std::array<std::vector<std::string>, 3> ids,
                            const std::vector<std::pair<std::string, std::string>>& links12,
                            const std::vector<std::pair<std::string, std::string>>& links23) {
        Taxonomy t;
        for (int level = 0; level < 3; ++level) {
            t.ids_[level] = std::move(ids[level]);
            for (std::size_t i = 0; i < t.ids_[level].size(); ++i) {
                if (t.ids_[level][i].empty()) throw DataError("taxonomy restore: empty id");
                if (!t.index_[level].emplace(t.ids_[level][i], static_cast<int>(i)).second)
                    throw DataError("taxonomy restore: duplicate id '" + t.ids_[level][i] + "'");
            }
        }
        for (const auto& link : links12) t.links12_.insert(link);
        for (const auto& link : links23) t.links23_.insert(link);
        return t;
    }

private:
    static int check_level(int level) {
        if (level < 0 || level > 2) throw DataError("taxonomy level out of range: " + std::to_string(level));
        return level;
    }

    static const std::string& level_id(const CategoryPath& p, int level) {
        switch (level) {
            case 0: return p.level1;
            case 1: return p.level2;
            default: return p.level3;
        }
    }

    static void require_nonempty(const CategoryPath& p) {
        if (p.level1.empty() || p.level2.empty() || p.level3.empty())
            throw DataError("category path has an empty level: '" + p.str() + "'");
    }

    std::array<std::vector<std::string>, 3> ids_;
    std::array<std::map<std::string, int>, 3> index_;
    std::set<std::pair<std::string, std::string>> links12_;
    std::set<std::pair<std::string, std::string>> links23_;
};

// Concatenated one-hot category design L of width m, stored as the three hot
// positions. The augmented form prepends a constant slot: [1, L].
class EffectModifierVector {
public:
    EffectModifierVector(int width, std::array<int, 3> hot)
        : width_(width), hot_(hot) {
        if (width < 3) throw DataError("effect modifier width must be at least 3");
        int prev = -1;
        for (int pos : hot_) {
            if (pos < 0 || pos >= width) throw DataError("effect modifier hot position out of range");
            if (pos <= prev) throw DataError("effect modifier hot positions must be increasing");
            prev = pos;
        }
    }

    int width() const { return width_; }
    const std::array<int, 3>& hot_positions() const { return hot_; }

    std::vector<double> dense() const {
        std::vector<double> v(static_cast<std::size_t>(width_), 0.0);
        for (int pos : hot_) v[static_cast<std::size_t>(pos)] = 1.0;
        return v;
    }

    // [1, L], length m + 1.
    std::vector<double> augmented() const {
        std::vector<double> v(static_cast<std::size_t>(width_) + 1, 0.0);
        v[0] = 1.0;
        for (int pos : hot_) v[static_cast<std::size_t>(pos) + 1] = 1.0;
        return v;
    }

    // theta[0] + sum of theta at the augmented hot slots; theta has length m + 1.
    template <typename Vec>
    double dot_augmented(const Vec& theta) const {
        if (static_cast<int>(theta.size()) != width_ + 1)
            throw DimensionError("coefficient vector has length " + std::to_string(theta.size()) +
                                 ", expected " + std::to_string(width_ + 1));
        double s = theta[0];
        for (int pos : hot_) s += theta[pos + 1];
        return s;
    }

    friend bool operator==(const EffectModifierVector& a, const EffectModifierVector& b) {
        return a.width_ == b.width_ && a.hot_ == b.hot_;
    }

private:
    int width_;
    std::array<int, 3> hot_;
};

// Maps a category path to its one-hot design under the given taxonomy.
// Unknown ids name the offending level in the error.
inline EffectModifierVector encode_category(const CategoryPath& path, const Taxonomy& taxonomy) {
    std::array<int, 3> hot{};
    int offset = 0;
    const std::array<const std::string*, 3> ids = {&path.level1, &path.level2, &path.level3};
    for (int level = 0; level < 3; ++level) {
        auto idx = taxonomy.index_of(level, *ids[level]);
        if (!idx)
            throw DataError("unknown level-" + std::to_string(level + 1) + " category id '" +
                            *ids[level] + "'");
        hot[static_cast<std::size_t>(level)] = offset + *idx;
        offset += taxonomy.level_count(level);
    }
    return EffectModifierVector(taxonomy.total_width(), hot);
}

// One day of markdown-channel activity for one SKU at one store, after
// baseline smoothing. `date` counts days; calendars live at the CSV edge.
struct ObservationRecord {
    int date = 0;
    SkuId sku;
    StoreId store;
    CategoryPath category;
    Discount discount_observed = 1.0;
    Sales sales_markdown = 0.0;          // realized markdown sales, >= 0
    Sales sales_normal_baseline = 1.0;   // smoothed normal-channel level, > 0
    Discount base_discount = 1.0;        // trailing average discount
    Money retail_price = 0.0;
    std::map<std::string, double> features;  // optional extra covariates

    void validate() const {
        if (sku.empty() || store.empty()) throw DataError("observation record missing sku or store id");
        require_discount(discount_observed, "record " + sku + "/" + store);
        require_discount(base_discount, "record " + sku + "/" + store + " base");
        if (!(std::isfinite(sales_markdown) && sales_markdown >= 0.0))
            throw DataError("record " + sku + "/" + store + ": markdown sales must be finite and >= 0");
        if (!(std::isfinite(sales_normal_baseline) && sales_normal_baseline > 0.0))
            throw DataError("record " + sku + "/" + store + ": normal baseline must be finite and > 0");
        if (!(std::isfinite(retail_price) && retail_price >= 0.0))
            throw DataError("record " + sku + "/" + store + ": retail price must be finite and >= 0");
        for (const auto& [k, v] : features)
            if (!std::isfinite(v)) throw DataError("record " + sku + "/" + store + ": feature '" + k + "' is not finite");
    }
};

}  // namespace mdpricer
