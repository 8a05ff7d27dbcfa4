#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mdpricer/counterfactual.hpp"
#include "mdpricer/domain.hpp"
#include "mdpricer/errors.hpp"
#include "mdpricer/logging.hpp"
#include "mdpricer/poisson.hpp"

namespace mdpricer {

// Clearance problem for one shop: sell down `inventory` units over `horizon`
// periods. Demand at discount d is Poisson with rate y(d) + z, truncated by
// stock; units beyond the expected normal draw count as markdown sales.
struct ShopProblem {
    StoreId shop;
    std::int64_t inventory = 0;                      // B_j
    int horizon = 1;                                 // T_j
    Money retail_price = 1.0;                        // p0, shared across shops of a SKU
    Money waste_weight = 0.0;                        // w, value of averting one wasted unit
    std::vector<Sales> normal_forecast;              // z_t, one per period
    std::vector<DemandCurve> demand_curves;          // one per period, all on the instance grid
    std::vector<std::pair<Discount, Discount>> bounds;  // [lb, ub] per period

    void validate(const std::vector<Discount>& grid) const {
        if (shop.empty()) throw DataError("shop problem missing store id");
        if (inventory < 0) throw DataError("shop " + shop + ": inventory must be >= 0");
        if (horizon < 1) throw DataError("shop " + shop + ": horizon must be >= 1");
        if (!(std::isfinite(retail_price) && retail_price > 0.0))
            throw DataError("shop " + shop + ": retail price must be finite and > 0");
        if (!(std::isfinite(waste_weight) && waste_weight >= 0.0))
            throw DataError("shop " + shop + ": waste weight must be finite and >= 0");
        const auto n = static_cast<std::size_t>(horizon);
        if (normal_forecast.size() != n || demand_curves.size() != n || bounds.size() != n)
            throw DimensionError("shop " + shop + ": per-period vectors must match the horizon");
        for (double z : normal_forecast)
            if (!(std::isfinite(z) && z >= 0.0))
                throw DataError("shop " + shop + ": normal forecast must be finite and >= 0");
        for (const auto& curve : demand_curves) {
            curve.validate();
            if (curve.grid != grid)
                throw DataError("shop " + shop + ": demand curve grid differs from instance grid");
        }
        for (const auto& [lb, ub] : bounds) {
            require_discount(lb, "shop " + shop + " lower bound");
            require_discount(ub, "shop " + shop + " upper bound");
            if (lb > ub) throw DataError("shop " + shop + ": lower bound exceeds upper bound");
        }
    }
};

// One SKU's multi-shop instance. All shops share the action grid and, being
// the same product, the list price.
struct MdpInstance {
    SkuId sku;
    std::vector<Discount> grid;
    std::vector<ShopProblem> shops;

    int max_horizon() const {
        int t = 0;
        for (const auto& s : shops) t = std::max(t, s.horizon);
        return t;
    }

    void validate() const {
        validate_grid(grid);
        if (shops.empty()) throw DataError("instance " + sku + " has no shops");
        for (const auto& s : shops) s.validate(grid);
        for (const auto& s : shops)
            if (s.retail_price != shops.front().retail_price)
                throw DataError("instance " + sku + ": shops disagree on the retail price");
    }
};

// Reward for selling `total_sales` units in a period: every unit beyond the
// expected normal draw earns the markdown price plus the averted-waste value.
inline Money period_reward(Money retail_price, Discount d, Money waste_weight, double total_sales,
                           Sales normal_sales) {
    return (retail_price * d + waste_weight) * std::max(total_sales - normal_sales, 0.0);
}

// Action values indexed by (inventory state, period, action). Periods run
// 1..horizon; the virtual row at horizon + 1 is identically zero.
class QTable {
public:
    QTable(StoreId shop, std::int64_t inventory, int horizon, int actions)
        : shop_(std::move(shop)), inventory_(inventory), horizon_(horizon), actions_(actions),
          values_(static_cast<std::size_t>(inventory + 1) * static_cast<std::size_t>(horizon) *
                      static_cast<std::size_t>(actions),
                  0.0) {}

    double& at(std::int64_t s, int t, int a) { return values_[offset(s, t, a)]; }
    double at(std::int64_t s, int t, int a) const { return values_[offset(s, t, a)]; }

    const StoreId& shop() const { return shop_; }
    std::int64_t inventory() const { return inventory_; }
    int horizon() const { return horizon_; }
    int actions() const { return actions_; }

private:
    std::size_t offset(std::int64_t s, int t, int a) const {
        if (s < 0 || s > inventory_ || t < 1 || t > horizon_ || a < 0 || a >= actions_)
            throw DataError("Q table index out of range");
        return (static_cast<std::size_t>(t - 1) * static_cast<std::size_t>(inventory_ + 1) +
                static_cast<std::size_t>(s)) *
                   static_cast<std::size_t>(actions_) +
               static_cast<std::size_t>(a);
    }

    StoreId shop_;
    std::int64_t inventory_;
    int horizon_;
    int actions_;
    std::vector<double> values_;
};

namespace detail {

// Demand machinery for one (shop, period, action): untruncated Poisson terms
// and their prefix sums, so any inventory level can truncate cheaply.
struct ActionKernel {
    std::vector<double> pmf;  // Poi(k; lambda), k = 0..cap-1
    std::vector<double> cum;  // prefix sums of pmf
    double unit_value = 0.0;  // p0 * d + w
    double normal_sales = 0.0;
};

inline ActionKernel make_kernel(const ShopProblem& shop, const std::vector<Discount>& grid,
                                int period, int action) {
    const DemandCurve& curve = shop.demand_curves[static_cast<std::size_t>(period - 1)];
    const double z = shop.normal_forecast[static_cast<std::size_t>(period - 1)];
    const double lambda =
        checked_rate(curve.expected_sales[static_cast<std::size_t>(action)] + z);

    ActionKernel k;
    k.unit_value = shop.retail_price * grid[static_cast<std::size_t>(action)] + shop.waste_weight;
    k.normal_sales = z;
    const auto cap = static_cast<std::size_t>(shop.inventory);
    k.pmf.resize(cap);
    k.cum.resize(cap);
    if (cap == 0) return k;
    if (lambda == 0.0) {
        k.pmf[0] = 1.0;
        k.cum[0] = 1.0;
        for (std::size_t i = 1; i < cap; ++i) k.cum[i] = 1.0;
        return k;
    }
    const double log_lambda = std::log(lambda);
    double log_p = -lambda;
    double running = 0.0;
    for (std::size_t i = 0; i < cap; ++i) {
        k.pmf[i] = std::exp(log_p);
        running += k.pmf[i];
        k.cum[i] = running;
        log_p += log_lambda - std::log(static_cast<double>(i) + 1.0);
    }
    return k;
}

// Mass collapsed onto selling out a state of s units.
inline double tail_probability(const ActionKernel& k, std::int64_t s) {
    if (s == 0) return 1.0;
    return std::max(0.0, 1.0 - k.cum[static_cast<std::size_t>(s - 1)]);
}

// One Bellman cell: expected reward-plus-continuation at state s under this
// kernel, with v_next indexed by remaining inventory. Terms accumulate in
// ascending sales order; the exact joint solver reproduces the same sequence
// of operations so single-shop instances agree bit for bit.
inline double expected_cell(const ActionKernel& k, std::int64_t s, const std::vector<double>& v_next) {
    double total = 0.0;
    for (std::int64_t sold = 0; sold < s; ++sold) {
        const double reward =
            k.unit_value * std::max(static_cast<double>(sold) - k.normal_sales, 0.0);
        total += k.pmf[static_cast<std::size_t>(sold)] *
                 (reward + v_next[static_cast<std::size_t>(s - sold)]);
    }
    const double reward = k.unit_value * std::max(static_cast<double>(s) - k.normal_sales, 0.0);
    total += tail_probability(k, s) * (reward + v_next[0]);
    return total;
}

}  // namespace detail

// Grid indices inside [lb, ub]. Empty sets in periods after the first fall
// back to the grid point nearest the bound interval's midpoint (ties toward
// the deeper price cut, i.e. the larger index is never chosen over a nearer
// one; on an exact distance tie the larger discount wins).
inline std::vector<int> grid_indices_within(const std::vector<Discount>& grid, Discount lb,
                                            Discount ub) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] >= lb && grid[i] <= ub) idx.push_back(static_cast<int>(i));
    return idx;
}

inline std::vector<int> feasible_actions(const ShopProblem& shop, const std::vector<Discount>& grid,
                                         int period, bool allow_fallback) {
    const auto& [lb, ub] = shop.bounds[static_cast<std::size_t>(period - 1)];
    std::vector<int> idx = grid_indices_within(grid, lb, ub);
    if (!idx.empty()) return idx;
    if (!allow_fallback)
        throw InfeasibleError("shop " + shop.shop + ": no grid point lies inside [" +
                              std::to_string(lb) + ", " + std::to_string(ub) + "] at period " +
                              std::to_string(period));
    const double mid = 0.5 * (lb + ub);
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double dist = std::abs(grid[i] - mid);
        if (dist <= best_dist) {
            best_dist = dist;
            best = static_cast<int>(i);
        }
    }
    logging::warn("shop " + shop.shop + ": empty action set at period " + std::to_string(period) +
                  ", falling back to grid discount " + std::to_string(grid[static_cast<std::size_t>(best)]));
    return {best};
}

// Per-shop backward induction over periods horizon..1. Every grid action gets
// a value at every (state, period); per-period bounds enter through the
// continuation (the next period's maximization runs over its feasible set
// only). First-period feasibility is the joint optimizer's business.
inline QTable backward_induction(const ShopProblem& shop, const std::vector<Discount>& grid) {
    shop.validate(grid);
    const auto b = shop.inventory;
    const int horizon = shop.horizon;
    const int actions = static_cast<int>(grid.size());

    QTable q(shop.shop, b, horizon, actions);
    std::vector<double> v_next(static_cast<std::size_t>(b) + 1, 0.0);
    for (int t = horizon; t >= 1; --t) {
        if (t < horizon) {
            const std::vector<int> next_actions = feasible_actions(shop, grid, t + 1, true);
            for (std::int64_t s = 0; s <= b; ++s) {
                double best = -std::numeric_limits<double>::infinity();
                for (int a : next_actions) best = std::max(best, q.at(s, t + 1, a));
                v_next[static_cast<std::size_t>(s)] = best;
            }
        }
        for (int a = 0; a < actions; ++a) {
            const detail::ActionKernel kernel = detail::make_kernel(shop, grid, t, a);
            for (std::int64_t s = 0; s <= b; ++s)
                q.at(s, t, a) = detail::expected_cell(kernel, s, v_next);
        }
    }
    return q;
}

// First-period value of one shop at its full inventory.
inline double first_period_q(const ShopProblem& shop, const QTable& q, int action) {
    return q.at(shop.inventory, 1, action);
}

struct ShopQAudit {
    StoreId shop;
    std::vector<double> first_period_q;  // per grid action, at the initial inventory
};

struct PricingDecision {
    SkuId sku;
    Discount first_discount = 1.0;
    Money first_price = 0.0;
    double expected_total_reward = 0.0;
    int feasible_action_count = 0;
    std::vector<ShopQAudit> shop_audits;
};

// Two-stage solve: independent per-shop backward inductions, then one shared
// first-period action maximizing the summed values over the intersection of
// first-period constraints. Ties break toward the larger discount.
inline PricingDecision optimize_first_period(const MdpInstance& instance) {
    instance.validate();
    const auto& grid = instance.grid;
    const int actions = static_cast<int>(grid.size());

    std::vector<QTable> tables;
    tables.reserve(instance.shops.size());
    for (const auto& shop : instance.shops) tables.push_back(backward_induction(shop, grid));

    std::vector<bool> feasible(static_cast<std::size_t>(actions), true);
    for (const auto& shop : instance.shops) {
        const auto& [lb, ub] = shop.bounds[0];
        for (int a = 0; a < actions; ++a)
            if (grid[static_cast<std::size_t>(a)] < lb || grid[static_cast<std::size_t>(a)] > ub)
                feasible[static_cast<std::size_t>(a)] = false;
    }

    PricingDecision decision;
    decision.sku = instance.sku;
    int best_action = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < actions; ++a) {
        if (!feasible[static_cast<std::size_t>(a)]) continue;
        ++decision.feasible_action_count;
        double total = 0.0;
        for (std::size_t j = 0; j < instance.shops.size(); ++j)
            total += first_period_q(instance.shops[j], tables[j], a);
        if (total >= best_value) {
            best_value = total;
            best_action = a;
        }
    }
    if (best_action < 0) {
        std::string detail;
        for (const auto& shop : instance.shops)
            detail += " " + shop.shop + ":[" + std::to_string(shop.bounds[0].first) + ", " +
                      std::to_string(shop.bounds[0].second) + "]";
        throw InfeasibleError("instance " + instance.sku +
                              ": no grid discount satisfies every shop's first-period bounds:" + detail);
    }

    decision.first_discount = grid[static_cast<std::size_t>(best_action)];
    decision.first_price = instance.shops.front().retail_price * decision.first_discount;
    decision.expected_total_reward = best_value;
    for (std::size_t j = 0; j < instance.shops.size(); ++j) {
        ShopQAudit audit;
        audit.shop = instance.shops[j].shop;
        audit.first_period_q.reserve(static_cast<std::size_t>(actions));
        for (int a = 0; a < actions; ++a)
            audit.first_period_q.push_back(first_period_q(instance.shops[j], tables[j], a));
        decision.shop_audits.push_back(std::move(audit));
    }
    return decision;
}

struct ExactSolution {
    Discount first_discount = 1.0;
    double value = 0.0;
};

inline constexpr std::int64_t kDefaultJointStateCap = 5000;

// Reference solver over the joint inventory state with one shared action per
// period. Exponential in the number of shops; refuses instances whose joint
// state space exceeds the cap. Single-shop instances reproduce the two-stage
// solver's arithmetic exactly.
inline ExactSolution exact_joint_dp(const MdpInstance& instance,
                                    std::int64_t state_cap = kDefaultJointStateCap) {
    instance.validate();
    const auto& grid = instance.grid;
    const std::size_t n_shops = instance.shops.size();
    const int horizon = instance.max_horizon();

    std::int64_t n_states = 1;
    for (const auto& shop : instance.shops) {
        n_states *= shop.inventory + 1;
        if (n_states > state_cap)
            throw CapacityError("instance " + instance.sku + ": joint state space exceeds cap of " +
                                std::to_string(state_cap) + " states");
    }
    std::vector<std::int64_t> stride(n_shops);
    std::int64_t acc = 1;
    for (std::size_t j = n_shops; j-- > 0;) {
        stride[j] = acc;
        acc *= instance.shops[j].inventory + 1;
    }

    std::vector<double> v_next(static_cast<std::size_t>(n_states), 0.0);
    std::vector<double> v_cur(static_cast<std::size_t>(n_states), 0.0);
    std::vector<std::int64_t> coords(n_shops, 0);

    ExactSolution solution;
    for (int t = horizon; t >= 1; --t) {
        std::vector<std::size_t> active;
        for (std::size_t j = 0; j < n_shops; ++j)
            if (t <= instance.shops[j].horizon) active.push_back(j);

        std::vector<int> action_set;
        {
            std::vector<int> joint(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) joint[i] = static_cast<int>(i);
            for (std::size_t j : active) {
                const auto& [lb, ub] = instance.shops[j].bounds[static_cast<std::size_t>(t - 1)];
                std::erase_if(joint, [&](int a) {
                    const double d = grid[static_cast<std::size_t>(a)];
                    return d < lb || d > ub;
                });
            }
            if (!joint.empty()) {
                action_set = std::move(joint);
            } else if (active.size() == 1 && t > 1) {
                action_set = feasible_actions(instance.shops[active[0]], grid, t, true);
            } else {
                throw InfeasibleError("instance " + instance.sku +
                                      ": no joint feasible action at period " + std::to_string(t));
            }
        }

        std::vector<std::vector<detail::ActionKernel>> kernels(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            kernels[i].reserve(action_set.size());
            for (int a : action_set)
                kernels[i].push_back(detail::make_kernel(instance.shops[active[i]], grid, t, a));
        }

        // Expected value of one joint cell, enumerating active shops' sales in
        // ascending order (shop-major); for one shop this is expected_cell.
        auto joint_cell = [&](std::size_t shop_pos, std::int64_t base_index, int a_pos,
                              auto&& self) -> double {
            if (shop_pos == active.size()) return 0.0;  // placeholder, not reached
            const std::size_t j = active[shop_pos];
            const detail::ActionKernel& k = kernels[shop_pos][static_cast<std::size_t>(a_pos)];
            const std::int64_t s = coords[j];
            const bool last_period = t == instance.shops[j].horizon;
            double total = 0.0;
            for (std::int64_t sold = 0; sold <= s; ++sold) {
                const double p = sold < s ? k.pmf[static_cast<std::size_t>(sold)]
                                          : detail::tail_probability(k, s);
                const double reward =
                    k.unit_value * std::max(static_cast<double>(sold) - k.normal_sales, 0.0);
                const std::int64_t next_coord = last_period ? 0 : s - sold;
                const std::int64_t idx = base_index + next_coord * stride[j];
                if (shop_pos + 1 == active.size()) {
                    total += p * (reward + v_next[static_cast<std::size_t>(idx)]);
                } else {
                    total += p * (reward + self(shop_pos + 1, idx, a_pos, self));
                }
            }
            return total;
        };

        auto evaluate_state = [&](std::int64_t state) -> double {
            std::int64_t rem = state;
            for (std::size_t j = 0; j < n_shops; ++j) {
                coords[j] = rem / stride[j];
                rem %= stride[j];
            }
            std::int64_t base = 0;
            for (std::size_t j = 0; j < n_shops; ++j) {
                bool is_active = t <= instance.shops[j].horizon;
                if (!is_active) base += coords[j] * stride[j];
            }
            double best = -std::numeric_limits<double>::infinity();
            int best_a = -1;
            for (std::size_t a_pos = 0; a_pos < action_set.size(); ++a_pos) {
                const double val = joint_cell(0, base, static_cast<int>(a_pos), joint_cell);
                if (val >= best) {
                    best = val;
                    best_a = action_set[a_pos];
                }
            }
            if (t == 1) solution.first_discount = grid[static_cast<std::size_t>(best_a)];
            return best;
        };

        if (t == 1) {
            std::int64_t initial = 0;
            for (std::size_t j = 0; j < n_shops; ++j)
                initial += instance.shops[j].inventory * stride[j];
            solution.value = evaluate_state(initial);
        } else {
            for (std::int64_t state = 0; state < n_states; ++state)
                v_cur[static_cast<std::size_t>(state)] = evaluate_state(state);
            std::swap(v_cur, v_next);
        }
    }
    return solution;
}

}  // namespace mdpricer
