#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mdpricer/mdp.hpp"

namespace mdpricer {

// Deterministic instance for scaling runs: identical shops, demand pinned to
// a power law sized against the stock, full-grid bounds.
inline MdpInstance synthetic_instance(int shops, std::int64_t inventory, int horizon, int actions) {
    if (shops < 1 || inventory < 0 || horizon < 1 || actions < 1)
        throw DataError("synthetic instance parameters out of range");
    MdpInstance instance;
    instance.sku = "bench";
    instance.grid.reserve(static_cast<std::size_t>(actions));
    for (int k = 0; k < actions; ++k) {
        const double d = actions == 1 ? 0.65 : 0.3 + 0.7 * static_cast<double>(k) / (actions - 1);
        instance.grid.push_back(d);
    }

    const double y_base = static_cast<double>(inventory) / (2.0 * horizon) + 2.0;
    DemandCurve curve;
    curve.sku = instance.sku;
    curve.period = 1;
    curve.grid = instance.grid;
    for (double d : instance.grid) curve.expected_sales.push_back(y_base * std::pow(d / 0.7, -2.0));

    for (int j = 0; j < shops; ++j) {
        ShopProblem shop;
        shop.shop = "shop" + std::to_string(j);
        shop.inventory = inventory;
        shop.horizon = horizon;
        shop.retail_price = 10.0;
        shop.waste_weight = 0.1;
        shop.normal_forecast.assign(static_cast<std::size_t>(horizon), y_base / 3.0);
        shop.bounds.assign(static_cast<std::size_t>(horizon),
                           {instance.grid.front(), instance.grid.back()});
        for (int t = 1; t <= horizon; ++t) {
            DemandCurve c = curve;
            c.store = shop.shop;
            c.period = t;
            shop.demand_curves.push_back(std::move(c));
        }
        instance.shops.push_back(std::move(shop));
    }
    instance.validate();
    return instance;
}

// Median wall-clock seconds per two-stage solve. Sub-millisecond solves are
// batched so the clock reads something meaningful.
inline double time_two_stage(const MdpInstance& instance, int reps = 9) {
    using clock = std::chrono::steady_clock;
    auto solve = [&] { (void)optimize_first_period(instance); };

    solve();  // warm caches before measuring
    const auto probe_start = clock::now();
    solve();
    const double probe =
        std::chrono::duration<double>(clock::now() - probe_start).count();
    const int batch = std::max(1, static_cast<int>(std::ceil(0.002 / std::max(probe, 1e-9))));

    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const auto start = clock::now();
        for (int b = 0; b < batch; ++b) solve();
        times.push_back(std::chrono::duration<double>(clock::now() - start).count() / batch);
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

struct BenchPoint {
    int shops = 1;
    std::int64_t inventory = 0;
    int horizon = 1;
    int actions = 1;
    double seconds = 0.0;
};

inline std::vector<BenchPoint> bench_shop_scaling(const std::vector<int>& shop_counts,
                                                  std::int64_t inventory, int horizon, int actions,
                                                  int reps = 9) {
    std::vector<BenchPoint> points;
    for (int j : shop_counts) {
        BenchPoint p;
        p.shops = j;
        p.inventory = inventory;
        p.horizon = horizon;
        p.actions = actions;
        p.seconds = time_two_stage(synthetic_instance(j, inventory, horizon, actions), reps);
        points.push_back(p);
    }
    return points;
}

inline std::vector<BenchPoint> bench_inventory_scaling(const std::vector<std::int64_t>& inventories,
                                                       int shops, int horizon, int actions,
                                                       int reps = 9) {
    std::vector<BenchPoint> points;
    for (std::int64_t b : inventories) {
        BenchPoint p;
        p.shops = shops;
        p.inventory = b;
        p.horizon = horizon;
        p.actions = actions;
        p.seconds = time_two_stage(synthetic_instance(shops, b, horizon, actions), reps);
        points.push_back(p);
    }
    return points;
}

}  // namespace mdpricer
