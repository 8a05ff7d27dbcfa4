#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mdpricer/base_forecast.hpp"
#include "mdpricer/domain.hpp"
#include "mdpricer/elasticity.hpp"
#include "mdpricer/errors.hpp"
#include "mdpricer/logging.hpp"

namespace mdpricer {

inline void validate_grid(const std::vector<Discount>& grid) {
    if (grid.empty()) throw DataError("discount grid is empty");
    double prev = 0.0;
    for (double d : grid) {
        require_discount(d, "grid");
        if (d <= prev) throw DataError("discount grid must be strictly increasing");
        prev = d;
    }
}

// Expected markdown sales at discount d, scaled off the base anchor:
// y = y_o * (d / d_o)^e. The intercept cancels in the ratio, so only the
// elasticity and the anchor matter.
inline Sales predict_demand(double elasticity, Discount d, Discount d_o, Sales y_o) {
    require_discount(d, "counterfactual discount");
    require_discount(d_o, "counterfactual base discount");
    if (!(std::isfinite(y_o) && y_o >= 0.0))
        throw DataError("base sales must be finite and >= 0");
    if (!std::isfinite(elasticity)) throw DataError("elasticity is not finite");
    return y_o * std::pow(d / d_o, elasticity);
}

// Expected markdown sales over a discount grid for one (sku, store, period).
struct DemandCurve {
    SkuId sku;
    StoreId store;
    int period = 1;
    std::vector<Discount> grid;
    std::vector<Sales> expected_sales;

    void validate() const {
        validate_grid(grid);
        if (expected_sales.size() != grid.size())
            throw DimensionError("demand curve for " + sku + "/" + store +
                                 " has mismatched grid and sales lengths");
        for (double y : expected_sales)
            if (!(std::isfinite(y) && y >= 0.0))
                throw DataError("demand curve for " + sku + "/" + store +
                                " has a negative or non-finite value");
    }
};

struct CurveOptions {
    // Predictions above cap_multiple * y_o are clipped: deep-discount
    // extrapolation off a fitted power law is not to be trusted that far.
    double cap_multiple = 50.0;
};

inline DemandCurve build_curve(const ElasticityModel::Estimate& estimate,
                               const EffectModifierVector& design, const BaseForecast& base,
                               std::vector<Discount> grid, const CurveOptions& options = {}) {
    validate_grid(grid);
    base.validate();
    const double e = estimate.elasticity(design);
    if (e > 0.0)
        logging::warn("positive elasticity " + std::to_string(e) + " for sku '" + base.sku +
                      "': demand rises as price falls is expected, this curve slopes the other way");

    DemandCurve curve;
    curve.sku = base.sku;
    curve.store = base.store;
    curve.period = base.period;
    curve.grid = std::move(grid);
    curve.expected_sales.reserve(curve.grid.size());
    const double cap = options.cap_multiple * base.base_sales;
    for (double d : curve.grid) {
        double y = predict_demand(e, d, base.base_discount, base.base_sales);
        curve.expected_sales.push_back(std::min(y, cap));
    }
    curve.validate();
    return curve;
}

}  // namespace mdpricer
