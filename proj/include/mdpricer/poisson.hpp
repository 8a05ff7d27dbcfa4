#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mdpricer/errors.hpp"

namespace mdpricer {

// Demand rates above this are clamped; at desk scale anything larger is a
// data error that would otherwise stall the samplers.
inline constexpr double kMaxPoissonRate = 1e6;

inline double checked_rate(double lambda) {
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw DataError("Poisson rate must be finite and >= 0, got " + std::to_string(lambda));
    return std::min(lambda, kMaxPoissonRate);
}

// Distribution of sellable units when demand is Poisson(lambda) and at most
// `inventory` units can sell: P(a) = Poi(a) for a < inventory, and the whole
// upper tail collapses onto a = inventory. Probabilities are built from a
// log-space recurrence so large rates cannot underflow term by term, and the
// tail is computed as 1 minus the running sum, clamped at zero.
inline std::vector<double> truncated_sales_pmf(double lambda, int inventory) {
    if (inventory < 0) throw DataError("inventory must be >= 0");
    lambda = checked_rate(lambda);

    std::vector<double> pmf(static_cast<std::size_t>(inventory) + 1, 0.0);
    if (lambda == 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }
    if (inventory == 0) {
        pmf[0] = 1.0;
        return pmf;
    }

    const double log_lambda = std::log(lambda);
    double log_p = -lambda;  // log Poi(0)
    double cumulative = 0.0;
    for (int a = 0; a < inventory; ++a) {
        pmf[static_cast<std::size_t>(a)] = std::exp(log_p);
        cumulative += pmf[static_cast<std::size_t>(a)];
        log_p += log_lambda - std::log(static_cast<double>(a) + 1.0);
    }
    pmf[static_cast<std::size_t>(inventory)] = std::max(0.0, 1.0 - cumulative);
    return pmf;
}

// Poisson draw by inversion of a single uniform in [0, 1). Keeping the draw a
// pure function of (u, lambda) makes paired runs comonotone in lambda, which
// is what common-random-numbers comparisons need.
inline std::int64_t poisson_inverse_draw(double u, double lambda) {
    lambda = checked_rate(lambda);
    if (!(u >= 0.0 && u < 1.0)) throw DataError("uniform draw must lie in [0, 1)");
    if (lambda == 0.0) return 0;

    const double log_lambda = std::log(lambda);
    double log_p = -lambda;
    double cdf = 0.0;
    const std::int64_t k_max =
        static_cast<std::int64_t>(lambda + 12.0 * std::sqrt(lambda) + 64.0);
    for (std::int64_t k = 0;; ++k) {
        cdf += std::exp(log_p);
        if (u < cdf || k >= k_max) return k;
        log_p += log_lambda - std::log(static_cast<double>(k) + 1.0);
    }
}

// Negative-binomial draw with mean lambda and dispersion r (variance
// lambda * (1 + lambda / r)), again by single-uniform inversion. Used as the
// misspecified-noise toggle in synthetic markets.
inline std::int64_t negative_binomial_inverse_draw(double u, double lambda, double r) {
    lambda = checked_rate(lambda);
    if (!(std::isfinite(r) && r > 0.0)) throw DataError("dispersion must be finite and > 0");
    if (!(u >= 0.0 && u < 1.0)) throw DataError("uniform draw must lie in [0, 1)");
    if (lambda == 0.0) return 0;

    const double q = lambda / (lambda + r);  // success probability of each extra unit
    double log_p = r * std::log1p(-q);       // log P(0)
    const double log_q = std::log(q);
    double cdf = 0.0;
    const double sd = std::sqrt(lambda * (1.0 + lambda / r));
    const std::int64_t k_max = static_cast<std::int64_t>(lambda + 16.0 * sd + 64.0);
    for (std::int64_t k = 0;; ++k) {
        cdf += std::exp(log_p);
        if (u < cdf || k >= k_max) return k;
        log_p += log_q + std::log((static_cast<double>(k) + r) / (static_cast<double>(k) + 1.0));
    }
}

}  // namespace mdpricer
