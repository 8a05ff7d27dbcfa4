#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdpricer/domain.hpp"
#include "mdpricer/errors.hpp"

namespace mdpricer {

// One regression row: ln(observed markdown sales / normal baseline) explained
// by category-modulated log-discount plus a shared intercept.
struct ElasticitySample {
    double log_ratio = 0.0;     // ln(Y / Y_nor)
    double log_discount = 0.0;  // ln d, <= 0
    EffectModifierVector design;

    ElasticitySample(double ratio, double log_d, EffectModifierVector l)
        : log_ratio(ratio), log_discount(log_d), design(std::move(l)) {
        if (!std::isfinite(log_ratio)) throw DataError("sample log ratio is not finite");
        if (!(std::isfinite(log_discount) && log_discount <= 0.0))
            throw DataError("sample log discount must be finite and <= 0");
    }
};

// Recursive ridge regression with exponential forgetting.
//
// State is the decayed data Gram matrix and moment vector over regressors
// v = [ln d * [1, L], 1] of length m + 2. Each update() call ages the
// statistics by one factor of the forgetting rate and then absorbs the batch,
// so days with many rows and days with few carry the same recency weight.
// The ridge penalty applies to the m + 1 slope coefficients only, never to
// the intercept, and is added fresh at solve time so forgetting cannot wash
// out the regularizer.
class ElasticityModel {
public:
    struct Estimate {
        Eigen::VectorXd theta;  // length m + 1: shared slope + per-category offsets
        double intercept = 0.0;

        double elasticity(const EffectModifierVector& design) const {
            return design.dot_augmented(theta);
        }
    };

    ElasticityModel() = default;

    static ElasticityModel init(double ridge, double forgetting, int width) {
        if (!(std::isfinite(ridge) && ridge > 0.0))
            throw ConfigError("ridge strength must be finite and > 0");
        if (!(std::isfinite(forgetting) && forgetting > 0.0 && forgetting <= 1.0))
            throw ConfigError("forgetting rate must lie in (0, 1]");
        if (width < 3) throw ConfigError("design width must be at least 3 (one id per level)");
        ElasticityModel model;
        model.ridge_ = ridge;
        model.forgetting_ = forgetting;
        model.width_ = width;
        model.gram_ = Eigen::MatrixXd::Zero(width + 2, width + 2);
        model.moment_ = Eigen::VectorXd::Zero(width + 2);
        return model;
    }

    // One forgetting step, then absorb the day's samples.
    void update(std::span<const ElasticitySample> batch) {
        if (width_ == 0) throw ConfigError("model not initialized");
        if (batch.empty()) throw DataError("update called with an empty batch");
        for (const auto& s : batch)
            if (s.design.width() != width_)
                throw DimensionError("sample design width " + std::to_string(s.design.width()) +
                                     " does not match model width " + std::to_string(width_));

        gram_ *= forgetting_;
        moment_ *= forgetting_;
        for (const auto& s : batch) {
            const auto& hot = s.design.hot_positions();
            const int idx[5] = {0, 1 + hot[0], 1 + hot[1], 1 + hot[2], width_ + 1};
            const double val[5] = {s.log_discount, s.log_discount, s.log_discount,
                                   s.log_discount, 1.0};
            for (int i = 0; i < 5; ++i) {
                for (int j = 0; j < 5; ++j) gram_(idx[i], idx[j]) += val[i] * val[j];
                moment_(idx[i]) += val[i] * s.log_ratio;
            }
        }
        sample_count_ += static_cast<std::int64_t>(batch.size());
        dirty_ = true;
    }

    Estimate estimate() const {
        solve();
        Estimate e;
        e.theta = solution_.head(width_ + 1);
        e.intercept = solution_(width_ + 1);
        return e;
    }

    double elasticity_of(const EffectModifierVector& design) const {
        if (design.width() != width_)
            throw DimensionError("design width " + std::to_string(design.width()) +
                                 " does not match model width " + std::to_string(width_));
        solve();
        double s = solution_(0);
        for (int pos : design.hot_positions()) s += solution_(pos + 1);
        return s;
    }

    double intercept() const {
        solve();
        return solution_(width_ + 1);
    }

    // The matrix actually factorized at read time: decayed Gram plus the
    // ridge block. Positive definite whenever any data has been seen.
    Eigen::MatrixXd info_matrix() const {
        Eigen::MatrixXd a = gram_;
        a.diagonal().head(width_ + 1).array() += ridge_;
        return a;
    }

    int width() const { return width_; }
    double ridge() const { return ridge_; }
    double forgetting() const { return forgetting_; }
    std::int64_t sample_count() const { return sample_count_; }
    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::VectorXd& moment() const { return moment_; }

    // Rebuilds a model from persisted state.
    static ElasticityModel restore(double ridge, double forgetting, int width,
                                   std::int64_t sample_count, Eigen::MatrixXd gram,
                                   Eigen::VectorXd moment) {
        ElasticityModel model = init(ridge, forgetting, width);
        if (gram.rows() != width + 2 || gram.cols() != width + 2 || moment.size() != width + 2)
            throw DimensionError("persisted statistics do not match design width");
        if (sample_count < 0) throw DataError("persisted sample count is negative");
        model.gram_ = std::move(gram);
        model.moment_ = std::move(moment);
        model.sample_count_ = sample_count;
        model.dirty_ = true;
        return model;
    }

private:
    void solve() const {
        if (!dirty_) return;
        if (width_ == 0) throw ConfigError("model not initialized");
        if (sample_count_ == 0) {
            solution_ = Eigen::VectorXd::Zero(width_ + 2);
        } else {
            Eigen::MatrixXd a = gram_;
            a.diagonal().head(width_ + 1).array() += ridge_;
            solution_ = a.ldlt().solve(moment_);
        }
        dirty_ = false;
    }

    int width_ = 0;
    double ridge_ = 0.0;
    double forgetting_ = 1.0;
    std::int64_t sample_count_ = 0;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd moment_;
    mutable bool dirty_ = true;
    mutable Eigen::VectorXd solution_;
};

}  // namespace mdpricer
