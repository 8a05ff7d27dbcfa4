#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mdpricer/domain.hpp"
#include "mdpricer/elasticity.hpp"

using namespace mdpricer;

namespace {

struct DayRow {
    int day = 0;
    ElasticitySample sample;
};

Taxonomy cube_taxonomy() {
    Taxonomy t;
    for (const char* l1 : {"a0", "a1"})
        for (const char* l2 : {"b0", "b1"})
            for (const char* l3 : {"c0", "c1"}) t.add({l1, l2, l3});
    return t;
}

std::vector<EffectModifierVector> leaf_designs(const Taxonomy& t) {
    std::vector<EffectModifierVector> out;
    for (const auto& l1 : t.ids(0))
        for (const auto& l2 : t.ids(1))
            for (const auto& l3 : t.ids(2)) out.push_back(encode_category({l1, l2, l3}, t));
    return out;
}

Eigen::VectorXd regressor(const ElasticitySample& s, int width) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(width + 2);
    v(0) = s.log_discount;
    for (int pos : s.design.hot_positions()) v(1 + pos) = s.log_discount;
    v(width + 1) = 1.0;
    return v;
}

// Reference estimator: rebuild the weighted normal equations from scratch,
// weighting each row by forgetting^(age in days), ridge on the slope block.
Eigen::VectorXd dense_solution(const std::vector<DayRow>& rows, int last_day, int width,
                               double ridge, double forgetting) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(width + 2, width + 2);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(width + 2);
    for (const auto& row : rows) {
        const double w = std::pow(forgetting, last_day - row.day);
        Eigen::VectorXd v = regressor(row.sample, width);
        a += w * v * v.transpose();
        b += w * v * row.sample.log_ratio;
    }
    a.diagonal().head(width + 1).array() += ridge;
    return a.ldlt().solve(b);
}

// Least-norm representation of a raw coefficient vector within the span of
// the leaf designs. Planted targets must be projected this way before they
// can be compared to a fitted model.
Eigen::VectorXd project_to_identified(const Eigen::VectorXd& raw,
                                      const std::vector<EffectModifierVector>& designs) {
    const int cols = static_cast<int>(raw.size());
    Eigen::MatrixXd d(static_cast<int>(designs.size()), cols);
    for (std::size_t i = 0; i < designs.size(); ++i) {
        auto aug = designs[i].augmented();
        for (int j = 0; j < cols; ++j) d(static_cast<int>(i), j) = aug[static_cast<std::size_t>(j)];
    }
    return d.completeOrthogonalDecomposition().solve(d * raw);
}

}  // namespace

TEST_CASE("init validates hyperparameters") {
    CHECK_THROWS_AS(ElasticityModel::init(0.0, 0.95, 6), ConfigError);
    CHECK_THROWS_AS(ElasticityModel::init(-1.0, 0.95, 6), ConfigError);
    CHECK_THROWS_AS(ElasticityModel::init(0.5, 0.0, 6), ConfigError);
    CHECK_THROWS_AS(ElasticityModel::init(0.5, 1.5, 6), ConfigError);
    CHECK_THROWS_AS(ElasticityModel::init(0.5, 0.95, 2), ConfigError);
    CHECK_NOTHROW(ElasticityModel::init(0.5, 1.0, 3));
}

TEST_CASE("sample constructor validates inputs") {
    EffectModifierVector l(6, {0, 2, 4});
    CHECK_NOTHROW(ElasticitySample(0.3, -0.5, l));
    CHECK_NOTHROW(ElasticitySample(-2.0, 0.0, l));
    CHECK_THROWS_AS(ElasticitySample(0.3, 0.2, l), DataError);
    CHECK_THROWS_AS(ElasticitySample(std::numeric_limits<double>::quiet_NaN(), -0.5, l), DataError);
    CHECK_THROWS_AS(ElasticitySample(0.3, -std::numeric_limits<double>::infinity(), l), DataError);
}

TEST_CASE("streamed batches agree with a dense recomputation") {
    Taxonomy t = cube_taxonomy();
    auto designs = leaf_designs(t);
    const int width = t.total_width();
    const double ridge = 0.5, forgetting = 0.95;

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> du(0.3, 1.0);
    std::uniform_real_distribution<double> dy(-1.5, 1.5);
    std::uniform_int_distribution<int> dn(1, 6);

    auto model = ElasticityModel::init(ridge, forgetting, width);
    std::vector<DayRow> all;
    for (int day = 1; day <= 14; ++day) {
        std::vector<ElasticitySample> batch;
        const int n = dn(rng);
        for (int i = 0; i < n; ++i) {
            const auto& design = designs[rng() % designs.size()];
            ElasticitySample s(dy(rng), std::log(du(rng)), design);
            batch.push_back(s);
            all.push_back({day, s});
        }
        model.update(batch);

        Eigen::VectorXd ref = dense_solution(all, day, width, ridge, forgetting);
        auto est = model.estimate();
        for (int j = 0; j <= width; ++j)
            CHECK(est.theta(j) == Catch::Approx(ref(j)).margin(1e-10));
        CHECK(est.intercept == Catch::Approx(ref(width + 1)).margin(1e-10));
        for (const auto& design : designs) {
            double ref_e = ref(0);
            for (int pos : design.hot_positions()) ref_e += ref(pos + 1);
            CHECK(model.elasticity_of(design) == Catch::Approx(ref_e).margin(1e-10));
        }
    }
    CHECK(model.sample_count() == static_cast<std::int64_t>(all.size()));
}

TEST_CASE("noiseless planted coefficients are recovered to high precision") {
    Taxonomy t = cube_taxonomy();
    auto designs = leaf_designs(t);
    const int width = t.total_width();

    std::mt19937_64 rng(7);
    Eigen::VectorXd raw(width + 1);
    raw(0) = -2.0;
    for (int j = 1; j <= width; ++j)
        raw(j) = -0.4 + 0.8 * (static_cast<double>(rng() % 1000) / 999.0);
    const double intercept = std::log(0.8);
    Eigen::VectorXd target = project_to_identified(raw, designs);

    // The one-hot blocks make the design rank deficient by 2, so only the
    // projected representative is identified. The ridge must be small for the
    // identified quantities (bias ~ ridge / eigenvalue) but not so small that
    // it amplifies round-off along the null directions (error ~ eps / ridge).
    auto model = ElasticityModel::init(1e-6, 1.0, width);
    for (int day = 0; day < 25; ++day) {
        std::vector<ElasticitySample> batch;
        for (const auto& design : designs)
            for (double d : {0.3, 0.5, 0.7, 0.9}) {
                double e = 0.0;
                auto aug = design.augmented();
                for (int j = 0; j <= width; ++j) e += aug[static_cast<std::size_t>(j)] * raw(j);
                batch.emplace_back(e * std::log(d) + intercept, std::log(d), design);
            }
        model.update(batch);
    }

    auto est = model.estimate();
    REQUIRE(est.theta.size() == target.size());
    // Coordinates converge to the least-norm representative only as the ridge
    // vanishes; the identified combinations below are held much tighter.
    for (int j = 0; j < target.size(); ++j)
        CHECK(std::abs(est.theta(j) - target(j)) < 1e-3);
    CHECK(std::abs(est.intercept - intercept) < 1e-6);
    for (const auto& design : designs) {
        double truth = 0.0;
        auto aug = design.augmented();
        for (int j = 0; j <= width; ++j) truth += aug[static_cast<std::size_t>(j)] * raw(j);
        CHECK(std::abs(model.elasticity_of(design) - truth) < 1e-6);
    }
}

TEST_CASE("rescaling the baseline shifts only the intercept") {
    Taxonomy t = cube_taxonomy();
    auto designs = leaf_designs(t);
    const int width = t.total_width();
    const double k = 3.7;

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> du(0.3, 1.0);
    std::uniform_real_distribution<double> dy(-1.0, 1.0);

    auto base = ElasticityModel::init(0.5, 0.95, width);
    auto scaled = ElasticityModel::init(0.5, 0.95, width);
    for (int day = 0; day < 10; ++day) {
        std::vector<ElasticitySample> b1, b2;
        for (int i = 0; i < 8; ++i) {
            const auto& design = designs[rng() % designs.size()];
            double ld = std::log(du(rng));
            double y = dy(rng);
            b1.emplace_back(y, ld, design);
            b2.emplace_back(y - std::log(k), ld, design);  // baseline multiplied by k
        }
        base.update(b1);
        scaled.update(b2);
    }

    auto e1 = base.estimate();
    auto e2 = scaled.estimate();
    for (int j = 0; j <= width; ++j) CHECK(e2.theta(j) == Catch::Approx(e1.theta(j)).margin(1e-8));
    CHECK(e2.intercept == Catch::Approx(e1.intercept - std::log(k)).margin(1e-8));
}

TEST_CASE("forgetting tracks a regime change faster than a flat memory") {
    Taxonomy t;
    t.add({"a", "b", "c"});
    auto design = encode_category({"a", "b", "c"}, t);
    const int width = t.total_width();

    auto forgetful = ElasticityModel::init(1e-6, 0.9, width);
    auto flat = ElasticityModel::init(1e-6, 1.0, width);
    auto feed = [&](ElasticityModel& m, double elasticity, int days) {
        for (int day = 0; day < days; ++day) {
            std::vector<ElasticitySample> batch;
            for (double d : {0.4, 0.6, 0.8})
                batch.emplace_back(elasticity * std::log(d), std::log(d), design);
            m.update(batch);
        }
    };
    feed(forgetful, -3.0, 30);
    feed(flat, -3.0, 30);
    feed(forgetful, -1.0, 30);
    feed(flat, -1.0, 30);

    // After 30 days the old regime keeps weight 0.9^30 ~ 4% under forgetting
    // but a full half of the mass under flat memory.
    const double err_forgetful = std::abs(forgetful.elasticity_of(design) - (-1.0));
    const double err_flat = std::abs(flat.elasticity_of(design) - (-1.0));
    CHECK(err_forgetful < err_flat);
    CHECK(err_forgetful < 0.1);
    CHECK(err_flat > 0.5);
}

TEST_CASE("information matrix stays positive definite under decay") {
    Taxonomy t = cube_taxonomy();
    auto designs = leaf_designs(t);
    const int width = t.total_width();

    auto model = ElasticityModel::init(0.5, 0.9, width);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> du(0.3, 1.0);
    for (int day = 0; day < 40; ++day) {
        std::vector<ElasticitySample> batch;
        batch.emplace_back(0.2, std::log(du(rng)), designs[rng() % designs.size()]);
        model.update(batch);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.info_matrix());
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("an empty model estimates zero everywhere") {
    auto model = ElasticityModel::init(0.5, 0.95, 6);
    auto est = model.estimate();
    CHECK(est.theta.isZero(0.0));
    CHECK(est.intercept == 0.0);
    CHECK(model.elasticity_of(EffectModifierVector(6, {0, 2, 4})) == 0.0);
    CHECK(model.sample_count() == 0);
}

TEST_CASE("update rejects bad batches") {
    auto model = ElasticityModel::init(0.5, 0.95, 6);
    CHECK_THROWS_AS(model.update({}), DataError);

    std::vector<ElasticitySample> wrong{
        ElasticitySample(0.1, -0.3, EffectModifierVector(7, {0, 2, 4}))};
    CHECK_THROWS_AS(model.update(wrong), DimensionError);

    ElasticityModel uninit;
    std::vector<ElasticitySample> ok{
        ElasticitySample(0.1, -0.3, EffectModifierVector(6, {0, 2, 4}))};
    CHECK_THROWS_AS(uninit.update(ok), ConfigError);

    CHECK_THROWS_AS(model.elasticity_of(EffectModifierVector(7, {0, 2, 4})), DimensionError);
}

TEST_CASE("estimate snapshots are unaffected by later updates") {
    Taxonomy t = cube_taxonomy();
    auto designs = leaf_designs(t);
    auto model = ElasticityModel::init(0.5, 0.95, t.total_width());

    std::vector<ElasticitySample> batch{ElasticitySample(-0.7, std::log(0.5), designs[0])};
    model.update(batch);
    auto before = model.estimate();
    Eigen::VectorXd kept = before.theta;
    double kept_c = before.intercept;

    std::vector<ElasticitySample> more{ElasticitySample(1.2, std::log(0.9), designs[3])};
    model.update(more);
    CHECK((before.theta.array() == kept.array()).all());
    CHECK(before.intercept == kept_c);
    CHECK_FALSE((model.estimate().theta.array() == kept.array()).all());
}

TEST_CASE("persisted statistics restore to a bit-identical model") {
    Taxonomy t = cube_taxonomy();
    auto designs = leaf_designs(t);
    const int width = t.total_width();

    auto model = ElasticityModel::init(0.5, 0.95, width);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> du(0.3, 1.0);
    std::uniform_real_distribution<double> dy(-1.0, 1.0);
    for (int day = 0; day < 6; ++day) {
        std::vector<ElasticitySample> batch;
        for (int i = 0; i < 5; ++i)
            batch.emplace_back(dy(rng), std::log(du(rng)), designs[rng() % designs.size()]);
        model.update(batch);
    }

    auto copy = ElasticityModel::restore(model.ridge(), model.forgetting(), model.width(),
                                         model.sample_count(), model.gram(), model.moment());
    for (const auto& design : designs)
        CHECK(copy.elasticity_of(design) == model.elasticity_of(design));
    CHECK(copy.intercept() == model.intercept());

    CHECK_THROWS_AS(ElasticityModel::restore(0.5, 0.95, width, 10,
                                             Eigen::MatrixXd::Zero(width + 1, width + 1),
                                             Eigen::VectorXd::Zero(width + 2)),
                    DimensionError);
    CHECK_THROWS_AS(ElasticityModel::restore(0.5, 0.95, width, -1,
                                             Eigen::MatrixXd::Zero(width + 2, width + 2),
                                             Eigen::VectorXd::Zero(width + 2)),
                    DataError);
}
