#include <doctest.h>

#include "dyadlss/error.hpp"
#include "dyadlss/lmm.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace dyadlss;
using namespace dyadlss::lmm;

namespace {

struct Sim {
    DesignMatrix d;
    std::vector<double> y;
};

/// g groups of m rows; columns intercept, x1 (row-level), x2 (group-level).
/// Noise is centred within each group when `centred` is set, which makes the
/// between-group mean square of the residual exactly zero.
Sim simulate(oracle::Rng& rng, std::size_t g, std::size_t m, double sigma_b, bool centred) {
    Sim s;
    s.d.columns = {"intercept", "x1", "x2"};
    s.d.x.resize(static_cast<Eigen::Index>(g * m), 3);
    for (std::size_t k = 0; k < g; ++k) s.d.group_labels.push_back("g" + std::to_string(k));
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < g; ++k) {
        const double x2 = rng.normal();
        const double b = sigma_b * rng.normal();
        std::vector<double> e(m);
        double mean = 0;
        for (auto& v : e) {
            v = rng.normal();
            mean += v / static_cast<double>(m);
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double x1 = rng.normal();
            s.d.x.row(row) << 1.0, x1, x2;
            s.d.group.push_back(k);
            s.y.push_back(0.5 + 0.8 * x1 - 0.3 * x2 + b + (centred ? e[i] - mean : e[i]));
            ++row;
        }
    }
    return s;
}

std::vector<std::vector<double>> rows_of(const DesignMatrix& d) {
    std::vector<std::vector<double>> out(d.rows(), std::vector<double>(d.cols()));
    for (std::size_t i = 0; i < d.rows(); ++i)
        for (std::size_t j = 0; j < d.cols(); ++j) out[i][j] = d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

}  // namespace

TEST_CASE("zero between-group variance reduces to OLS") {
    oracle::Rng rng(12);
    // Row-level covariate x1 is not group-centred, so OLS residuals keep a
    // small between-group component; the fit still has to land on the boundary.
    for (int rep = 0; rep < 20; ++rep) {
        auto s = simulate(rng, 25, 4, 0.0, true);
        const auto fit = fit_lmm(s.d, s.y);
        const auto ols = oracle::ols(rows_of(s.d), s.y);
        CHECK(fit.boundary);
        CHECK(fit.sigma_b2 < 1e-4);
        for (std::size_t j = 0; j < ols.size(); ++j) CHECK(std::abs(fit.beta(static_cast<Eigen::Index>(j)) - ols[j]) < 1e-6);
    }
}

TEST_CASE("balanced one-way layout matches ANOVA estimators") {
    oracle::Rng rng(21);
    for (std::size_t g : {6u, 10u, 30u}) {
        for (std::size_t m : {2u, 5u}) {
            DesignMatrix d;
            d.columns = {"intercept"};
            d.x = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(g * m), 1);
            std::vector<double> y;
            std::vector<std::vector<double>> groups(g);
            for (std::size_t k = 0; k < g; ++k) {
                d.group_labels.push_back(std::to_string(k));
                const double b = 1.5 * rng.normal();
                for (std::size_t i = 0; i < m; ++i) {
                    const double v = 2.0 + b + rng.normal();
                    y.push_back(v);
                    groups[k].push_back(v);
                    d.group.push_back(k);
                }
            }
            const auto ref = oracle::one_way_anova(groups);
            const auto fit = fit_lmm(d, y);
            if (ref.sigma_b2 == 0.0) continue;  // truncated case has no closed form to compare
            CHECK(std::abs(fit.sigma2 - ref.sigma2) < 1e-6);
            CHECK(std::abs(fit.sigma_b2 - ref.sigma_b2) < 1e-6);
        }
    }
}

TEST_CASE("GLS residuals are orthogonal to the design") {
    oracle::Rng rng(33);
    auto s = simulate(rng, 20, 6, 1.0, false);
    const auto fit = fit_lmm(s.d, s.y);
    REQUIRE_FALSE(fit.boundary);
    const auto n = static_cast<Eigen::Index>(s.y.size());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (s.d.group[static_cast<std::size_t>(i)] == s.d.group[static_cast<std::size_t>(j)]) v(i, j) += fit.theta;
    const Eigen::Map<const Eigen::VectorXd> y(s.y.data(), n);
    const Eigen::VectorXd r = y - s.d.x * fit.beta;
    const Eigen::VectorXd score = s.d.x.transpose() * v.ldlt().solve(r);
    CHECK(score.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("grid scan brackets the optimum") {
    oracle::Rng rng(44);
    for (int rep = 0; rep < 10; ++rep) {
        auto s = simulate(rng, 15, 4, rng.uniform(0.0, 2.0), false);
        for (auto method : {FitMethod::reml, FitMethod::ml}) {
            FitOptions opt;
            opt.method = method;
            const auto fit = fit_lmm(s.d, s.y, opt);
            double grid_min = profiled_criterion(s.d, s.y, 0.0, method);
            for (double lt = -12; lt <= 12; lt += 0.05) grid_min = std::min(grid_min, profiled_criterion(s.d, s.y, std::exp(lt), method));
            CHECK(fit.criterion <= grid_min + 1e-9);
            CHECK(fit.sigma_b2 >= 0.0);
            CHECK(fit.sigma2 > 0.0);
            for (const auto& c : fit.coefficients) {
                CHECK(c.se > 0.0);
                CHECK(c.df > 0.0);
                CHECK(c.p > 0.0);
                CHECK(c.p <= 1.0);
            }
        }
    }
}

TEST_CASE("ML variance is smaller than REML") {
    oracle::Rng rng(55);
    auto s = simulate(rng, 12, 3, 1.0, false);
    FitOptions ml;
    ml.method = FitMethod::ml;
    CHECK(fit_lmm(s.d, s.y, ml).sigma2 < fit_lmm(s.d, s.y).sigma2);
}

TEST_CASE("df methods") {
    oracle::Rng rng(66);
    auto s = simulate(rng, 20, 4, 1.2, false);
    const auto sat = fit_lmm(s.d, s.y);
    FitOptions res;
    res.dof = DofMethod::residual;
    const auto r = fit_lmm(s.d, s.y, res);
    REQUIRE_FALSE(sat.boundary);
    CHECK(r.coefficient("x1").df == 77.0);
    // a group-level covariate gets roughly between-group df
    CHECK(sat.coefficient("x2").df < 30.0);
    CHECK(sat.coefficient("x2").df > 10.0);
    CHECK(sat.coefficient("x1").estimate == r.coefficient("x1").estimate);
}

TEST_CASE("fit errors") {
    oracle::Rng rng(77);
    auto s = simulate(rng, 5, 2, 1.0, false);
    auto one_group = s;
    one_group.d.group_labels = {"only"};
    for (auto& g : one_group.d.group) g = 0;
    CHECK_THROWS_AS(fit_lmm(one_group.d, one_group.y), DataError);

    auto deficient = s;
    deficient.d.x.col(2) = deficient.d.x.col(1) * 2.0;
    CHECK_THROWS_AS(fit_lmm(deficient.d, deficient.y), DataError);

    auto tiny = simulate(rng, 2, 1, 1.0, false);
    CHECK_THROWS_AS(fit_lmm(tiny.d, tiny.y), DataError);
    CHECK_THROWS_AS(s.d.column("nope").value(), std::bad_optional_access);
    const auto fit = fit_lmm(s.d, s.y);
    CHECK_THROWS_AS(fit.coefficient("nope"), DataError);
}
