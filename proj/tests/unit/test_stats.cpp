#include <doctest.h>

#include "dyadlss/error.hpp"
#include "dyadlss/stats.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace dyadlss;
using namespace dyadlss::stats;

TEST_CASE("standardize") {
    const std::vector<double> v{1, 2, 3};
    CHECK(standardize(v) == std::vector<double>{-1, 0, 1});
    oracle::Rng rng(1);
    std::vector<double> x(57);
    for (auto& e : x) e = rng.normal() * 3 + 10;
    const auto z = standardize(x);
    const auto m = describe(z);
    CHECK(std::abs(m.mean) < 1e-12);
    CHECK(std::abs(m.sd - 1.0) < 1e-12);
    const auto zz = standardize(z);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(zz[i] - z[i]) < 1e-12);
    const std::vector<double> flat{4, 4, 4};
    CHECK_THROWS_AS(standardize(flat), DataError);
}

TEST_CASE("pearson_r") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> y{2, 4, 6, 8, 10};
    CHECK(pearson_r(x, y).r == doctest::Approx(1.0).epsilon(1e-15));
    // residual of y on x is orthogonal to x by construction
    const std::vector<double> r{1, -2, 0, 2, -1};
    CHECK(std::abs(pearson_r(x, r).r) < 1e-12);

    oracle::Rng rng(98);
    std::vector<double> a(98), b(98);
    for (std::size_t i = 0; i < 98; ++i) {
        a[i] = rng.normal();
        b[i] = 0.83 * a[i] + 0.55 * rng.normal();
    }
    const auto c = pearson_r(a, b);
    CHECK(std::abs(c.r - oracle::pearson(a, b)) < 1e-10);
    const double t = c.r * std::sqrt(96.0 / (1 - c.r * c.r));
    CHECK(c.p == doctest::Approx(oracle::t_two_sided_p(t, 96)).epsilon(1e-9));

    const std::vector<double> flat{1, 1, 1, 1, 1};
    CHECK_THROWS_AS(pearson_r(x, flat), DataError);
}

TEST_CASE("one-sample t") {
    const std::vector<double> at_mu{4, 4, 4};
    CHECK(one_sample_t(at_mu, 4.0).t == 0.0);
    const auto r = one_sample_t(7.36, 1.77, 98, 4.0);
    CHECK(r.t == doctest::Approx(18.79).epsilon(1e-3));
    CHECK(r.t > 18.0);
    CHECK(r.df == 97);

    const std::vector<double> v{3.1, 5.2, 4.4, 6.0, 2.2};
    std::vector<double> flipped;
    for (double x : v) flipped.push_back(8.0 - x);  // mirror around mu0 = 4
    CHECK(one_sample_t(flipped, 4.0).t == doctest::Approx(-one_sample_t(v, 4.0).t));
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(one_sample_t(one, 0.0), DataError);
}

TEST_CASE("Welch reproduces the paper's pair-count comparison") {
    const auto r = welch_t(77.4, 41.5, 41, 29.8, 14.4, 8);
    CHECK(std::abs(r.t - 5.77) <= 0.02);
    CHECK(std::abs(r.df - 32.9) <= 0.3);
    CHECK(r.p < 0.001);
}

TEST_CASE("Welch reductions") {
    CHECK(welch_t(3.0, 1.0, 10, 3.0, 1.0, 10).t == 0.0);
    CHECK(welch_t(5.0, 2.0, 12, 3.0, 2.0, 12).df == doctest::Approx(22.0).epsilon(1e-12));
    CHECK_THROWS_AS(welch_t(1.0, 1.0, 1, 2.0, 1.0, 5), DataError);
}

TEST_CASE("t-tests agree with the long-double reference on random fixtures") {
    oracle::Rng rng(2718);
    for (int i = 0; i < 1000; ++i) {
        const double m1 = rng.uniform(-50, 50), m2 = rng.uniform(-50, 50);
        const double s1 = rng.uniform(0.1, 30), s2 = rng.uniform(0.1, 30);
        const std::size_t n1 = 2 + rng.below(200), n2 = 2 + rng.below(200);
        const auto w = welch_t(m1, s1, n1, m2, s2, n2);
        const auto ref = oracle::welch(m1, s1, n1, m2, s2, n2);
        CHECK(std::abs(w.t - ref.t) <= 1e-9 * std::max(1.0, std::abs(ref.t)));
        CHECK(std::abs(w.df - ref.df) <= 1e-6);
        CHECK(std::abs(w.p - oracle::t_two_sided_p(ref.t, ref.df)) < 1e-9);

        std::vector<double> xs(2 + rng.below(60));
        for (auto& x : xs) x = rng.normal() * s1 + m1;
        const double mu0 = m1 + rng.normal() * s1;
        const auto o = one_sample_t(xs, mu0);
        const auto oref = oracle::one_sample(xs, mu0);
        CHECK(std::abs(o.t - oref.t) <= 1e-9 * std::max(1.0, std::abs(oref.t)));
        CHECK(o.df == oref.df);
    }
}

TEST_CASE("two-sided p handles extremes") {
    CHECK(student_t_two_sided_p(0.0, 10) == doctest::Approx(1.0));
    CHECK(student_t_two_sided_p(INFINITY, 10) == 0.0);
    CHECK(student_t_two_sided_p(-INFINITY, 10) == 0.0);
    CHECK(student_t_two_sided_p(2.228138851986, 10) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK_THROWS_AS(student_t_two_sided_p(1.0, 0.0), DataError);
}
