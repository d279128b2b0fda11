#include "dyadlss/stats.hpp"

#include "dyadlss/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dyadlss::stats {
namespace {

constexpr const char* kModule = "stats";

}  // namespace

Moments describe(std::span<const double> values) {
    Moments m;
    double mean = 0.0;
    double m2 = 0.0;
    for (double x : values) {
        ++m.n;
        const double d = x - mean;
        mean += d / static_cast<double>(m.n);
        m2 += d * (x - mean);
    }
    m.mean = mean;
    m.sd = m.n > 1 ? std::sqrt(m2 / static_cast<double>(m.n - 1)) : 0.0;
    return m;
}

std::vector<double> standardize(std::span<const double> column) {
    const Moments m = describe(column);
    if (m.n < 2 || !(m.sd > 0.0)) throw DataError(kModule, "cannot standardize a constant column");
    std::vector<double> out(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) out[i] = (column[i] - m.mean) / m.sd;
    return out;
}

double student_t_two_sided_p(double t, double df) {
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    if (!(df > 0.0)) throw DataError(kModule, "t distribution needs positive df");
    const boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

Correlation pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError(kModule, "pearson_r: inputs differ in length");
    if (x.size() < 3) throw DataError(kModule, "pearson_r needs at least three pairs");
    const Moments mx = describe(x);
    const Moments my = describe(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx.mean;
        const double dy = y[i] - my.mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError(kModule, "pearson_r: zero variance input");
    Correlation c;
    c.n = x.size();
    c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(c.n - 2);
    const double denom = 1.0 - c.r * c.r;
    const double t = denom > 0.0 ? c.r * std::sqrt(df / denom) : std::copysign(INFINITY, c.r);
    c.p = student_t_two_sided_p(t, df);
    return c;
}

TTestResult one_sample_t(double mean, double sd, std::size_t n, double mu0) {
    if (n < 2) throw DataError(kModule, "one-sample t-test needs n >= 2");
    if (!(sd >= 0.0) || !std::isfinite(mean)) throw DataError(kModule, "one-sample t-test: invalid summary statistics");
    TTestResult r;
    r.mean = mean;
    r.sd = sd;
    r.n = n;
    r.mean2 = mu0;
    r.df = static_cast<double>(n - 1);
    const double diff = mean - mu0;
    if (sd > 0.0) {
        r.t = diff / (sd / std::sqrt(static_cast<double>(n)));
    } else if (diff == 0.0) {
        r.t = 0.0;
    } else {
        r.t = std::copysign(INFINITY, diff);
    }
    r.p = student_t_two_sided_p(r.t, r.df);
    return r;
}

TTestResult one_sample_t(std::span<const double> values, double mu0) {
    const Moments m = describe(values);
    return one_sample_t(m.mean, m.sd, m.n, mu0);
}

TTestResult welch_t(double mean1, double sd1, std::size_t n1, double mean2, double sd2, std::size_t n2) {
    if (n1 < 2 || n2 < 2) throw DataError(kModule, "Welch t-test needs n >= 2 in both groups");
    const double v1 = sd1 * sd1 / static_cast<double>(n1);
    const double v2 = sd2 * sd2 / static_cast<double>(n2);
    if (!(v1 + v2 > 0.0)) throw DataError(kModule, "Welch t-test: both groups have zero variance");
    TTestResult r;
    r.mean = mean1;
    r.sd = sd1;
    r.n = n1;
    r.mean2 = mean2;
    r.sd2 = sd2;
    r.n2 = n2;
    r.t = (mean1 - mean2) / std::sqrt(v1 + v2);
    r.df = (v1 + v2) * (v1 + v2) /
           (v1 * v1 / static_cast<double>(n1 - 1) + v2 * v2 / static_cast<double>(n2 - 1));
    r.p = student_t_two_sided_p(r.t, r.df);
    return r;
}

TTestResult welch_t(std::span<const double> x, std::span<const double> y) {
    const Moments a = describe(x);
    const Moments b = describe(y);
    return welch_t(a.mean, a.sd, a.n, b.mean, b.sd, b.n);
}

}  // namespace dyadlss::stats
