#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dyadlss::stats {

struct Moments {
    double mean = 0.0;
    double sd = 0.0;  // sample sd, ddof = 1
    std::size_t n = 0;
};

/// Welford pass; sd is 0 for n < 2.
Moments describe(std::span<const double> values);

/// z-scores with the sample sd (ddof = 1). Throws DataError when the column
/// has fewer than two distinct values.
std::vector<double> standardize(std::span<const double> column);

struct Correlation {
    double r = 0.0;
    double p = 1.0;  // two-sided, t with n - 2 df
    std::size_t n = 0;
};

Correlation pearson_r(std::span<const double> x, std::span<const double> y);

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;  // two-sided
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
    // second group for two-sample tests; for one-sample tests mean2 holds mu0
    double mean2 = 0.0;
    double sd2 = 0.0;
    std::size_t n2 = 0;
};

/// Two-sided p-value of a t statistic; handles infinite t.
double student_t_two_sided_p(double t, double df);

/// t = (mean - mu0) / (sd / sqrt(n)), df = n - 1. With sd = 0 the statistic
/// is 0 when mean == mu0 and +-inf otherwise.
TTestResult one_sample_t(std::span<const double> values, double mu0);
TTestResult one_sample_t(double mean, double sd, std::size_t n, double mu0);

/// Welch's unequal-variance two-sample test with Welch-Satterthwaite df.
TTestResult welch_t(double mean1, double sd1, std::size_t n1, double mean2, double sd2, std::size_t n2);
TTestResult welch_t(std::span<const double> x, std::span<const double> y);

}  // namespace dyadlss::stats
