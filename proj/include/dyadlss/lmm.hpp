#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dyadlss::lmm {

/// Fixed-effect design with one grouping factor for the random intercept.
struct DesignMatrix {
    std::vector<std::string> columns;
    Eigen::MatrixXd x;                // rows x columns
    std::vector<std::size_t> group;   // group index per row, 0..groups-1
    std::vector<std::string> group_labels;

    std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
    std::optional<std::size_t> column(std::string_view name) const;
};

enum class FitMethod { reml, ml };
enum class DofMethod { satterthwaite, residual };

std::string_view to_string(FitMethod m);
std::string_view to_string(DofMethod m);
std::optional<FitMethod> parse_fit_method(std::string_view s);
std::optional<DofMethod> parse_dof_method(std::string_view s);

struct FitOptions {
    FitMethod method = FitMethod::reml;
    DofMethod dof = DofMethod::satterthwaite;
    double log_theta_min = -12.0;
    double log_theta_max = 12.0;
    std::size_t max_iterations = 200;
};

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

struct TracePoint {
    double log_theta = 0.0;  // -inf for the theta = 0 boundary
    double criterion = 0.0;
};

struct MixedModelFit {
    std::vector<Coefficient> coefficients;
    double sigma_b2 = 0.0;  // random-intercept variance
    double sigma2 = 0.0;    // residual variance
    double theta = 0.0;     // sigma_b2 / sigma2
    double loglik = 0.0;    // (restricted) log-likelihood at the optimum
    double criterion = 0.0; // -2 * loglik
    FitMethod method = FitMethod::reml;
    DofMethod dof = DofMethod::satterthwaite;
    std::size_t iterations = 0;
    std::size_t observations = 0;
    std::size_t groups = 0;
    bool boundary = false;  // sigma_b2 estimated at 0
    std::vector<TracePoint> trace;
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;  // of beta

    const Coefficient& coefficient(std::string_view name) const;
};

/// y = X beta + b_group + e, b ~ N(0, sigma_b2), e ~ N(0, sigma2).
///
/// The criterion is profiled over theta = sigma_b2 / sigma2: beta comes from
/// GLS and sigma2 in closed form for each theta. log(theta) is scanned on a
/// grid over [log_theta_min, log_theta_max], refined with Brent's method
/// around the best grid point, and compared with the theta = 0 boundary.
/// Standard errors come from the GLS covariance; df follow Satterthwaite's
/// approximation using the expected information of (sigma2, sigma_b2),
/// or n - p with DofMethod::residual or a boundary fit.
///
/// Throws DataError for fewer than two groups, n <= p or a rank-deficient
/// X, NumericError if the optimizer does not converge.
MixedModelFit fit_lmm(const DesignMatrix& design, std::span<const double> y, const FitOptions& options = {});

/// Profiled criterion (-2 log-likelihood) at a given theta; exposed for the
/// unimodality scan in tests.
double profiled_criterion(const DesignMatrix& design, std::span<const double> y, double theta, FitMethod method);

}  // namespace dyadlss::lmm
