#include "dyadlss/lmm.hpp"

#include "dyadlss/error.hpp"
#include "dyadlss/stats.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace dyadlss::lmm {
namespace {

constexpr const char* kModule = "lmm";
constexpr double kGridStep = 0.5;
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

/// Sufficient statistics for evaluating the profiled criterion in O(G p^2)
/// per theta. With V = I + theta Z Z' (sigma2 factored out), each group block
/// inverts to I - w 11' with w = theta / (1 + n_g theta).
class Profile {
public:
    struct Eval {
        double criterion = 0.0;
        double rvr = 0.0;  // r' V^-1 r at the GLS beta
        Eigen::VectorXd beta;
        Eigen::MatrixXd a;  // X' V^-1 X
        Eigen::MatrixXd a_inv;
    };

    Profile(const DesignMatrix& d, std::span<const double> y, FitMethod method)
        : method_(method), n_(d.rows()), p_(d.cols()), groups_(d.group_labels.size()) {
        Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
        xtx_ = d.x.transpose() * d.x;
        xty_ = d.x.transpose() * yv;
        yty_ = yv.squaredNorm();
        size_.assign(groups_, 0.0);
        xsum_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(groups_));
        ysum_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups_));
        for (std::size_t i = 0; i < n_; ++i) {
            const auto g = static_cast<Eigen::Index>(d.group[i]);
            size_[d.group[i]] += 1.0;
            xsum_.col(g) += d.x.row(static_cast<Eigen::Index>(i)).transpose();
            ysum_(g) += y[i];
        }
    }

    Eval at(double theta) const {
        Eval e;
        e.a = xtx_;
        Eigen::VectorXd b = xty_;
        double c = yty_;
        double logdet_v = 0.0;
        for (std::size_t g = 0; g < groups_; ++g) {
            const auto gi = static_cast<Eigen::Index>(g);
            const double w = theta / (1.0 + size_[g] * theta);
            e.a.noalias() -= w * xsum_.col(gi) * xsum_.col(gi).transpose();
            b.noalias() -= w * ysum_(gi) * xsum_.col(gi);
            c -= w * ysum_(gi) * ysum_(gi);
            logdet_v += std::log1p(size_[g] * theta);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(e.a);
        if (llt.info() != Eigen::Success) throw NumericError(kModule, "X'V^-1X is singular");
        e.beta = llt.solve(b);
        e.a_inv = llt.solve(Eigen::MatrixXd::Identity(e.a.rows(), e.a.cols()));
        e.rvr = c - b.dot(e.beta);
        if (!(e.rvr > 0.0)) throw NumericError(kModule, "non-positive residual quadratic form");

        const auto n = static_cast<double>(n_);
        const auto p = static_cast<double>(p_);
        if (method_ == FitMethod::ml) {
            e.criterion = n * (kLog2Pi + std::log(e.rvr / n) + 1.0) + logdet_v;
        } else {
            double logdet_a = 0.0;
            const Eigen::MatrixXd l = llt.matrixL();
            for (Eigen::Index k = 0; k < l.rows(); ++k) logdet_a += 2.0 * std::log(l(k, k));
            e.criterion = (n - p) * (kLog2Pi + std::log(e.rvr / (n - p)) + 1.0) + logdet_v + logdet_a;
        }
        return e;
    }

    std::size_t n() const { return n_; }
    std::size_t p() const { return p_; }

private:
    FitMethod method_;
    std::size_t n_;
    std::size_t p_;
    std::size_t groups_;
    Eigen::MatrixXd xtx_;
    Eigen::VectorXd xty_;
    double yty_ = 0.0;
    std::vector<double> size_;
    Eigen::MatrixXd xsum_;  // p x G column sums per group
    Eigen::VectorXd ysum_;
};

void check_design(const DesignMatrix& d, std::span<const double> y) {
    if (y.size() != d.rows() || d.group.size() != d.rows()) {
        throw DataError(kModule, "response, design and grouping differ in length");
    }
    if (d.columns.size() != d.cols()) throw DataError(kModule, "column names do not match the design");
    if (d.group_labels.size() < 2) throw DataError(kModule, "random-intercept model needs at least two groups");
    for (std::size_t g : d.group) {
        if (g >= d.group_labels.size()) throw DataError(kModule, "group index out of range");
    }
    if (d.rows() <= d.cols()) {
        throw DataError(kModule, "need more observations (" + std::to_string(d.rows()) + ") than fixed effects (" +
                                     std::to_string(d.cols()) + ")");
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw DataError(kModule, "non-finite response value");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
    if (static_cast<std::size_t>(qr.rank()) < d.cols()) {
        throw DataError(kModule, "design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " < " +
                                     std::to_string(d.cols()) + " columns)");
    }
}

/// Satterthwaite df per coefficient from the expected information of
/// phi = (sigma2, sigma_b2):
///   df_j = 2 Var_j^2 / (g' I^-1 g),  g_k = d Var_j / d phi_k.
std::vector<double> satterthwaite_df(const DesignMatrix& d, const MixedModelFit& fit, FitMethod method) {
    const auto n = static_cast<Eigen::Index>(d.rows());
    const auto groups = static_cast<Eigen::Index>(d.group_labels.size());
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, groups);
    for (Eigen::Index i = 0; i < n; ++i) z(i, static_cast<Eigen::Index>(d.group[static_cast<std::size_t>(i)])) = 1.0;

    // V^-1 for V = sigma2 I + sigma_b2 Z Z'
    Eigen::MatrixXd vinv = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> size(static_cast<std::size_t>(groups), 0.0);
    for (std::size_t g : d.group) size[g] += 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t gi = d.group[static_cast<std::size_t>(i)];
        const double w = fit.sigma_b2 / (fit.sigma2 * (fit.sigma2 + size[gi] * fit.sigma_b2));
        for (Eigen::Index j = 0; j < n; ++j) {
            if (d.group[static_cast<std::size_t>(j)] == gi) vinv(i, j) = -w;
        }
        vinv(i, i) += 1.0 / fit.sigma2;
    }
    const Eigen::MatrixXd w = vinv * d.x;           // V^-1 X
    const Eigen::MatrixXd& c = fit.covariance;      // (X'V^-1X)^-1
    const Eigen::MatrixXd proj = method == FitMethod::reml ? Eigen::MatrixXd(vinv - w * c * w.transpose()) : vinv;

    const Eigen::MatrixXd pz = proj * z;
    const Eigen::MatrixXd zpz = z.transpose() * pz;
    Eigen::Matrix2d info;
    info(0, 0) = 0.5 * proj.squaredNorm();
    info(0, 1) = info(1, 0) = 0.5 * pz.squaredNorm();
    info(1, 1) = 0.5 * zpz.squaredNorm();

    const Eigen::MatrixXd wc = w * c;                   // V^-1 X C
    const Eigen::MatrixXd g_sigma2 = wc.transpose() * wc;
    const Eigen::MatrixXd zwc = z.transpose() * wc;
    const Eigen::MatrixXd g_sigmab2 = zwc.transpose() * zwc;

    const double residual = static_cast<double>(d.rows() - d.cols());
    Eigen::LDLT<Eigen::Matrix2d> ldlt(info);
    std::vector<double> out(d.cols(), residual);
    if (ldlt.info() != Eigen::Success) return out;
    const Eigen::Matrix2d info_inv = ldlt.solve(Eigen::Matrix2d::Identity());
    for (std::size_t j = 0; j < d.cols(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const Eigen::Vector2d g(g_sigma2(jj, jj), g_sigmab2(jj, jj));
        const double denom = g.dot(info_inv * g);
        const double var = c(jj, jj);
        const double df = 2.0 * var * var / denom;
        if (std::isfinite(df) && df > 0.0) out[j] = df;
    }
    return out;
}

}  // namespace

std::optional<std::size_t> DesignMatrix::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    return std::nullopt;
}

std::string_view to_string(FitMethod m) { return m == FitMethod::reml ? "reml" : "ml"; }
std::string_view to_string(DofMethod m) { return m == DofMethod::satterthwaite ? "satterthwaite" : "residual"; }

std::optional<FitMethod> parse_fit_method(std::string_view s) {
    if (s == "reml") return FitMethod::reml;
    if (s == "ml") return FitMethod::ml;
    return std::nullopt;
}

std::optional<DofMethod> parse_dof_method(std::string_view s) {
    if (s == "satterthwaite") return DofMethod::satterthwaite;
    if (s == "residual") return DofMethod::residual;
    return std::nullopt;
}

const Coefficient& MixedModelFit::coefficient(std::string_view name) const {
    for (const auto& c : coefficients) {
        if (c.name == name) return c;
    }
    throw DataError(kModule, "no coefficient named '" + std::string(name) + "'");
}

double profiled_criterion(const DesignMatrix& design, std::span<const double> y, double theta, FitMethod method) {
    check_design(design, y);
    return Profile(design, y, method).at(theta).criterion;
}

MixedModelFit fit_lmm(const DesignMatrix& design, std::span<const double> y, const FitOptions& options) {
    check_design(design, y);
    if (!(options.log_theta_min < options.log_theta_max)) throw DataError(kModule, "empty log-theta interval");
    const Profile profile(design, y, options.method);

    MixedModelFit fit;
    fit.method = options.method;
    fit.dof = options.dof;
    fit.observations = design.rows();
    fit.groups = design.group_labels.size();

    const auto criterion = [&](double log_theta) {
        const double v = profile.at(std::exp(log_theta)).criterion;
        fit.trace.push_back({log_theta, v});
        return v;
    };

    // coarse scan brackets the minimum; Brent refines inside the bracket
    const auto steps = static_cast<std::size_t>(std::ceil((options.log_theta_max - options.log_theta_min) / kGridStep));
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> grid(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        grid[k] = std::min(options.log_theta_min + kGridStep * static_cast<double>(k), options.log_theta_max);
        const double v = criterion(grid[k]);
        if (v < best_value) {
            best_value = v;
            best = k;
        }
    }
    const double lo = grid[best == 0 ? 0 : best - 1];
    const double hi = grid[std::min(best + 1, steps)];
    std::uintmax_t iterations = options.max_iterations;
    const auto [x_min, f_min] = boost::math::tools::brent_find_minima(
        criterion, lo, hi, std::numeric_limits<double>::digits / 2, iterations);
    if (iterations >= options.max_iterations) {
        throw NumericError(kModule, "optimizer did not converge within " + std::to_string(options.max_iterations) +
                                        " iterations");
    }
    fit.iterations = static_cast<std::size_t>(iterations);

    double theta = std::exp(x_min);
    double value = f_min;
    if (best_value < value) {
        theta = std::exp(grid[best]);
        value = best_value;
    }
    const double at_zero = profile.at(0.0).criterion;
    fit.trace.push_back({-std::numeric_limits<double>::infinity(), at_zero});
    if (at_zero <= value) {
        theta = 0.0;
        fit.boundary = true;
    }

    const Profile::Eval e = profile.at(theta);
    const auto n = static_cast<double>(profile.n());
    const auto p = static_cast<double>(profile.p());
    fit.theta = theta;
    fit.criterion = e.criterion;
    fit.loglik = -0.5 * e.criterion;
    fit.sigma2 = e.rvr / (options.method == FitMethod::reml ? n - p : n);
    fit.sigma_b2 = theta * fit.sigma2;
    fit.beta = e.beta;
    fit.covariance = fit.sigma2 * e.a_inv;

    std::vector<double> df(design.cols(), n - p);
    if (options.dof == DofMethod::satterthwaite && !fit.boundary) df = satterthwaite_df(design, fit, options.method);

    for (std::size_t j = 0; j < design.cols(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        Coefficient c;
        c.name = design.columns[j];
        c.estimate = fit.beta(jj);
        c.se = std::sqrt(fit.covariance(jj, jj));
        c.t = c.estimate / c.se;
        c.df = df[j];
        c.p = stats::student_t_two_sided_p(c.t, c.df);
        fit.coefficients.push_back(std::move(c));
    }
    return fit;
}

}  // namespace dyadlss::lmm
