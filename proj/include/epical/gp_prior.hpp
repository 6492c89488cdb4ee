#pragma once

#include <Eigen/Dense>
#include <span>

#include "epical/sir.hpp"

namespace epical {

/// Diagonal jitter added to every correlation matrix.
inline constexpr double kNugget = 1e-8;

/// GP hyperparameters (rho, phi_1..phi_d, mu1, mu2, tau).
/// rho = 0 encodes two independent GPs.
struct Hyperparams {
    double rho = 0.5;
    Eigen::VectorXd phi;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double tau = 1.0;

    [[nodiscard]] Eigen::Index dim() const noexcept { return phi.size(); }
    void validate() const;
};

/// Log-odds ln(p / (1 - p)); throws DomainError outside (0,1).
double logit(double p);
double inv_logit(double z) noexcept;

/// prod_j phi_j^{4 (x_j - x2_j)^2}
double correlation(std::span<const double> x, std::span<const double> x2, std::span<const double> phi);

/// Cross-correlation rows: result(q, i) = K(xq_q, x_i). Rows of `xq` and `x` are points.
Eigen::MatrixXd cross_correlation(const Eigen::MatrixXd& xq, const Eigen::MatrixXd& x, const Eigen::VectorXd& phi);

/// Correlation matrix K_phi over the rows of `x` plus kNugget on the diagonal,
/// with its Cholesky factor and log-determinant. The 2n x 2n prior covariance
/// tau * ([1 rho; rho 1] (x) K) is kept implicit.
class CovStructure {
public:
    CovStructure(const Eigen::MatrixXd& x, const Eigen::VectorXd& phi);

    [[nodiscard]] const Eigen::MatrixXd& corr() const noexcept { return corr_; }
    [[nodiscard]] Eigen::MatrixXd factor() const { return llt_.matrixL(); }
    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& llt() const noexcept { return llt_; }
    [[nodiscard]] double log_det() const noexcept { return log_det_; }
    [[nodiscard]] const Eigen::MatrixXd& design() const noexcept { return x_; }
    [[nodiscard]] const Eigen::VectorXd& phi() const noexcept { return phi_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return x_.rows(); }

    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
    /// v' K^{-1} w
    [[nodiscard]] double inner(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;
    /// 1' K^{-1} 1
    [[nodiscard]] double ones_precision() const noexcept { return ones_precision_; }
    [[nodiscard]] const Eigen::VectorXd& precision_ones() const noexcept { return precision_ones_; }

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd phi_;
    Eigen::MatrixXd corr_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double log_det_ = 0.0;
    Eigen::VectorXd precision_ones_;
    double ones_precision_ = 0.0;
};

/// Throws FactorizationFailure if K is not numerically positive definite.
CovStructure build_cov(const Eigen::MatrixXd& x, const Hyperparams& psi);

/// Quadratic form q' ([1 rho; rho 1]^{-1} (x) K^{-1}) q for q = (u; v).
double kronecker_quadratic(const CovStructure& cov, double rho, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct BivariateNormal {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
    /// 1 - k' K^{-1} k, clamped at zero.
    double variance_factor = 0.0;
};

/// Centered logits (logit beta - mu1, logit gamma - mu2).
struct CenteredLogits {
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;
};
CenteredLogits centered_logits(const ParamPath& path, const Hyperparams& psi);

/// Conditional law of (logit beta(x*), logit gamma(x*)) given the training values.
BivariateNormal conditional_bg(std::span<const double> x_star, const ParamPath& path, const Hyperparams& psi,
                               const CovStructure& cov);

/// Joint conditional of logit beta and logit gamma at several query rows.
struct JointConditional {
    Eigen::MatrixXd mean;  // q x 2
    Eigen::MatrixXd corr;  // q x q; the joint covariance is tau * [1 rho; rho 1] (x) corr
};

/// The latent logit-rate field for one posterior draw: caches K^{-1} (logit - mu).
class LatentField {
public:
    LatentField(const CovStructure& cov, const ParamPath& path, const Hyperparams& psi);

    [[nodiscard]] BivariateNormal at(std::span<const double> x_star) const;
    /// Conditional means at each query row (q x 2), without variances.
    [[nodiscard]] Eigen::MatrixXd mean_at(const Eigen::MatrixXd& xq) const;
    [[nodiscard]] JointConditional joint_at(const Eigen::MatrixXd& xq) const;
    [[nodiscard]] const Hyperparams& hyperparams() const noexcept { return psi_; }

private:
    CovStructure cov_;
    Hyperparams psi_;
    Eigen::MatrixXd weights_;  // n x 2
};

}  // namespace epical
