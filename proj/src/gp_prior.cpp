#include "epical/gp_prior.hpp"

#include <cmath>
#include <string>

#include "epical/errors.hpp"

namespace epical {

void Hyperparams::validate() const {
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must lie in [0,1), got " + std::to_string(rho));
    for (Eigen::Index j = 0; j < phi.size(); ++j) {
        if (!(phi[j] > 0.0 && phi[j] < 1.0)) {
            throw DomainError("phi_" + std::to_string(j + 1) + " must lie in (0,1)");
        }
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
    if (!std::isfinite(mu1) || !std::isfinite(mu2)) throw DomainError("mu must be finite");
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("logit argument outside (0,1): " + std::to_string(p));
    return std::log(p) - std::log1p(-p);
}

double inv_logit(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double correlation(std::span<const double> x, std::span<const double> x2, std::span<const double> phi) {
    if (x.size() != x2.size() || x.size() != phi.size()) {
        throw DimensionMismatch("correlation: x, x2 and phi must share dimension");
    }
    double log_k = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - x2[j];
        log_k += 4.0 * diff * diff * std::log(phi[j]);
    }
    return std::exp(log_k);
}

Eigen::MatrixXd cross_correlation(const Eigen::MatrixXd& xq, const Eigen::MatrixXd& x, const Eigen::VectorXd& phi) {
    if (xq.cols() != x.cols() || x.cols() != phi.size()) {
        throw DimensionMismatch("cross_correlation: covariate dimension mismatch");
    }
    const Eigen::VectorXd theta = 4.0 * phi.array().log();
    Eigen::MatrixXd log_k = Eigen::MatrixXd::Zero(xq.rows(), x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            log_k.col(i).array() += theta[j] * (xq.col(j).array() - x(i, j)).square();
        }
    }
    return log_k.array().exp().matrix();
}

CovStructure::CovStructure(const Eigen::MatrixXd& x, const Eigen::VectorXd& phi) : x_(x), phi_(phi) {
    if (x.rows() < 1) throw DimensionMismatch("need at least one design row");
    corr_ = cross_correlation(x, x, phi);
    corr_ = 0.5 * (corr_ + corr_.transpose());
    corr_.diagonal().array() += kNugget;
    llt_.compute(corr_);
    if (llt_.info() != Eigen::Success) {
        throw FactorizationFailure("correlation matrix is not positive definite after nugget");
    }
    const auto diag = llt_.matrixLLT().diagonal();
    if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
        throw FactorizationFailure("degenerate Cholesky factor");
    }
    log_det_ = 2.0 * diag.array().log().sum();
    precision_ones_ = llt_.solve(Eigen::VectorXd::Ones(x.rows()));
    ones_precision_ = precision_ones_.sum();
}

double CovStructure::inner(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const {
    const auto l = llt_.matrixL();
    const Eigen::VectorXd lv = l.solve(v);
    if (&v == &w) return lv.squaredNorm();
    const Eigen::VectorXd lw = l.solve(w);
    return lv.dot(lw);
}

CovStructure build_cov(const Eigen::MatrixXd& x, const Hyperparams& psi) {
    if (x.cols() != psi.phi.size()) throw DimensionMismatch("design and phi dimensions differ");
    return CovStructure(x, psi.phi);
}

double kronecker_quadratic(const CovStructure& cov, double rho, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    const auto l = cov.llt().matrixL();
    const Eigen::VectorXd wu = l.solve(u);
    const Eigen::VectorXd wv = l.solve(v);
    const double uu = wu.squaredNorm();
    const double vv = wv.squaredNorm();
    const double uv = wu.dot(wv);
    return (uu - 2.0 * rho * uv + vv) / (1.0 - rho * rho);
}

CenteredLogits centered_logits(const ParamPath& path, const Hyperparams& psi) {
    const auto n = static_cast<Eigen::Index>(path.size());
    CenteredLogits out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Eigen::Index t = 0; t < n; ++t) {
        out.beta[t] = logit(path.beta[t]) - psi.mu1;
        out.gamma[t] = logit(path.gamma[t]) - psi.mu2;
    }
    return out;
}

namespace {

Eigen::Matrix2d cross_block(double rho) {
    Eigen::Matrix2d r;
    r << 1.0, rho, rho, 1.0;
    return r;
}

}  // namespace

LatentField::LatentField(const CovStructure& cov, const ParamPath& path, const Hyperparams& psi)
    : cov_(cov), psi_(psi), weights_(cov.size(), 2) {
    if (static_cast<Eigen::Index>(path.size()) != cov.size()) {
        throw DimensionMismatch("parameter path length differs from design size");
    }
    const CenteredLogits q = centered_logits(path, psi);
    weights_.col(0) = cov.solve(q.beta);
    weights_.col(1) = cov.solve(q.gamma);
}

BivariateNormal LatentField::at(std::span<const double> x_star) const {
    if (static_cast<Eigen::Index>(x_star.size()) != cov_.design().cols()) {
        throw DimensionMismatch("query covariate dimension differs from design");
    }
    const Eigen::MatrixXd xq = Eigen::Map<const Eigen::RowVectorXd>(x_star.data(), static_cast<Eigen::Index>(x_star.size()));
    const Eigen::VectorXd k = cross_correlation(xq, cov_.design(), psi_.phi).transpose();
    BivariateNormal out;
    out.mean << psi_.mu1 + k.dot(weights_.col(0)), psi_.mu2 + k.dot(weights_.col(1));
    const double explained = cov_.inner(k, k);
    out.variance_factor = std::max(0.0, 1.0 - explained);
    out.cov = psi_.tau * out.variance_factor * cross_block(psi_.rho);
    return out;
}

Eigen::MatrixXd LatentField::mean_at(const Eigen::MatrixXd& xq) const {
    Eigen::MatrixXd out = cross_correlation(xq, cov_.design(), psi_.phi) * weights_;
    out.col(0).array() += psi_.mu1;
    out.col(1).array() += psi_.mu2;
    return out;
}

JointConditional LatentField::joint_at(const Eigen::MatrixXd& xq) const {
    const Eigen::MatrixXd kq = cross_correlation(xq, cov_.design(), psi_.phi);  // q x n
    JointConditional out;
    out.mean = kq * weights_;
    out.mean.col(0).array() += psi_.mu1;
    out.mean.col(1).array() += psi_.mu2;
    const Eigen::MatrixXd half = cov_.llt().matrixL().solve(kq.transpose());  // n x q
    out.corr = cross_correlation(xq, xq, psi_.phi) - half.transpose() * half;
    out.corr = 0.5 * (out.corr + out.corr.transpose());
    return out;
}

BivariateNormal conditional_bg(std::span<const double> x_star, const ParamPath& path, const Hyperparams& psi,
                               const CovStructure& cov) {
    return LatentField(cov, path, psi).at(x_star);
}

}  // namespace epical
