#include "epical/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "epical/errors.hpp"

namespace epical {

namespace {

void require_draws(const ChainSamples& chain) {
    if (chain.draws.empty()) throw EmptyDraws("chain has no stored draws");
}

void require_dims(const ChainSamples& chain, const Eigen::MatrixXd& x_train, Eigen::Index query_cols) {
    if (static_cast<Eigen::Index>(chain.days()) != x_train.rows()) {
        throw DimensionMismatch("chain path length " + std::to_string(chain.days()) + " differs from " +
                                std::to_string(x_train.rows()) + " training rows");
    }
    if (chain.dim() != x_train.cols() || query_cols != x_train.cols()) {
        throw DimensionMismatch("covariate dimension differs between chain, training design and query");
    }
}

// Symmetric square root of a PSD matrix, negative eigenvalues clipped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw FactorizationFailure("eigendecomposition failed");
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

RateSurfaces rate_samples(const Eigen::MatrixXd& xq, const ChainSamples& chain, const Eigen::MatrixXd& x_train,
                          Rng& rng) {
    require_draws(chain);
    require_dims(chain, x_train, xq.cols());
    const auto draws = static_cast<Eigen::Index>(chain.size());
    RateSurfaces out{Eigen::MatrixXd(draws, xq.rows()), Eigen::MatrixXd(draws, xq.rows())};
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index k = 0; k < draws; ++k) {
        const Draw& draw = chain.draws[static_cast<std::size_t>(k)];
        const LatentField field(build_cov(x_train, draw.psi), draw.path, draw.psi);
        for (Eigen::Index q = 0; q < xq.rows(); ++q) {
            const Eigen::RowVectorXd row = xq.row(q);
            const BivariateNormal bn = field.at(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
            const double sd = std::sqrt(draw.psi.tau * bn.variance_factor);
            const double rho = draw.psi.rho;
            const double z1 = normal(rng);
            const double z2 = normal(rng);
            out.beta(k, q) = inv_logit(bn.mean[0] + sd * z1);
            out.gamma(k, q) = inv_logit(bn.mean[1] + sd * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2));
        }
    }
    return out;
}

std::vector<SurfaceDraw> r0_samples(std::span<const double> x, const ChainSamples& chain,
                                    const Eigen::MatrixXd& x_train, Rng& rng) {
    const Eigen::MatrixXd xq = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    const RateSurfaces rates = rate_samples(xq, chain, x_train, rng);
    std::vector<SurfaceDraw> out(chain.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        out[k].beta = rates.beta(kk, 0);
        out[k].gamma = rates.gamma(kk, 0);
        out[k].r0 = out[k].beta / out[k].gamma;
    }
    return out;
}

RateSurfaces rate_conditional_means(const Eigen::MatrixXd& xq, const ChainSamples& chain,
                                    const Eigen::MatrixXd& x_train) {
    require_draws(chain);
    require_dims(chain, x_train, xq.cols());
    const auto draws = static_cast<Eigen::Index>(chain.size());
    RateSurfaces out{Eigen::MatrixXd(draws, xq.rows()), Eigen::MatrixXd(draws, xq.rows())};
    for (Eigen::Index k = 0; k < draws; ++k) {
        const Draw& draw = chain.draws[static_cast<std::size_t>(k)];
        const LatentField field(build_cov(x_train, draw.psi), draw.path, draw.psi);
        const Eigen::MatrixXd means = field.mean_at(xq);
        for (Eigen::Index q = 0; q < xq.rows(); ++q) {
            out.beta(k, q) = inv_logit(means(q, 0));
            out.gamma(k, q) = inv_logit(means(q, 1));
        }
    }
    return out;
}

PredictiveDraws predictive_samples(const Eigen::MatrixXd& x_future, const ChainSamples& chain,
                                   const Eigen::MatrixXd& x_train, const MeanModel& model, Rng& rng) {
    require_draws(chain);
    require_dims(chain, x_train, x_future.cols());
    const Eigen::Index h = x_future.rows();
    if (h < 1) throw HorizonMismatch("forecast horizon must be at least one day");
    const auto draws = static_cast<Eigen::Index>(chain.size());
    PredictiveDraws out;
    out.lambda.resize(draws, h);
    out.y.resize(draws, h);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (Eigen::Index k = 0; k < draws; ++k) {
        const Draw& draw = chain.draws[static_cast<std::size_t>(k)];
        const Rollout history = roll_forward(model, draw.path);
        const LatentField field(build_cov(x_train, draw.psi), draw.path, draw.psi);
        const JointConditional joint = field.joint_at(x_future);
        const Eigen::MatrixXd root = psd_sqrt(joint.corr);

        Eigen::VectorXd z1(h), z2(h);
        for (Eigen::Index t = 0; t < h; ++t) z1[t] = normal(rng);
        for (Eigen::Index t = 0; t < h; ++t) z2[t] = normal(rng);
        const double scale = std::sqrt(draw.psi.tau);
        const double rho = draw.psi.rho;
        const Eigen::VectorXd e1 = root * z1;
        const Eigen::VectorXd e2 = root * z2;

        ParamPath future;
        future.beta.resize(static_cast<std::size_t>(h));
        future.gamma.resize(static_cast<std::size_t>(h));
        for (Eigen::Index t = 0; t < h; ++t) {
            const auto i = static_cast<std::size_t>(t);
            future.beta[i] = inv_logit(joint.mean(t, 0) + scale * e1[t]);
            future.gamma[i] = inv_logit(joint.mean(t, 1) + scale * (rho * e1[t] + std::sqrt(1.0 - rho * rho) * e2[t]));
        }
        const MeanModel ahead = continued(model, history, draw.path.size());
        const Rollout forecast = roll_forward(ahead, future);
        for (Eigen::Index t = 0; t < h; ++t) {
            const double lambda = forecast.mean[static_cast<std::size_t>(t)];
            if (!(lambda > 0.0) || !std::isfinite(lambda)) {
                throw NonpositiveMean("forecast mean at horizon day " + std::to_string(t + 1) + " of draw " +
                                      std::to_string(k) + " is " + std::to_string(lambda));
            }
            out.lambda(k, t) = lambda;
            std::poisson_distribution<std::int64_t> poisson(lambda);
            out.y(k, t) = poisson(rng);
        }
    }
    return out;
}

Eigen::MatrixXd fitted_means(const ChainSamples& chain, const MeanModel& model) {
    require_draws(chain);
    const auto draws = static_cast<Eigen::Index>(chain.size());
    Eigen::MatrixXd out(draws, static_cast<Eigen::Index>(chain.days()));
    for (Eigen::Index k = 0; k < draws; ++k) {
        const Rollout r = roll_forward(model, chain.draws[static_cast<std::size_t>(k)].path);
        for (Eigen::Index t = 0; t < out.cols(); ++t) out(k, t) = r.mean[static_cast<std::size_t>(t)];
    }
    return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw EmptyDraws("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> draws, double level) {
    if (draws.empty()) throw EmptyDraws("cannot summarize an empty set of draws");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible level must lie in (0,1)");
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    Summary s;
    s.level = level;
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    s.median = quantile_sorted(sorted, 0.5);
    s.lo = quantile_sorted(sorted, 0.5 * (1.0 - level));
    s.hi = quantile_sorted(sorted, 1.0 - 0.5 * (1.0 - level));
    return s;
}

}  // namespace epical
