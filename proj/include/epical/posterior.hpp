#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "epical/mcmc.hpp"

namespace epical {

/// beta(x), gamma(x) and R0(x) = beta(x) / gamma(x) for one stored chain draw.
struct SurfaceDraw {
    double beta = 0.0;
    double gamma = 0.0;
    double r0 = 0.0;
};

/// For every stored draw, sample (beta(x), gamma(x)) from the GP conditional given
/// that draw's training values and hyperparameters. `x` is scaled like `x_train`.
std::vector<SurfaceDraw> r0_samples(std::span<const double> x, const ChainSamples& chain,
                                    const Eigen::MatrixXd& x_train, Rng& rng);

/// Posterior draws of the rate functions at each query row (draws x queries each).
struct RateSurfaces {
    Eigen::MatrixXd beta;
    Eigen::MatrixXd gamma;
};

/// Conditional samples at every query row. Rows of `xq` are sampled independently per draw.
RateSurfaces rate_samples(const Eigen::MatrixXd& xq, const ChainSamples& chain, const Eigen::MatrixXd& x_train,
                          Rng& rng);

/// inv_logit of the conditional means (no conditional noise).
RateSurfaces rate_conditional_means(const Eigen::MatrixXd& xq, const ChainSamples& chain,
                                    const Eigen::MatrixXd& x_train);

/// Posterior-predictive draws over a horizon of h days (draws x h each).
struct PredictiveDraws {
    Eigen::MatrixXd lambda;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> y;

    [[nodiscard]] Eigen::Index horizon() const noexcept { return lambda.cols(); }
};

/// Forecast the days after the training window. For each draw, (beta, gamma) at the
/// h future rows are drawn jointly from the GP conditional, the draw's own SIR
/// trajectory is extended day by day, and y ~ Poisson(lambda).
/// Throws NonpositiveMean if an extended trajectory degenerates.
PredictiveDraws predictive_samples(const Eigen::MatrixXd& x_future, const ChainSamples& chain,
                                   const Eigen::MatrixXd& x_train, const MeanModel& model, Rng& rng);

/// In-sample means lambda_t for each draw (draws x n).
Eigen::MatrixXd fitted_means(const ChainSamples& chain, const MeanModel& model);

struct Summary {
    double mean = 0.0;
    double median = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
};

/// Linear-interpolation empirical quantile (R type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

/// Mean, median and equal-tailed interval at `level`. Throws EmptyDraws.
Summary summarize(std::span<const double> draws, double level = 0.95);

}  // namespace epical
