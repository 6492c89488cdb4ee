#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "epical/mcmc.hpp"

namespace epical {

/// Vectorized scalar function: one output per row of the input matrix.
using BatchFunction = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Product-form input distribution F = F_1 x ... x F_d. Each marginal either
/// resamples an observed column or is uniform over [lo_j, hi_j].
class FactorDistribution {
public:
    enum class Kind { Empirical, Uniform };

    static FactorDistribution empirical(const Eigen::MatrixXd& observed);
    static FactorDistribution uniform(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return lo_.size(); }
    [[nodiscard]] double lower(Eigen::Index j) const { return lo_[j]; }
    [[nodiscard]] double upper(Eigen::Index j) const { return hi_[j]; }

    /// Independent draws per coordinate (rows x d).
    [[nodiscard]] Eigen::MatrixXd sample(Eigen::Index rows, Rng& rng) const;

    /// Evaluation grid for coordinate j: the sorted support when an empirical
    /// marginal has at most `size` distinct values, otherwise `size` equispaced points.
    [[nodiscard]] std::vector<double> grid(Eigen::Index j, std::size_t size) const;

private:
    Kind kind_ = Kind::Uniform;
    std::vector<std::vector<double>> columns_;
    Eigen::VectorXd lo_;
    Eigen::VectorXd hi_;
};

/// Two independent M x d sample matrices from F, shared across posterior draws.
struct IntegrationDesign {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;

    [[nodiscard]] Eigen::Index size() const noexcept { return a.rows(); }
};

IntegrationDesign make_design(const FactorDistribution& dist, Eigen::Index samples, std::uint64_t seed);

struct IndexEstimate {
    double raw = 0.0;    // before clipping
    double value = 0.0;  // clipped to [0, 1]
};

/// Monte-Carlo functional ANOVA of one function over a fixed design.
///
/// First-order and closed second-order variances use the pick-freeze estimator
/// V_u = mean(f(B) (f(A_B^u) - f(A))), where A_B^u is A with the columns in u taken from B.
class AnovaEstimator {
public:
    AnovaEstimator(BatchFunction g, const IntegrationDesign& design);

    [[nodiscard]] double overall_mean() const noexcept { return m0_; }
    [[nodiscard]] double variance() const noexcept { return variance_; }
    /// Standard error of overall_mean().
    [[nodiscard]] double mean_standard_error() const noexcept;

    [[nodiscard]] std::vector<double> main_effect(Eigen::Index j, const std::vector<double>& grid) const;
    [[nodiscard]] Eigen::MatrixXd interaction_effect(Eigen::Index j, Eigen::Index k, const std::vector<double>& grid_j,
                                                     const std::vector<double>& grid_k) const;

    /// Throws ZeroVariance when g is constant under F.
    [[nodiscard]] IndexEstimate main_index(Eigen::Index j);
    [[nodiscard]] IndexEstimate interaction_index(Eigen::Index j, Eigen::Index k);

private:
    double first_order_variance(Eigen::Index j);
    void require_variance() const;

    BatchFunction g_;
    const IntegrationDesign* design_;
    Eigen::VectorXd fa_;
    Eigen::VectorXd fb_;
    double m0_ = 0.0;
    double variance_ = 0.0;
    std::map<Eigen::Index, double> first_order_;
};

double overall_mean(const BatchFunction& g, const IntegrationDesign& design);
std::vector<double> main_effect(const BatchFunction& g, const IntegrationDesign& design, Eigen::Index j,
                                const std::vector<double>& grid);
IndexEstimate main_effect_index(const BatchFunction& g, const IntegrationDesign& design, Eigen::Index j);
Eigen::MatrixXd interaction_effect(const BatchFunction& g, const IntegrationDesign& design, Eigen::Index j,
                                   Eigen::Index k, const std::vector<double>& grid_j, const std::vector<double>& grid_k);
IndexEstimate interaction_index(const BatchFunction& g, const IntegrationDesign& design, Eigen::Index j,
                                Eigen::Index k);

struct SensitivityOptions {
    Eigen::Index samples = 2000;
    std::size_t grid_size = 25;
    std::size_t interaction_grid_size = 15;
    /// Pairs to analyse; empty means every pair.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    bool interaction_surfaces = false;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

struct FactorEffect {
    Eigen::Index factor = 0;
    std::vector<double> grid;
    Eigen::MatrixXd curves;  // draws x grid
    std::vector<double> index;
    std::vector<double> raw_index;
};

struct PairEffect {
    Eigen::Index j = 0;
    Eigen::Index k = 0;
    std::vector<double> index;
    std::vector<double> raw_index;
    std::vector<double> grid_j;
    std::vector<double> grid_k;
    std::vector<Eigen::MatrixXd> surfaces;  // per draw when requested
};

/// Posterior distributions of the functional-ANOVA quantities of R0(x).
struct SensitivityReport {
    std::vector<double> m0;
    std::vector<double> variance;
    std::vector<FactorEffect> main;
    std::vector<PairEffect> pairs;
};

/// R0 surface of one draw: ratio of inverse-logit GP conditional means.
BatchFunction r0_mean_surface(const Draw& draw, const Eigen::MatrixXd& x_train);

/// Per-draw ANOVA of x -> R0(x) with common integration points across draws.
/// `dist` and `x_train` live on the same (scaled) covariate scale.
SensitivityReport posterior_sensitivity(const ChainSamples& chain, const Eigen::MatrixXd& x_train,
                                        const FactorDistribution& dist, const SensitivityOptions& options);

}  // namespace epical
