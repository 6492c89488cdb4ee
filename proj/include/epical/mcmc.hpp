#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "epical/gp_prior.hpp"
#include "epical/series.hpp"
#include "epical/sir.hpp"

namespace epical {

using Rng = std::mt19937_64;

/// Hyperprior settings: tau ~ InvGamma(a, b) (shape, rate), rho ~ Beta(1, b_rho),
/// phi_j ~ Beta(1, b_phi), mu_j ~ N(alpha_j, sigma2_j).
struct PriorConfig {
    double a = 0.01;
    double b = 0.01;
    double b_rho = 0.1;
    double b_phi = 0.1;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double sigma2_1 = 1.0;
    double sigma2_2 = 1.0;

    void validate() const;
};

struct ChainConfig {
    int burn_in = 2000;
    int samples = 2000;
    int thin = 2;
    std::uint64_t seed = 1;
    bool independent_gp = false;
    double target_accept = 0.30;
    int adapt_window = 100;
    double initial_bg_step = 0.1;
    double initial_rho_step = 0.5;
    double initial_phi_step = 0.5;
    /// Extra hyperparameter moves that hold the whitened field fixed.
    bool whitened_moves = true;
    double whitened_tau_step = 1.0;   // sd on log tau
    double whitened_corr_step = 0.5;  // sd on log(-log p) for rho and phi_j
    double whitened_mu_step = 0.3;

    void validate() const;
};

/// Acceptance bookkeeping for one MH block; the window resets at each adaptation.
struct BlockCounter {
    long proposed = 0;
    long accepted = 0;
    long window_proposed = 0;
    long window_accepted = 0;

    void record(bool accept) noexcept;
    [[nodiscard]] double rate() const noexcept;
    [[nodiscard]] double window_rate() const noexcept;
};

struct StepSizes {
    double bg = 0.1;
    double rho = 0.5;
    std::vector<double> phi;
};

/// Unnormalized log posterior of (beta, gamma, psi) for a fixed data set.
///
/// Poisson log-likelihood (without log y!), the 2n-dimensional Gaussian on
/// (logit beta, logit gamma) with Kronecker covariance tau * ([1 rho; rho 1] (x) K)
/// (without the 2 pi term), and log-densities of the hyperpriors up to their
/// normalizing constants.
class PosteriorTarget {
public:
    PosteriorTarget(const ObservationSeries& data, MeanModel model, PriorConfig prior);

    /// -inf when the path produces a nonpositive mean or leaves the SIR feasible region.
    [[nodiscard]] double log_likelihood(const ParamPath& path) const;
    [[nodiscard]] double log_gaussian(const ParamPath& path, const Hyperparams& psi, const CovStructure& cov) const;
    [[nodiscard]] double log_hyperprior(const Hyperparams& psi) const;
    [[nodiscard]] double log_posterior(const ParamPath& path, const Hyperparams& psi, const CovStructure& cov) const;

    [[nodiscard]] const Eigen::MatrixXd& design() const noexcept { return x_; }
    [[nodiscard]] const std::vector<double>& counts() const noexcept { return y_; }
    [[nodiscard]] const MeanModel& model() const noexcept { return model_; }
    [[nodiscard]] const PriorConfig& prior() const noexcept { return prior_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return x_.rows(); }

private:
    Eigen::MatrixXd x_;
    std::vector<double> y_;
    MeanModel model_;
    PriorConfig prior_;
};

/// Free-standing evaluation; returns -inf on NonpositiveMean or FactorizationFailure.
double log_unnorm_posterior(const ParamPath& path, const Hyperparams& psi, const ObservationSeries& data,
                            const MeanModel& model, const PriorConfig& prior);

/// Markov-chain state plus cached quantities for the current hyperparameters.
struct ChainState {
    ParamPath path;
    Hyperparams psi;
    StepSizes steps;
    BlockCounter bg;
    BlockCounter rho;
    std::vector<BlockCounter> phi;
    BlockCounter whitened;

    std::optional<CovStructure> cov;  // K for psi.phi
    double log_lik = 0.0;             // Poisson term for path

    /// Recompute the cached covariance and likelihood.
    void refresh(const PosteriorTarget& target);
};

/// Initial state: rates at inv_logit(N(0, 0.01^2)), mu = 0, tau = 1, rho = 0.5 (0 if independent), phi = 0.9.
ChainState initial_state(const PosteriorTarget& target, const ChainConfig& cfg, Rng& rng);

/// (logit beta', logit gamma') = c sqrt(tau) ([1 rho; rho 1]^{1/2} (x) L) Z + (logit beta, logit gamma).
ParamPath propose_bg(const ChainState& state, Rng& rng);

void mh_update_bg(ChainState& state, const PosteriorTarget& target, Rng& rng);
/// Random walk on log(-log rho) with the Jacobian |rho' ln rho'| / |rho ln rho|.
void mh_update_rho(ChainState& state, const PosteriorTarget& target, Rng& rng);
void mh_update_phi(ChainState& state, Eigen::Index j, const PosteriorTarget& target, Rng& rng);

/// Metropolis move to `proposal` that keeps the whitened field
/// Z = tau^{-1/2} L^{-1} (W - 1 mu') C^{-T} fixed, where K = L L' and [1 rho; rho 1] = C C'.
/// The Gaussian density and the Jacobian of the map cancel, so the ratio is
/// likelihood x hyperprior x `log_proposal_ratio`. Returns whether it was accepted.
bool whitened_update(ChainState& state, const Hyperparams& proposal, double log_proposal_ratio,
                     const PosteriorTarget& target, Rng& rng);

/// Whitened moves on tau, rho (unless independent), each phi_j and (mu1, mu2).
void whitened_sweep(ChainState& state, const PosteriorTarget& target, const ChainConfig& cfg, Rng& rng);

/// Conjugate bivariate normal law of (mu1, mu2) given everything else.
struct MuConditional {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
};
MuConditional mu_conditional(const ParamPath& path, const Hyperparams& psi, const CovStructure& cov,
                             const PriorConfig& prior);
void update_mu(ChainState& state, const PriorConfig& prior, Rng& rng);

/// Conjugate InvGamma(shape, rate) law of tau given everything else.
struct TauConditional {
    double shape = 0.0;
    double rate = 0.0;
};
TauConditional tau_conditional(const ParamPath& path, const Hyperparams& psi, const CovStructure& cov,
                               const PriorConfig& prior);
void update_tau(ChainState& state, const PriorConfig& prior, Rng& rng);

/// Multiply each block's step size by exp(+-0.1) toward the target acceptance rate
/// and clear the window counters. Only called during burn-in.
void adapt_step_sizes(ChainState& state, double target_accept);

struct Draw {
    ParamPath path;
    Hyperparams psi;
};

struct AcceptanceSummary {
    double bg = 0.0;
    double rho = 0.0;  // 0 when rho is not sampled
    std::vector<double> phi;
    double whitened = 0.0;  // 0 when whitened moves are off
};

struct ChainSamples {
    std::vector<Draw> draws;
    AcceptanceSummary acceptance;
    StepSizes final_steps;

    [[nodiscard]] std::size_t size() const noexcept { return draws.size(); }
    [[nodiscard]] std::size_t days() const noexcept { return draws.empty() ? 0 : draws.front().path.size(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return draws.empty() ? 0 : draws.front().psi.dim(); }
};

/// One full Gibbs sweep: (beta, gamma) -> rho -> each phi_j -> (mu1, mu2) -> tau,
/// followed by whitened_sweep when enabled.
void gibbs_sweep(ChainState& state, const PosteriorTarget& target, const ChainConfig& cfg, Rng& rng);

/// Burn-in with adaptation, then `samples` iterations keeping every `thin`-th.
/// `data.x` must already be scaled. Deterministic given cfg.seed.
ChainSamples run_chain(const ObservationSeries& data, const MeanModel& model, const PriorConfig& prior,
                       const ChainConfig& cfg);

}  // namespace epical
