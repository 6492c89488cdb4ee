#include "epical/mcmc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "epical/errors.hpp"

namespace epical {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::VectorXd standard_normals(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    return z;
}

bool accept(double log_ratio, Rng& rng) {
    if (std::isnan(log_ratio)) return false;
    if (log_ratio >= 0.0) return true;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return std::log(unif(rng)) < log_ratio;
}

// log |p ln p|, the log-Jacobian of the map log(-log p) -> p.
double log_jacobian_loglog(double p) { return std::log(p) + std::log(-std::log(p)); }

// Random walk on log(-log p); returns nullopt when the proposal rounds onto the boundary.
std::optional<double> propose_loglog(double p, double step, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double eta = std::log(-std::log(p)) + step * normal(rng);
    const double next = std::exp(-std::exp(eta));
    if (!(next > 0.0 && next < 1.0)) return std::nullopt;
    return next;
}

void adapt_one(double& step, BlockCounter& counter, double target) {
    if (counter.window_proposed > 0) {
        const double rate = counter.window_rate();
        if (rate > target) {
            step *= std::exp(0.1);
        } else if (rate < target) {
            step *= std::exp(-0.1);
        }
    }
    counter.window_proposed = 0;
    counter.window_accepted = 0;
}

}  // namespace

void PriorConfig::validate() const {
    if (!(a > 0.0 && b > 0.0 && b_rho > 0.0 && b_phi > 0.0 && sigma2_1 > 0.0 && sigma2_2 > 0.0)) {
        throw ConfigError("prior shapes, rates and variances must be positive");
    }
}

void ChainConfig::validate() const {
    if (burn_in < 1 || samples < 1) throw ConfigError("burn_in and samples must be >= 1");
    if (thin < 1) throw ConfigError("thin must be >= 1");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("target_accept must lie in (0,1)");
    if (adapt_window < 1) throw ConfigError("adapt_window must be >= 1");
    if (!(initial_bg_step > 0.0 && initial_rho_step > 0.0 && initial_phi_step > 0.0)) {
        throw ConfigError("initial step sizes must be positive");
    }
    if (!(whitened_tau_step > 0.0 && whitened_corr_step > 0.0 && whitened_mu_step > 0.0)) {
        throw ConfigError("whitened step sizes must be positive");
    }
}

void BlockCounter::record(bool accepted_now) noexcept {
    ++proposed;
    ++window_proposed;
    if (accepted_now) {
        ++accepted;
        ++window_accepted;
    }
}

double BlockCounter::rate() const noexcept {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
}

double BlockCounter::window_rate() const noexcept {
    return window_proposed == 0 ? 0.0 : static_cast<double>(window_accepted) / static_cast<double>(window_proposed);
}

PosteriorTarget::PosteriorTarget(const ObservationSeries& data, MeanModel model, PriorConfig prior)
    : x_(data.x), model_(model), prior_(prior) {
    if (data.y.empty()) throw DimensionMismatch("no observations");
    if (static_cast<Eigen::Index>(data.y.size()) != data.x.rows()) {
        throw DimensionMismatch("counts and covariate rows differ in length");
    }
    prior_.validate();
    y_.reserve(data.y.size());
    for (const auto v : data.y) {
        if (v < 0) throw ParseError("negative count");
        y_.push_back(static_cast<double>(v));
    }
}

double PosteriorTarget::log_likelihood(const ParamPath& path) const {
    Rollout rollout;
    try {
        rollout = roll_forward(model_, path);
    } catch (const DegenerateState&) {
        return kNegInf;
    }
    double total = 0.0;
    for (std::size_t t = 0; t < y_.size(); ++t) {
        const double lambda = rollout.mean[t];
        if (!(lambda > 0.0) || !std::isfinite(lambda)) return kNegInf;
        total += y_[t] * std::log(lambda) - lambda;
    }
    return total;
}

double PosteriorTarget::log_gaussian(const ParamPath& path, const Hyperparams& psi, const CovStructure& cov) const {
    const CenteredLogits q = centered_logits(path, psi);
    const double quad = kronecker_quadratic(cov, psi.rho, q.beta, q.gamma);
    const auto n = static_cast<double>(path.size());
    return -n * std::log(psi.tau) - 0.5 * n * std::log1p(-psi.rho * psi.rho) - cov.log_det() - 0.5 * quad / psi.tau;
}

double PosteriorTarget::log_hyperprior(const Hyperparams& psi) const {
    double lp = -(prior_.a + 1.0) * std::log(psi.tau) - prior_.b / psi.tau;
    lp += (prior_.b_rho - 1.0) * std::log1p(-psi.rho);
    for (Eigen::Index j = 0; j < psi.phi.size(); ++j) lp += (prior_.b_phi - 1.0) * std::log1p(-psi.phi[j]);
    const double d1 = psi.mu1 - prior_.alpha1;
    const double d2 = psi.mu2 - prior_.alpha2;
    lp -= 0.5 * (d1 * d1 / prior_.sigma2_1 + d2 * d2 / prior_.sigma2_2);
    return lp;
}

double PosteriorTarget::log_posterior(const ParamPath& path, const Hyperparams& psi, const CovStructure& cov) const {
    const double ll = log_likelihood(path);
    if (ll == kNegInf) return kNegInf;
    return ll + log_gaussian(path, psi, cov) + log_hyperprior(psi);
}

double log_unnorm_posterior(const ParamPath& path, const Hyperparams& psi, const ObservationSeries& data,
                            const MeanModel& model, const PriorConfig& prior) {
    path.validate();
    psi.validate();
    const PosteriorTarget target(data, model, prior);
    if (static_cast<Eigen::Index>(path.size()) != target.size()) {
        throw DimensionMismatch("parameter path length differs from the number of observations");
    }
    try {
        const CovStructure cov = build_cov(target.design(), psi);
        return target.log_posterior(path, psi, cov);
    } catch (const FactorizationFailure&) {
        return kNegInf;
    }
}

void ChainState::refresh(const PosteriorTarget& target) {
    cov.emplace(build_cov(target.design(), psi));
    log_lik = target.log_likelihood(path);
}

ChainState initial_state(const PosteriorTarget& target, const ChainConfig& cfg, Rng& rng) {
    const Eigen::Index n = target.size();
    const Eigen::Index d = target.design().cols();
    ChainState state;
    std::normal_distribution<double> jitter(0.0, 0.01);
    state.path.beta.resize(static_cast<std::size_t>(n));
    state.path.gamma.resize(static_cast<std::size_t>(n));
    for (std::size_t t = 0; t < state.path.size(); ++t) state.path.beta[t] = inv_logit(jitter(rng));
    for (std::size_t t = 0; t < state.path.size(); ++t) state.path.gamma[t] = inv_logit(jitter(rng));
    state.psi.rho = cfg.independent_gp ? 0.0 : 0.5;
    state.psi.phi = Eigen::VectorXd::Constant(d, 0.9);
    state.psi.mu1 = 0.0;
    state.psi.mu2 = 0.0;
    state.psi.tau = 1.0;
    state.steps.bg = cfg.initial_bg_step;
    state.steps.rho = cfg.initial_rho_step;
    state.steps.phi.assign(static_cast<std::size_t>(d), cfg.initial_phi_step);
    state.phi.assign(static_cast<std::size_t>(d), BlockCounter{});
    state.refresh(target);
    if (state.log_lik == kNegInf) {
        throw SamplerFailure("initial parameter path gives a nonpositive or degenerate mean");
    }
    return state;
}

ParamPath propose_bg(const ChainState& state, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(state.path.size());
    const auto l = state.cov->llt().matrixL();
    const Eigen::VectorXd lz1 = l * standard_normals(n, rng);
    const Eigen::VectorXd lz2 = l * standard_normals(n, rng);
    const double scale = state.steps.bg * std::sqrt(state.psi.tau);
    const double rho = state.psi.rho;
    const double rho_c = std::sqrt(1.0 - rho * rho);
    ParamPath out;
    out.beta.resize(state.path.size());
    out.gamma.resize(state.path.size());
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto i = static_cast<std::size_t>(t);
        out.beta[i] = inv_logit(logit(state.path.beta[i]) + scale * lz1[t]);
        out.gamma[i] = inv_logit(logit(state.path.gamma[i]) + scale * (rho * lz1[t] + rho_c * lz2[t]));
    }
    return out;
}

void mh_update_bg(ChainState& state, const PosteriorTarget& target, Rng& rng) {
    ParamPath proposal = propose_bg(state, rng);
    bool valid = true;
    for (std::size_t t = 0; t < proposal.size() && valid; ++t) {
        valid = proposal.beta[t] > 0.0 && proposal.beta[t] < 1.0 && proposal.gamma[t] > 0.0 && proposal.gamma[t] < 1.0;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    bool accepted = false;
    double ll_new = kNegInf;
    if (valid) {
        ll_new = target.log_likelihood(proposal);
        if (ll_new != kNegInf) {
            const double delta = ll_new + target.log_gaussian(proposal, state.psi, *state.cov) - state.log_lik -
                                 target.log_gaussian(state.path, state.psi, *state.cov);
            accepted = !std::isnan(delta) && std::log(u) < delta;
        }
    }
    state.bg.record(accepted);
    if (accepted) {
        state.path = std::move(proposal);
        state.log_lik = ll_new;
    }
}

void mh_update_rho(ChainState& state, const PosteriorTarget& target, Rng& rng) {
    const auto proposal = propose_loglog(state.psi.rho, state.steps.rho, rng);
    bool accepted = false;
    if (proposal) {
        Hyperparams next = state.psi;
        next.rho = *proposal;
        const double delta = target.log_gaussian(state.path, next, *state.cov) + target.log_hyperprior(next) +
                             log_jacobian_loglog(next.rho) - target.log_gaussian(state.path, state.psi, *state.cov) -
                             target.log_hyperprior(state.psi) - log_jacobian_loglog(state.psi.rho);
        accepted = accept(delta, rng);
        if (accepted) state.psi = std::move(next);
    }
    state.rho.record(accepted);
}

void mh_update_phi(ChainState& state, Eigen::Index j, const PosteriorTarget& target, Rng& rng) {
    const auto idx = static_cast<std::size_t>(j);
    const auto proposal = propose_loglog(state.psi.phi[j], state.steps.phi[idx], rng);
    bool accepted = false;
    if (proposal) {
        Hyperparams next = state.psi;
        next.phi[j] = *proposal;
        std::optional<CovStructure> cov;
        try {
            cov.emplace(build_cov(target.design(), next));
        } catch (const FactorizationFailure&) {
        }
        if (cov) {
            const double delta = target.log_gaussian(state.path, next, *cov) + target.log_hyperprior(next) +
                                 log_jacobian_loglog(next.phi[j]) -
                                 target.log_gaussian(state.path, state.psi, *state.cov) -
                                 target.log_hyperprior(state.psi) - log_jacobian_loglog(state.psi.phi[j]);
            accepted = accept(delta, rng);
            if (accepted) {
                state.psi = std::move(next);
                state.cov = std::move(cov);
            }
        }
    }
    state.phi[idx].record(accepted);
}

bool whitened_update(ChainState& state, const Hyperparams& proposal, double log_proposal_ratio,
                     const PosteriorTarget& target, Rng& rng) {
    std::optional<CovStructure> cov;
    try {
        cov.emplace(build_cov(target.design(), proposal));
    } catch (const FactorizationFailure&) {
        return false;
    }
    const auto n = static_cast<Eigen::Index>(state.path.size());
    const CenteredLogits q = centered_logits(state.path, state.psi);
    Eigen::MatrixXd w(n, 2);
    w.col(0) = q.beta;
    w.col(1) = q.gamma;

    // Whiten under the current hyperparameters.
    w = state.cov->llt().matrixL().solve(w);
    const double rho = state.psi.rho;
    w.col(1) = (w.col(1) - rho * w.col(0)) / std::sqrt(1.0 - rho * rho);
    w /= std::sqrt(state.psi.tau);

    // Colour under the proposed ones.
    const double rho_next = proposal.rho;
    w.col(1) = rho_next * w.col(0) + std::sqrt(1.0 - rho_next * rho_next) * w.col(1);
    Eigen::MatrixXd coloured = cov->llt().matrixL() * w;
    coloured *= std::sqrt(proposal.tau);

    ParamPath next;
    next.beta.resize(state.path.size());
    next.gamma.resize(state.path.size());
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto i = static_cast<std::size_t>(t);
        next.beta[i] = inv_logit(proposal.mu1 + coloured(t, 0));
        next.gamma[i] = inv_logit(proposal.mu2 + coloured(t, 1));
        if (!(next.beta[i] > 0.0 && next.beta[i] < 1.0 && next.gamma[i] > 0.0 && next.gamma[i] < 1.0)) return false;
    }
    const double log_lik = target.log_likelihood(next);
    if (log_lik == kNegInf) return false;
    const double delta = log_lik - state.log_lik + target.log_hyperprior(proposal) - target.log_hyperprior(state.psi) +
                         log_proposal_ratio;
    if (!accept(delta, rng)) return false;
    state.path = std::move(next);
    state.psi = proposal;
    state.cov = std::move(cov);
    state.log_lik = log_lik;
    return true;
}

void whitened_sweep(ChainState& state, const PosteriorTarget& target, const ChainConfig& cfg, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    {
        Hyperparams next = state.psi;
        const double step = cfg.whitened_tau_step * normal(rng);
        next.tau *= std::exp(step);
        // log tau random walk: proposal density ratio tau'/tau.
        state.whitened.record(whitened_update(state, next, step, target, rng));
    }
    if (!cfg.independent_gp) {
        if (const auto rho = propose_loglog(state.psi.rho, cfg.whitened_corr_step, rng)) {
            Hyperparams next = state.psi;
            next.rho = *rho;
            const double jac = log_jacobian_loglog(*rho) - log_jacobian_loglog(state.psi.rho);
            state.whitened.record(whitened_update(state, next, jac, target, rng));
        }
    }
    for (Eigen::Index j = 0; j < state.psi.phi.size(); ++j) {
        if (const auto phi = propose_loglog(state.psi.phi[j], cfg.whitened_corr_step, rng)) {
            Hyperparams next = state.psi;
            next.phi[j] = *phi;
            const double jac = log_jacobian_loglog(*phi) - log_jacobian_loglog(state.psi.phi[j]);
            state.whitened.record(whitened_update(state, next, jac, target, rng));
        }
    }
    {
        Hyperparams next = state.psi;
        next.mu1 += cfg.whitened_mu_step * normal(rng);
        next.mu2 += cfg.whitened_mu_step * normal(rng);
        state.whitened.record(whitened_update(state, next, 0.0, target, rng));
    }
}

MuConditional mu_conditional(const ParamPath& path, const Hyperparams& psi, const CovStructure& cov,
                             const PriorConfig& prior) {
    const auto n = static_cast<Eigen::Index>(path.size());
    Eigen::VectorXd lb(n), lg(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        lb[t] = logit(path.beta[static_cast<std::size_t>(t)]);
        lg[t] = logit(path.gamma[static_cast<std::size_t>(t)]);
    }
    const double rho = psi.rho;
    Eigen::Matrix2d cross_inv;
    cross_inv << 1.0, -rho, -rho, 1.0;
    cross_inv /= (1.0 - rho * rho);

    Eigen::Matrix2d precision = (cov.ones_precision() / psi.tau) * cross_inv;
    precision(0, 0) += 1.0 / prior.sigma2_1;
    precision(1, 1) += 1.0 / prior.sigma2_2;

    Eigen::Vector2d projected(cov.precision_ones().dot(lb), cov.precision_ones().dot(lg));
    Eigen::Vector2d linear = cross_inv * projected / psi.tau;
    linear[0] += prior.alpha1 / prior.sigma2_1;
    linear[1] += prior.alpha2 / prior.sigma2_2;

    MuConditional out;
    out.cov = precision.inverse();
    out.mean = out.cov * linear;
    return out;
}

void update_mu(ChainState& state, const PriorConfig& prior, Rng& rng) {
    const MuConditional cond = mu_conditional(state.path, state.psi, *state.cov, prior);
    const Eigen::LLT<Eigen::Matrix2d> llt(cond.cov);
    if (llt.info() != Eigen::Success) throw FactorizationFailure("mu conditional covariance is not positive definite");
    const Eigen::Vector2d draw = cond.mean + llt.matrixL() * standard_normals(2, rng);
    state.psi.mu1 = draw[0];
    state.psi.mu2 = draw[1];
}

TauConditional tau_conditional(const ParamPath& path, const Hyperparams& psi, const CovStructure& cov,
                               const PriorConfig& prior) {
    const CenteredLogits q = centered_logits(path, psi);
    TauConditional out;
    out.shape = prior.a + static_cast<double>(path.size());
    out.rate = prior.b + 0.5 * kronecker_quadratic(cov, psi.rho, q.beta, q.gamma);
    return out;
}

void update_tau(ChainState& state, const PriorConfig& prior, Rng& rng) {
    const TauConditional cond = tau_conditional(state.path, state.psi, *state.cov, prior);
    std::gamma_distribution<double> gamma(cond.shape, 1.0);
    const double g = gamma(rng);
    const double tau = cond.rate / g;
    if (!(tau > 0.0) || !std::isfinite(tau)) throw SamplerFailure("tau draw is not finite");
    state.psi.tau = tau;
}

void adapt_step_sizes(ChainState& state, double target_accept) {
    adapt_one(state.steps.bg, state.bg, target_accept);
    adapt_one(state.steps.rho, state.rho, target_accept);
    for (std::size_t j = 0; j < state.phi.size(); ++j) adapt_one(state.steps.phi[j], state.phi[j], target_accept);
}

void gibbs_sweep(ChainState& state, const PosteriorTarget& target, const ChainConfig& cfg, Rng& rng) {
    mh_update_bg(state, target, rng);
    if (!cfg.independent_gp) mh_update_rho(state, target, rng);
    for (Eigen::Index j = 0; j < state.psi.phi.size(); ++j) mh_update_phi(state, j, target, rng);
    update_mu(state, target.prior(), rng);
    update_tau(state, target.prior(), rng);
    if (cfg.whitened_moves) whitened_sweep(state, target, cfg, rng);
}

ChainSamples run_chain(const ObservationSeries& data, const MeanModel& model, const PriorConfig& prior,
                       const ChainConfig& cfg) {
    cfg.validate();
    const PosteriorTarget target(data, model, prior);
    Rng rng(cfg.seed);
    ChainState state = initial_state(target, cfg, rng);

    ChainSamples out;
    out.draws.reserve(static_cast<std::size_t>(cfg.samples / cfg.thin));
    const int total = cfg.burn_in + cfg.samples;
    for (int it = 0; it < total; ++it) {
        try {
            gibbs_sweep(state, target, cfg, rng);
        } catch (const Error& e) {
            throw SamplerFailure("iteration " + std::to_string(it) + ": " + e.what());
        }
        if (it < cfg.burn_in) {
            if ((it + 1) % cfg.adapt_window == 0) adapt_step_sizes(state, cfg.target_accept);
            if (it + 1 == cfg.burn_in) {
                // Post-burn-in acceptance rates count sampling iterations only.
                state.bg = BlockCounter{};
                state.rho = BlockCounter{};
                for (auto& c : state.phi) c = BlockCounter{};
                state.whitened = BlockCounter{};
            }
        } else if ((it - cfg.burn_in + 1) % cfg.thin == 0) {
            out.draws.push_back(Draw{state.path, state.psi});
        }
    }
    out.acceptance.bg = state.bg.rate();
    out.acceptance.rho = cfg.independent_gp ? 0.0 : state.rho.rate();
    for (const auto& c : state.phi) out.acceptance.phi.push_back(c.rate());
    out.acceptance.whitened = cfg.whitened_moves ? state.whitened.rate() : 0.0;
    out.final_steps = state.steps;
    return out;
}

}  // namespace epical
