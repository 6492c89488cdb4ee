// Acceptance checks, one line per criterion. Usage: acceptance [criterion...]

#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "epical/chain_io.hpp"
#include "epical/cli.hpp"
#include "epical/data_io.hpp"
#include "epical/errors.hpp"
#include "epical/gp_prior.hpp"
#include "epical/mcmc.hpp"
#include "epical/posterior.hpp"
#include "epical/sensitivity.hpp"
#include "epical/sir.hpp"

using namespace epical;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

// ---------------------------------------------------------------- benchmark study

MeanModel benchmark_model() {
    MeanModel m;
    m.kind = MeanKind::Test;
    m.first_day = 1.0;
    return m;
}

const ChainSamples& benchmark_chain(std::uint64_t seed, bool independent) {
    static std::map<std::pair<std::uint64_t, bool>, ChainSamples> cache;
    const auto key = std::make_pair(seed, independent);
    auto it = cache.find(key);
    if (it == cache.end()) {
        ChainConfig cfg;  // burn-in 2000, 2000 samples
        cfg.seed = seed;
        cfg.independent_gp = independent;
        const SyntheticStudy study = make_synthetic(seed);
        it = cache.emplace(key, run_chain(study.train, benchmark_model(), PriorConfig{}, cfg)).first;
    }
    return it->second;
}

Outcome recovery() {
    Eigen::MatrixXd grid(50, 1);
    for (int q = 0; q < 50; ++q) grid(q, 0) = 0.05 + 0.9 * q / 49.0;
    double beta_total = 0.0, gamma_total = 0.0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SyntheticStudy study = make_synthetic(seed);
        const RateSurfaces r = rate_conditional_means(grid, benchmark_chain(seed, false), study.train.x);
        double eb = 0.0, eg = 0.0;
        for (int q = 0; q < 50; ++q) {
            eb += std::pow(r.beta.col(q).mean() - SyntheticStudy::beta_true(grid(q, 0)), 2);
            eg += std::pow(r.gamma.col(q).mean() - SyntheticStudy::gamma_true(grid(q, 0)), 2);
        }
        beta_total += std::sqrt(eb / 50);
        gamma_total += std::sqrt(eg / 50);
        per_seed += fmt(" %.3f/%.3f", std::sqrt(eb / 50), std::sqrt(eg / 50));
    }
    const double beta_rmse = beta_total / 5, gamma_rmse = gamma_total / 5;
    return {beta_rmse < 0.10 && gamma_rmse < 0.15,
            fmt("mean grid RMSE beta %.4f (need < 0.10), gamma %.4f (need < 0.15); per seed beta/gamma:", beta_rmse,
                gamma_rmse) +
                per_seed};
}

double predictive_rmse(std::uint64_t seed, bool independent) {
    const SyntheticStudy study = make_synthetic(seed);
    Rng rng(seed);
    const PredictiveDraws pred =
        predictive_samples(study.test.x, benchmark_chain(seed, independent), study.train.x,
                           benchmark_model(), rng);
    double e = 0.0;
    for (Eigen::Index t = 0; t < pred.horizon(); ++t) {
        const double truth = SyntheticStudy::mean_true(static_cast<double>(study.test.day_numbers[static_cast<std::size_t>(t)]),
                                                       study.test.x(t, 0));
        e += std::pow(pred.lambda.col(t).mean() - truth, 2);
    }
    return std::sqrt(e / static_cast<double>(pred.horizon()));
}

Outcome joint_vs_independent() {
    int wins = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const double joint = predictive_rmse(seed, false);
        const double indep = predictive_rmse(seed, true);
        wins += joint <= indep;
        per_seed += fmt(" %.2f/%.2f", joint, indep);
    }
    return {wins >= 7, fmt("joint <= independent in %.0f/10 seeds (need >= 7); joint/independent RMSE:", wins) + per_seed};
}

Outcome calibration() {
    double total = 0.0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SyntheticStudy study = make_synthetic(seed);
        Rng rng(seed);
        const PredictiveDraws pred =
            predictive_samples(study.test.x, benchmark_chain(seed, false), study.train.x,
                               benchmark_model(), rng);
        int covered = 0;
        for (Eigen::Index t = 0; t < pred.horizon(); ++t) {
            std::vector<double> v(static_cast<std::size_t>(pred.y.rows()));
            for (Eigen::Index k = 0; k < pred.y.rows(); ++k) v[static_cast<std::size_t>(k)] = static_cast<double>(pred.y(k, t));
            std::sort(v.begin(), v.end());
            const double y = static_cast<double>(study.test.y[static_cast<std::size_t>(t)]);
            covered += y >= quantile_sorted(v, 0.05) && y <= quantile_sorted(v, 0.95);
        }
        total += covered / 10.0;
        per_seed += " " + std::to_string(covered);
    }
    const double avg = total / 5;
    return {avg >= 0.8, fmt("90%% interval coverage %.0f%% (need >= 80%%); covered of 10 per seed:", 100 * avg) + per_seed};
}

// ---------------------------------------------------------------- sampler oracles

using Ld = long double;

// Materialized 2n-dimensional density in extended precision.
Ld brute_log_posterior(const ParamPath& path, const Hyperparams& psi, const ObservationSeries& data,
                       const MeanModel& model, const PriorConfig& prior) {
    const auto n = static_cast<Eigen::Index>(path.size());
    Ld ll = 0;
    {
        // Independent rollout of the recursion.
        Ld s = model.initial.s, i = model.initial.i, r = model.initial.r;
        const Ld pop = model.initial.n;
        for (Eigen::Index t = 0; t < n; ++t) {
            const Ld b = path.beta[static_cast<std::size_t>(t)], g = path.gamma[static_cast<std::size_t>(t)];
            Ld lambda;
            if (model.kind == MeanKind::Test) {
                const Ld day = model.first_day + t;
                lambda = 5 * b + g * (day / 10) * (day / 10);
            } else {
                const Ld i2 = (1 + b - g) * i - b * i * (i + r) / pop;
                const Ld r2 = r + g * i;
                const Ld s2 = pop - i2 - r2;
                lambda = s - s2;
                s = s2;
                i = i2;
                r = r2;
            }
            ll += data.y[static_cast<std::size_t>(t)] * std::log(lambda) - lambda;
        }
    }
    using MatL = Eigen::Matrix<Ld, Eigen::Dynamic, Eigen::Dynamic>;
    using VecL = Eigen::Matrix<Ld, Eigen::Dynamic, 1>;
    MatL sigma(2 * n, 2 * n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            Ld k = 1;
            for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
                const Ld dx = data.x(a, j) - data.x(b, j);
                k *= std::pow(static_cast<Ld>(psi.phi[j]), 4 * dx * dx);
            }
            if (a == b) k += kNugget;
            sigma(a, b) = sigma(n + a, n + b) = psi.tau * k;
            sigma(a, n + b) = sigma(n + a, b) = psi.tau * psi.rho * k;
        }
    }
    VecL w(2 * n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Ld b = path.beta[static_cast<std::size_t>(t)], g = path.gamma[static_cast<std::size_t>(t)];
        w[t] = std::log(b / (1 - b)) - psi.mu1;
        w[n + t] = std::log(g / (1 - g)) - psi.mu2;
    }
    const Eigen::PartialPivLU<MatL> lu(sigma);
    Ld log_det = 0;
    for (Eigen::Index k = 0; k < 2 * n; ++k) log_det += std::log(std::abs(lu.matrixLU()(k, k)));
    const Ld gauss = -0.5L * log_det - 0.5L * w.dot(lu.solve(w));
    Ld hyper = -(prior.a + 1) * std::log(static_cast<Ld>(psi.tau)) - prior.b / static_cast<Ld>(psi.tau);
    hyper += (prior.b_rho - 1) * std::log1p(-static_cast<Ld>(psi.rho));
    for (Eigen::Index j = 0; j < psi.phi.size(); ++j) hyper += (prior.b_phi - 1) * std::log1p(-static_cast<Ld>(psi.phi[j]));
    hyper -= 0.5L * (std::pow(psi.mu1 - prior.alpha1, 2) / prior.sigma2_1 + std::pow(psi.mu2 - prior.alpha2, 2) / prior.sigma2_2);
    return ll + gauss + hyper;
}

ObservationSeries random_series(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> count(0, 20);
    ObservationSeries s;
    s.x.resize(n, d);
    for (Eigen::Index t = 0; t < n; ++t) {
        for (Eigen::Index j = 0; j < d; ++j) s.x(t, j) = u(rng);
        s.y.push_back(count(rng));
        s.day_numbers.push_back(t + 1);
        s.dates.push_back(std::to_string(t + 1));
    }
    for (Eigen::Index j = 0; j < d; ++j) s.factor_names.push_back("f" + std::to_string(j));
    s.population = 1e5;
    return s;
}

// Rate path drawn from the GP prior given the hyperparameters.
ParamPath prior_path(const Eigen::MatrixXd& x, const Hyperparams& psi, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            double v = 1.0;
            for (Eigen::Index j = 0; j < x.cols(); ++j) v *= std::pow(psi.phi[j], 4 * std::pow(x(a, j) - x(b, j), 2));
            k(a, b) = v + (a == b ? kNugget : 0.0);
        }
    const Eigen::MatrixXd l = k.llt().matrixL();
    Eigen::VectorXd z1(n), z2(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        z1[t] = z(rng);
        z2[t] = z(rng);
    }
    const double rc = std::sqrt(1 - psi.rho * psi.rho);
    const Eigen::VectorXd wb = std::sqrt(psi.tau) * (l * z1);
    const Eigen::VectorXd wg = std::sqrt(psi.tau) * (l * (psi.rho * z1 + rc * z2));
    ParamPath path;
    for (Eigen::Index t = 0; t < n; ++t) {
        path.beta.push_back(1 / (1 + std::exp(-(psi.mu1 + wb[t]))));
        path.gamma.push_back(1 / (1 + std::exp(-(psi.mu2 + wg[t]))));
    }
    return path;
}

Outcome density_oracle() {
    Rng rng(404);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 5), dim(1, 3);
    double worst = 0.0, worst_test = 0.0, worst_sir = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const ObservationSeries data = random_series(size(rng), dim(rng), rng);
        MeanModel model;
        if (rep % 2 == 0) {
            model.kind = MeanKind::Test;
            model.first_day = 1 + 10 * u(rng);
        } else {
            model.initial = Compartments::seeded(1e5, 10 + 100 * u(rng));
        }
        Hyperparams psi;
        psi.rho = 0.95 * u(rng);
        psi.phi = Eigen::VectorXd::NullaryExpr(data.dim(), [&] { return 0.05 + 0.9 * u(rng); });
        psi.mu1 = 4 * u(rng) - 2;
        psi.mu2 = 4 * u(rng) - 2;
        psi.tau = 0.1 + 3 * u(rng);
        PriorConfig prior;
        prior.b_rho = 0.1 + u(rng);
        const ParamPath path = prior_path(data.x, psi, rng);
        const double got = log_unnorm_posterior(path, psi, data, model, prior);
        const double want = static_cast<double>(brute_log_posterior(path, psi, data, model, prior));
        double& slot = model.kind == MeanKind::Test ? worst_test : worst_sir;
        slot = std::max(slot, std::abs(got - want));
        worst = std::max(worst, slot);
    }
    return {worst <= 1e-8, fmt("max |difference| %.2e over 50 instances, test model %.2e, SIR model %.2e (need <= 1e-8)",
                               worst, worst_test, worst_sir)};
}

// KS distance between draws and the CDF of exp(log_density) on a grid over [lo, hi].
double ks_against_grid(std::vector<double> draws, const std::function<double(double)>& log_density, double lo,
                       double hi) {
    const int m = 20001;
    std::vector<double> xs(m), logp(m);
    for (int k = 0; k < m; ++k) {
        xs[k] = lo + (hi - lo) * k / (m - 1);
        logp[k] = log_density(xs[k]);
    }
    const double top = *std::max_element(logp.begin(), logp.end());
    std::vector<double> cdf(m, 0.0);
    for (int k = 1; k < m; ++k) cdf[k] = cdf[k - 1] + 0.5 * (std::exp(logp[k - 1] - top) + std::exp(logp[k] - top));
    for (double& c : cdf) c /= cdf.back();
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    const auto nd = static_cast<double>(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double x = std::clamp(draws[i], lo, hi);
        const double pos = (x - lo) / (hi - lo) * (m - 1);
        const auto k = std::min(static_cast<int>(pos), m - 2);
        const double f = cdf[k] + (pos - k) * (cdf[k + 1] - cdf[k]);
        ks = std::max({ks, std::abs(f - i / nd), std::abs(f - (i + 1) / nd)});
    }
    return ks;
}

Outcome conjugate_oracle() {
    std::mt19937_64 setup(77);
    const ObservationSeries data = random_series(2, 1, setup);
    MeanModel model;
    model.kind = MeanKind::Test;
    const PriorConfig prior;
    const PosteriorTarget target(data, model, prior);
    ChainConfig cfg;
    Rng rng(78);
    ChainState state = initial_state(target, cfg, rng);
    state.path = ParamPath{{0.3, 0.6}, {0.2, 0.7}};
    state.psi.rho = 0.5;
    state.psi.phi[0] = 0.4;
    state.psi.mu1 = 0.2;
    state.psi.mu2 = -0.3;
    state.psi.tau = 1.5;
    state.refresh(target);
    const Hyperparams fixed = state.psi;

    const int n = 10000;
    std::vector<double> taus, mu1s, mu2s;
    for (int k = 0; k < n; ++k) {
        state.psi = fixed;
        update_tau(state, prior, rng);
        taus.push_back(std::log(state.psi.tau));
        state.psi = fixed;
        update_mu(state, prior, rng);
        mu1s.push_back(state.psi.mu1);
        mu2s.push_back(state.psi.mu2);
    }
    auto range = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        const double pad = 0.5 * (*hi - *lo);
        return std::make_pair(*lo - pad, *hi + pad);
    };
    auto lp = [&](const Hyperparams& psi) { return log_unnorm_posterior(state.path, psi, data, model, prior); };

    // log tau density: posterior in tau plus the log-Jacobian u.
    const auto [tlo, thi] = range(taus);
    const double ks_tau = ks_against_grid(taus, [&](double lt) {
        Hyperparams p = fixed;
        p.tau = std::exp(lt);
        return lp(p) + lt;
    }, tlo, thi);

    // Marginals of (mu1, mu2) by integrating the other coordinate on a grid.
    const auto [alo, ahi] = range(mu1s);
    const auto [blo, bhi] = range(mu2s);
    auto marginal = [&](bool first) {
        return [&, first](double v) {
            const int m = 801;
            const double lo = first ? blo : alo, hi = first ? bhi : ahi;
            std::vector<double> vals(m);
            for (int k = 0; k < m; ++k) {
                Hyperparams p = fixed;
                const double other = lo + (hi - lo) * k / (m - 1);
                p.mu1 = first ? v : other;
                p.mu2 = first ? other : v;
                vals[k] = lp(p);
            }
            const double top = *std::max_element(vals.begin(), vals.end());
            double sum = 0.0;
            for (double x : vals) sum += std::exp(x - top);
            return top + std::log(sum);
        };
    };
    auto ks_coarse = [&](const std::vector<double>& draws, const std::function<double(double)>& f, double lo,
                         double hi) {
        // Tabulate the marginal on 2001 points, then interpolate for the fine CDF grid.
        const int m = 2001;
        std::vector<double> table(m);
        for (int k = 0; k < m; ++k) table[k] = f(lo + (hi - lo) * k / (m - 1));
        return ks_against_grid(draws, [&](double x) {
            const double pos = (x - lo) / (hi - lo) * (m - 1);
            const auto k = std::clamp(static_cast<int>(pos), 0, m - 2);
            return table[k] + (pos - k) * (table[k + 1] - table[k]);
        }, lo, hi);
    };
    const double ks_mu1 = ks_coarse(mu1s, marginal(true), alo, ahi);
    const double ks_mu2 = ks_coarse(mu2s, marginal(false), blo, bhi);
    const double worst = std::max({ks_tau, ks_mu1, ks_mu2});
    return {worst < 0.05, fmt("KS tau %.4f, mu1 %.4f, mu2 %.4f (need < 0.05)", ks_tau, ks_mu1, ks_mu2)};
}

// Forward draw of every unknown, then the data, from the joint model.
struct JointDraw {
    ParamPath path;
    Hyperparams psi;
    std::vector<std::int64_t> y;
};

JointDraw draw_joint(const Eigen::MatrixXd& x, const PriorConfig& prior, const MeanModel& model, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    std::gamma_distribution<double> gam(prior.a, 1.0 / prior.b);
    JointDraw out;
    out.psi.tau = 1.0 / gam(rng);
    out.psi.rho = 1.0 - std::pow(u(rng), 1.0 / prior.b_rho);
    out.psi.phi = Eigen::VectorXd::NullaryExpr(x.cols(), [&] { return 1.0 - std::pow(u(rng), 1.0 / prior.b_phi); });
    out.psi.mu1 = prior.alpha1 + std::sqrt(prior.sigma2_1) * z(rng);
    out.psi.mu2 = prior.alpha2 + std::sqrt(prior.sigma2_2) * z(rng);
    out.path = prior_path(x, out.psi, rng);
    for (const double lambda : mean_curve(model, out.path)) out.y.push_back(std::poisson_distribution<std::int64_t>(lambda)(rng));
    return out;
}

std::vector<double> moments(const ParamPath& path, const Hyperparams& psi) {
    const double lb = std::log(path.beta[0] / (1 - path.beta[0]));
    const double lg = std::log(path.gamma[1] / (1 - path.gamma[1]));
    const double lt = std::log(psi.tau);
    return {lb, lg, psi.mu1, psi.mu2, lt, psi.rho, psi.phi[0], lb * lb, psi.mu1 * psi.mu1, lt * lt, lb * lg};
}

Outcome geweke() {
    const Eigen::Index n = 3;
    Eigen::MatrixXd x(n, 1);
    x << 0.1, 0.5, 0.8;
    PriorConfig prior;
    prior.a = 3.0;
    prior.b = 2.0;
    prior.b_rho = 2.0;
    prior.b_phi = 2.0;
    MeanModel model;
    model.kind = MeanKind::Test;
    const int rounds = 10000;
    Rng rng(2024);

    auto series = [&](const std::vector<std::int64_t>& y) {
        ObservationSeries s;
        s.x = x;
        s.y = y;
        s.population = 1.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            s.day_numbers.push_back(t + 1);
            s.dates.push_back(std::to_string(t + 1));
        }
        s.factor_names = {"f"};
        return s;
    };

    std::vector<std::vector<double>> mc, sc;
    for (int r = 0; r < rounds; ++r) {
        const JointDraw d = draw_joint(x, prior, model, rng);
        mc.push_back(moments(d.path, d.psi));
    }

    ChainConfig cfg;
    JointDraw start = draw_joint(x, prior, model, rng);
    PosteriorTarget first(series(start.y), model, prior);
    ChainState state = initial_state(first, cfg, rng);
    state.path = start.path;
    state.psi = start.psi;
    state.refresh(first);
    std::vector<std::int64_t> y = start.y;
    for (int r = 0; r < rounds; ++r) {
        const PosteriorTarget target(series(y), model, prior);
        state.refresh(target);
        gibbs_sweep(state, target, cfg, rng);
        for (std::size_t t = 0; t < y.size(); ++t) {
            const double lambda = mean_curve(model, state.path)[t];
            y[t] = std::poisson_distribution<std::int64_t>(lambda)(rng);
        }
        sc.push_back(moments(state.path, state.psi));
    }

    const std::size_t g = mc.front().size();
    const int batches = 50;
    const int per = rounds / batches;
    double worst = 0.0;
    std::string zs;
    for (std::size_t j = 0; j < g; ++j) {
        double m1 = 0, v1 = 0;
        for (const auto& row : mc) m1 += row[j];
        m1 /= rounds;
        for (const auto& row : mc) v1 += std::pow(row[j] - m1, 2);
        v1 /= rounds - 1;
        double m2 = 0;
        std::vector<double> means(batches, 0.0);
        for (int b = 0; b < batches; ++b) {
            for (int k = 0; k < per; ++k) means[b] += sc[b * per + k][j];
            means[b] /= per;
            m2 += means[b];
        }
        m2 /= batches;
        double vb = 0;
        for (double m : means) vb += std::pow(m - m2, 2);
        vb /= batches - 1;
        const double z = (m1 - m2) / std::sqrt(v1 / rounds + vb / batches);
        worst = std::max(worst, std::abs(z));
        zs += fmt(" %.2f", z);
    }
    return {worst < 4.0, fmt("max |z| %.2f over %.0f moments (need < 4); z:", worst, static_cast<double>(g)) + zs};
}

Outcome sampler_oracles() {
    const Outcome a = density_oracle();
    const Outcome b = conjugate_oracle();
    const Outcome c = geweke();
    return {a.pass && b.pass && c.pass, "(a) " + std::string(a.pass ? "pass " : "FAIL ") + a.detail + "; (b) " +
                                            (b.pass ? "pass " : "FAIL ") + b.detail + "; (c) " +
                                            (c.pass ? "pass " : "FAIL ") + c.detail};
}

// ---------------------------------------------------------------- sensitivity

Outcome sensitivity_analytics() {
    const FactorDistribution cube = FactorDistribution::uniform(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2));
    const IntegrationDesign design = make_design(cube, 100000, 2718);
    const auto t0 = std::chrono::steady_clock::now();
    AnovaEstimator add([](const Eigen::MatrixXd& x) -> Eigen::VectorXd { return x.col(0) + x.col(1); }, design);
    const double s1 = add.main_index(0).value, s2 = add.main_index(1).value, s12 = add.interaction_index(0, 1).value;
    AnovaEstimator prod([](const Eigen::MatrixXd& x) -> Eigen::VectorXd { return x.col(0).cwiseProduct(x.col(1)); },
                        design);
    const double p1 = prod.main_index(0).value, p12 = prod.interaction_index(0, 1).value;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = std::abs(s1 - 0.5) <= 0.02 && std::abs(s2 - 0.5) <= 0.02 && s12 < 0.01 &&
                      std::abs(p1 - 3.0 / 7.0) <= 0.02 && std::abs(p12 - 1.0 / 7.0) <= 0.02 && secs < 60;
    return {pass, fmt("sum: S1 %.4f S2 %.4f S12 %.4f; ", s1, s2, s12) +
                      fmt("product: S1 %.4f (3/7 = %.4f) S12 %.4f (1/7 = %.4f); ", p1, 3.0 / 7.0, p12, 1.0 / 7.0) +
                      fmt("%.2f s", secs)};
}

// ---------------------------------------------------------------- invariants

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome invariants() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::string> failed;

    double worst_sir = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const double n = std::pow(10.0, 3 + 5 * u(rng));
        Compartments c = Compartments::seeded(n, 1 + 0.01 * n * u(rng));
        for (int t = 0; t < 1000; ++t) {
            c = sir_step(c, 0.01 + 0.98 * u(rng), 0.01 + 0.98 * u(rng), true);
            worst_sir = std::max(worst_sir, std::abs(c.imbalance()) / n);
        }
    }
    if (worst_sir > 1e-9) failed.push_back("SIR conservation");

    double min_eig = 1.0;
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(38 * u(rng));
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(5 * u(rng));
        const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(n, d, [&] { return u(rng); });
        const Eigen::VectorXd phi = Eigen::VectorXd::NullaryExpr(d, [&] { return 0.01 + 0.98 * u(rng); });
        const Eigen::MatrixXd k = cross_correlation(x, x, phi);
        min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff());
        try {
            CovStructure cov(x, phi);
        } catch (const FactorizationFailure&) {
            min_eig = -1.0;
        }
    }
    if (min_eig < -1e-10) failed.push_back("kernel PSD");

    double worst_logit = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const double p = u(rng);
        if (p > 0.0) worst_logit = std::max(worst_logit, std::abs(inv_logit(logit(p)) - p));
    }
    if (worst_logit > 1e-12) failed.push_back("logit round trip");

    const SyntheticStudy study = make_synthetic(5);
    ChainConfig cfg;
    cfg.burn_in = 200;
    cfg.samples = 200;
    cfg.seed = 5;
    const ChainSamples a = run_chain(study.train, benchmark_model(), PriorConfig{}, cfg);
    const ChainSamples b = run_chain(study.train, benchmark_model(), PriorConfig{}, cfg);
    std::stringstream sa, sb;
    write_chain(sa, a);
    write_chain(sb, b);
    if (sa.str() != sb.str()) failed.push_back("seeded chain determinism");
    std::stringstream copy(sa.str());
    const ChainSamples back = read_chain(copy);
    bool lossless = back.size() == a.size();
    for (std::size_t k = 0; lossless && k < a.size(); ++k) {
        lossless = back.draws[k].path.beta == a.draws[k].path.beta && back.draws[k].path.gamma == a.draws[k].path.gamma &&
                   back.draws[k].psi.phi == a.draws[k].psi.phi && back.draws[k].psi.tau == a.draws[k].psi.tau &&
                   back.draws[k].psi.rho == a.draws[k].psi.rho && back.draws[k].psi.mu1 == a.draws[k].psi.mu1 &&
                   back.draws[k].psi.mu2 == a.draws[k].psi.mu2;
    }
    if (!lossless) failed.push_back("chain round trip");

    const fs::path root = fs::temp_directory_path() / "epical_acceptance_repeat";
    fs::remove_all(root);
    std::ostringstream sink;
    bool same = true;
    for (const char* run : {"a", "b"}) {
        const std::string out = (root / run).string();
        same &= cli::run({"simulate", "--seed", "3", "--out", out + "/sim"}, sink, sink) == 0;
        same &= cli::run({"fit", "--data", out + "/sim/train.csv", "--mean-model", "test", "--shift-days", "0",
                          "--burn-in", "100", "--samples", "100", "--out", out + "/fit"},
                         sink, sink) == 0;
        same &= cli::run({"predict", "--fit-dir", out + "/fit", "--future-covariates", out + "/sim/test.csv", "--horizon",
                          "10"},
                         sink, sink) == 0;
    }
    for (const char* f : {"sim/train.csv", "fit/chain.csv", "fit/fitted.csv", "fit/forecast.csv"}) {
        same &= slurp(root / "a" / f) == slurp(root / "b" / f);
    }
    fs::remove_all(root);
    if (!same) failed.push_back("byte-identical CLI reruns");

    std::string detail = fmt("SIR drift %.1e*N, min eigenvalue %.1e, logit error %.1e", worst_sir, min_eig, worst_logit);
    detail += "; chain round trip " + std::string(lossless ? "lossless" : "lossy");
    for (const auto& f : failed) detail += "; failed: " + f;
    return {failed.empty(), detail};
}

// ---------------------------------------------------------------- pipeline

std::size_t count_lines(const fs::path& p) {
    std::ifstream is(p);
    std::size_t n = 0;
    for (std::string line; std::getline(is, line);) ++n;
    return n;
}

Outcome pipeline() {
    const fs::path fixture = EPICAL_FIXTURE_DIR;
    const fs::path root = fs::temp_directory_path() / "epical_acceptance_pipeline";
    fs::remove_all(root);
    const std::string fit = (root / "fit").string();
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream out, err;
    std::vector<std::pair<std::string, int>> codes;
    codes.emplace_back("fit", cli::run({"fit", "--cases", (fixture / "cases.csv").string(), "--covariates",
                                        (fixture / "covariates.csv").string(), "--population", "500000",
                                        "--shift-days", "11", "--seed", "1", "--out", fit},
                                       out, err));
    codes.emplace_back("predict", cli::run({"predict", "--fit-dir", fit, "--future-covariates",
                                            (fixture / "future_covariates.csv").string(), "--horizon", "14"},
                                           out, err));
    codes.emplace_back("sensitivity", cli::run({"sensitivity", "--fit-dir", fit}, out, err));
    codes.emplace_back("report", cli::run({"report", "--fit-dir", fit}, out, err));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<std::string> problems;
    for (const auto& [cmd, code] : codes) {
        if (code != 0) problems.push_back(cmd + " exited " + std::to_string(code));
    }
    const std::size_t case_rows = count_lines(fixture / "cases.csv") - 1;
    const std::size_t train_rows = count_lines(root / "fit/train.csv") - 1;
    if (train_rows + 11 != case_rows) problems.push_back("training rows do not reflect an 11-day shift");
    const std::size_t forecast_rows = count_lines(root / "fit/forecast.csv") - 1;
    if (forecast_rows != 14) problems.push_back("forecast has " + std::to_string(forecast_rows) + " rows");
    {
        // First forecast day follows the last reported case day.
        std::ifstream cases(fixture / "cases.csv"), fc(root / "fit/forecast.csv");
        std::string line, last_case, first_forecast;
        while (std::getline(cases, line)) last_case = line.substr(0, line.find(','));
        std::getline(fc, line);
        std::getline(fc, line);
        first_forecast = line.substr(0, line.find(','));
        if (first_forecast.empty() || last_case.empty() ||
            parse_iso_date(first_forecast) != parse_iso_date(last_case) + 1) {
            problems.push_back("forecast starts at " + first_forecast + " after cases ending " + last_case);
        }
    }
    int main_files = 0;
    for (const auto& entry : fs::directory_iterator(root / "fit/sensitivity")) {
        main_files += entry.path().filename().string().rfind("main_effect_", 0) == 0;
    }
    if (main_files != 6) problems.push_back(std::to_string(main_files) + " main-effect files");
    std::ifstream pairs(root / "fit/sensitivity/interaction_indices.csv");
    std::string header;
    std::getline(pairs, header);
    const auto pair_columns = static_cast<int>(std::count(header.begin(), header.end(), ','));
    if (pair_columns != 15) problems.push_back(std::to_string(pair_columns) + " pairwise index columns");
    if (!fs::exists(root / "fit/report.txt") || !fs::exists(root / "fit/report_index.json")) problems.push_back("no report");
    if (secs >= 600) problems.push_back("runtime over 10 minutes");

    std::string detail = fmt("%.0f training rows after the shift, %.0f forecast rows, ", static_cast<double>(train_rows),
                             static_cast<double>(forecast_rows)) +
                         fmt("%.0f main-effect files, %.0f pair columns, ", main_files, pair_columns) + fmt("%.1f s", secs);
    for (const auto& p : problems) detail += "; " + p;
    if (!problems.empty() && !err.str().empty()) detail += "; stderr: " + err.str();
    fs::remove_all(root);
    return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
        {1, {"rate-function recovery", recovery}},
        {2, {"joint vs independent prior", joint_vs_independent}},
        {3, {"predictive calibration", calibration}},
        {4, {"sampler correctness oracles", sampler_oracles}},
        {5, {"sensitivity analytics", sensitivity_analytics}},
        {6, {"structural invariants", invariants}},
        {7, {"pipeline smoke test", pipeline}},
    };
    std::vector<int> chosen;
    for (int i = 1; i < argc; ++i) chosen.push_back(std::atoi(argv[i]));
    if (chosen.empty()) {
        for (const auto& [id, _] : criteria) chosen.push_back(id);
    }
    bool all = true;
    for (const int id : chosen) {
        const auto it = criteria.find(id);
        if (it == criteria.end()) {
            std::fprintf(stderr, "unknown criterion %d\n", id);
            return 2;
        }
        Outcome o;
        try {
            o = it->second.second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        all &= o.pass;
        std::printf("criterion %d (%s): %s  %s\n", id, it->second.first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
