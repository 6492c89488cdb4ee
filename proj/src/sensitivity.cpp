#include "epical/sensitivity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "epical/errors.hpp"

namespace epical {

FactorDistribution FactorDistribution::empirical(const Eigen::MatrixXd& observed) {
    if (observed.rows() < 1 || observed.cols() < 1) throw DimensionMismatch("empty covariate sample");
    FactorDistribution out;
    out.kind_ = Kind::Empirical;
    out.lo_ = observed.colwise().minCoeff().transpose();
    out.hi_ = observed.colwise().maxCoeff().transpose();
    for (Eigen::Index j = 0; j < observed.cols(); ++j) {
        out.columns_.emplace_back(observed.col(j).data(), observed.col(j).data() + observed.rows());
    }
    return out;
}

FactorDistribution FactorDistribution::uniform(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (lo.size() != hi.size() || lo.size() < 1) throw DimensionMismatch("uniform bounds differ in dimension");
    if ((hi.array() < lo.array()).any()) throw DomainError("uniform upper bound below lower bound");
    FactorDistribution out;
    out.kind_ = Kind::Uniform;
    out.lo_ = lo;
    out.hi_ = hi;
    return out;
}

Eigen::MatrixXd FactorDistribution::sample(Eigen::Index rows, Rng& rng) const {
    Eigen::MatrixXd out(rows, dim());
    for (Eigen::Index j = 0; j < dim(); ++j) {
        if (kind_ == Kind::Empirical) {
            const auto& col = columns_[static_cast<std::size_t>(j)];
            std::uniform_int_distribution<std::size_t> pick(0, col.size() - 1);
            for (Eigen::Index m = 0; m < rows; ++m) out(m, j) = col[pick(rng)];
        } else {
            std::uniform_real_distribution<double> unif(lo_[j], hi_[j]);
            for (Eigen::Index m = 0; m < rows; ++m) out(m, j) = unif(rng);
        }
    }
    return out;
}

std::vector<double> FactorDistribution::grid(Eigen::Index j, std::size_t size) const {
    if (size < 1) throw ConfigError("grid size must be positive");
    if (kind_ == Kind::Empirical) {
        const auto& col = columns_[static_cast<std::size_t>(j)];
        const std::set<double> distinct(col.begin(), col.end());
        if (distinct.size() <= size) return {distinct.begin(), distinct.end()};
    }
    std::vector<double> out(size);
    if (size == 1) {
        out[0] = 0.5 * (lo_[j] + hi_[j]);
        return out;
    }
    for (std::size_t g = 0; g < size; ++g) {
        out[g] = lo_[j] + (hi_[j] - lo_[j]) * static_cast<double>(g) / static_cast<double>(size - 1);
    }
    return out;
}

IntegrationDesign make_design(const FactorDistribution& dist, Eigen::Index samples, std::uint64_t seed) {
    if (samples < 2) throw ConfigError("need at least two integration points");
    Rng rng(seed);
    IntegrationDesign design;
    design.a = dist.sample(samples, rng);
    design.b = dist.sample(samples, rng);
    return design;
}

AnovaEstimator::AnovaEstimator(BatchFunction g, const IntegrationDesign& design)
    : g_(std::move(g)), design_(&design) {
    fa_ = g_(design.a);
    fb_ = g_(design.b);
    const auto m = static_cast<double>(fa_.size());
    m0_ = fa_.mean();
    const double pooled_mean = 0.5 * (fa_.mean() + fb_.mean());
    variance_ = ((fa_.array() - pooled_mean).square().sum() + (fb_.array() - pooled_mean).square().sum()) / (2.0 * m);
}

double AnovaEstimator::mean_standard_error() const noexcept {
    const auto m = static_cast<double>(fa_.size());
    return std::sqrt((fa_.array() - m0_).square().sum() / (m - 1.0) / m);
}

void AnovaEstimator::require_variance() const {
    const double scale = std::max(1.0, m0_ * m0_);
    if (!(variance_ > 1e-24 * scale)) throw ZeroVariance("function is constant under the input distribution");
}

std::vector<double> AnovaEstimator::main_effect(Eigen::Index j, const std::vector<double>& grid) const {
    std::vector<double> out;
    out.reserve(grid.size());
    Eigen::MatrixXd pinned = design_->a;
    for (const double v : grid) {
        pinned.col(j).setConstant(v);
        out.push_back(g_(pinned).mean() - m0_);
    }
    return out;
}

Eigen::MatrixXd AnovaEstimator::interaction_effect(Eigen::Index j, Eigen::Index k, const std::vector<double>& grid_j,
                                                   const std::vector<double>& grid_k) const {
    if (j == k) throw DimensionMismatch("interaction needs two distinct factors");
    const std::vector<double> mj = main_effect(j, grid_j);
    const std::vector<double> mk = main_effect(k, grid_k);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(grid_j.size()), static_cast<Eigen::Index>(grid_k.size()));
    Eigen::MatrixXd pinned = design_->a;
    for (std::size_t a = 0; a < grid_j.size(); ++a) {
        pinned.col(j).setConstant(grid_j[a]);
        for (std::size_t b = 0; b < grid_k.size(); ++b) {
            pinned.col(k).setConstant(grid_k[b]);
            out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = g_(pinned).mean() - m0_ - mj[a] - mk[b];
        }
    }
    return out;
}

double AnovaEstimator::first_order_variance(Eigen::Index j) {
    if (const auto it = first_order_.find(j); it != first_order_.end()) return it->second;
    Eigen::MatrixXd mixed = design_->a;
    mixed.col(j) = design_->b.col(j);
    const Eigen::VectorXd f_mixed = g_(mixed);
    const double v = (fb_.array() * (f_mixed - fa_).array()).mean();
    first_order_.emplace(j, v);
    return v;
}

IndexEstimate AnovaEstimator::main_index(Eigen::Index j) {
    require_variance();
    IndexEstimate out;
    out.raw = first_order_variance(j) / variance_;
    out.value = std::clamp(out.raw, 0.0, 1.0);
    return out;
}

IndexEstimate AnovaEstimator::interaction_index(Eigen::Index j, Eigen::Index k) {
    if (j == k) throw DimensionMismatch("interaction needs two distinct factors");
    require_variance();
    Eigen::MatrixXd mixed = design_->a;
    mixed.col(j) = design_->b.col(j);
    mixed.col(k) = design_->b.col(k);
    const Eigen::VectorXd f_mixed = g_(mixed);
    const double closed = (fb_.array() * (f_mixed - fa_).array()).mean();
    IndexEstimate out;
    out.raw = (closed - first_order_variance(j) - first_order_variance(k)) / variance_;
    out.value = std::clamp(out.raw, 0.0, 1.0);
    return out;
}

double overall_mean(const BatchFunction& g, const IntegrationDesign& design) { return g(design.a).mean(); }

std::vector<double> main_effect(const BatchFunction& g, const IntegrationDesign& design, Eigen::Index j,
                                const std::vector<double>& grid) {
    return AnovaEstimator(g, design).main_effect(j, grid);
}

IndexEstimate main_effect_index(const BatchFunction& g, const IntegrationDesign& design, Eigen::Index j) {
    return AnovaEstimator(g, design).main_index(j);
}

Eigen::MatrixXd interaction_effect(const BatchFunction& g, const IntegrationDesign& design, Eigen::Index j,
                                   Eigen::Index k, const std::vector<double>& grid_j, const std::vector<double>& grid_k) {
    return AnovaEstimator(g, design).interaction_effect(j, k, grid_j, grid_k);
}

IndexEstimate interaction_index(const BatchFunction& g, const IntegrationDesign& design, Eigen::Index j,
                                Eigen::Index k) {
    return AnovaEstimator(g, design).interaction_index(j, k);
}

BatchFunction r0_mean_surface(const Draw& draw, const Eigen::MatrixXd& x_train) {
    auto field = std::make_shared<LatentField>(build_cov(x_train, draw.psi), draw.path, draw.psi);
    return [field](const Eigen::MatrixXd& xq) {
        const Eigen::MatrixXd means = field->mean_at(xq);
        Eigen::VectorXd out(xq.rows());
        for (Eigen::Index q = 0; q < xq.rows(); ++q) out[q] = inv_logit(means(q, 0)) / inv_logit(means(q, 1));
        return out;
    };
}

SensitivityReport posterior_sensitivity(const ChainSamples& chain, const Eigen::MatrixXd& x_train,
                                        const FactorDistribution& dist, const SensitivityOptions& options) {
    if (chain.draws.empty()) throw EmptyDraws("chain has no stored draws");
    const Eigen::Index d = dist.dim();
    if (d != x_train.cols() || d != chain.dim()) throw DimensionMismatch("factor distribution dimension mismatch");

    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs = options.pairs;
    if (pairs.empty()) {
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index k = j + 1; k < d; ++k) pairs.emplace_back(j, k);
        }
    }
    for (const auto& [j, k] : pairs) {
        if (j == k || j < 0 || k < 0 || j >= d || k >= d) throw ConfigError("invalid factor pair");
    }

    const IntegrationDesign design = make_design(dist, options.samples, options.seed);
    const std::size_t draws = chain.size();

    SensitivityReport report;
    report.m0.assign(draws, 0.0);
    report.variance.assign(draws, 0.0);
    for (Eigen::Index j = 0; j < d; ++j) {
        FactorEffect fe;
        fe.factor = j;
        fe.grid = dist.grid(j, options.grid_size);
        fe.curves.resize(static_cast<Eigen::Index>(draws), static_cast<Eigen::Index>(fe.grid.size()));
        fe.index.assign(draws, 0.0);
        fe.raw_index.assign(draws, 0.0);
        report.main.push_back(std::move(fe));
    }
    for (const auto& [j, k] : pairs) {
        PairEffect pe;
        pe.j = j;
        pe.k = k;
        pe.index.assign(draws, 0.0);
        pe.raw_index.assign(draws, 0.0);
        if (options.interaction_surfaces) {
            pe.grid_j = dist.grid(j, options.interaction_grid_size);
            pe.grid_k = dist.grid(k, options.interaction_grid_size);
            pe.surfaces.resize(draws);
        }
        report.pairs.push_back(std::move(pe));
    }

    auto analyse = [&](std::size_t k) {
        AnovaEstimator est(r0_mean_surface(chain.draws[k], x_train), design);
        report.m0[k] = est.overall_mean();
        report.variance[k] = est.variance();
        const auto row = static_cast<Eigen::Index>(k);
        for (auto& fe : report.main) {
            const std::vector<double> curve = est.main_effect(fe.factor, fe.grid);
            for (std::size_t g = 0; g < curve.size(); ++g) fe.curves(row, static_cast<Eigen::Index>(g)) = curve[g];
        }
        bool constant = false;
        try {
            for (auto& fe : report.main) {
                const IndexEstimate ie = est.main_index(fe.factor);
                fe.index[k] = ie.value;
                fe.raw_index[k] = ie.raw;
            }
            for (auto& pe : report.pairs) {
                const IndexEstimate ie = est.interaction_index(pe.j, pe.k);
                pe.index[k] = ie.value;
                pe.raw_index[k] = ie.raw;
            }
        } catch (const ZeroVariance&) {
            constant = true;  // R0 flat under F: every index is zero
        }
        if (constant) {
            for (auto& fe : report.main) fe.index[k] = fe.raw_index[k] = 0.0;
            for (auto& pe : report.pairs) pe.index[k] = pe.raw_index[k] = 0.0;
        }
        for (auto& pe : report.pairs) {
            if (options.interaction_surfaces) pe.surfaces[k] = est.interaction_effect(pe.j, pe.k, pe.grid_j, pe.grid_k);
        }
    };

    const unsigned jobs = std::max(1U, std::min<unsigned>(options.jobs, static_cast<unsigned>(draws)));
    if (jobs == 1) {
        for (std::size_t k = 0; k < draws; ++k) {
            try {
                analyse(k);
            } catch (const Error& e) {
                throw SamplerFailure("sensitivity for draw " + std::to_string(k) + ": " + e.what());
            }
        }
        return report;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t k = next++; k < draws; k = next++) {
                try {
                    analyse(k);
                } catch (const Error& e) {
                    const std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::make_exception_ptr(
                            SamplerFailure("sensitivity for draw " + std::to_string(k) + ": " + e.what()));
                    }
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
    return report;
}

}  // namespace epical
