#include <fstream>

#include "common.hpp"
#include "epical/chain_io.hpp"
#include "epical/errors.hpp"
#include "epical/sensitivity.hpp"

namespace epical::cli {

namespace {

Eigen::Index factor_index(const std::vector<std::string>& names, const std::string& name) {
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] == name) return static_cast<Eigen::Index>(j);
    }
    throw ConfigError("unknown factor '" + name + "' in --pairs");
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> parse_pairs(const std::vector<std::string>& specs,
                                                               const std::vector<std::string>& names) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    for (const auto& spec : specs) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos) throw ConfigError("--pairs expects a:b, got '" + spec + "'");
        Eigen::Index j = factor_index(names, spec.substr(0, colon));
        Eigen::Index k = factor_index(names, spec.substr(colon + 1));
        if (j == k) throw ConfigError("--pairs needs two different factors: '" + spec + "'");
        if (j > k) std::swap(j, k);
        if (std::find(out.begin(), out.end(), std::pair{j, k}) == out.end()) out.emplace_back(j, k);
    }
    return out;
}

// Evenly spaced subset of at most `limit` draws; returns the chosen indices.
std::vector<std::size_t> thin_draws(std::size_t total, std::size_t limit) {
    std::vector<std::size_t> out;
    if (limit == 0 || total <= limit) {
        for (std::size_t k = 0; k < total; ++k) out.push_back(k);
        return out;
    }
    for (std::size_t k = 0; k < limit; ++k) out.push_back(k * total / limit);
    return out;
}

std::string pair_name(const std::vector<std::string>& names, Eigen::Index j, Eigen::Index k) {
    return names[static_cast<std::size_t>(j)] + ":" + names[static_cast<std::size_t>(k)];
}

void summary_row(std::ofstream& os, const std::string& effect, const std::string& kind,
                 const std::vector<double>& draws) {
    const Summary s = summarize(draws, 0.95);
    os << effect << ',' << kind << ',' << format_real(s.mean) << ',' << format_real(s.median) << ','
       << format_real(s.lo) << ',' << format_real(s.hi) << '\n';
}

}  // namespace

CLI::App* add_sensitivity(CLI::App& app, SensitivityCliOptions& opt) {
    CLI::App* sub = app.add_subcommand("sensitivity", "Functional ANOVA of the reproduction-number surface R0(x)");
    sub->add_option("--fit-dir", opt.fit_dir, "Directory written by 'fit'")->required();
    sub->add_option("--out", opt.out, "Output directory (default: <fit-dir>/sensitivity)");
    sub->add_option("--pairs", opt.pairs, "Factor pairs a:b to analyse (default: all pairs)")->delimiter(',');
    sub->add_option("--mc-samples", opt.mc_samples, "Monte Carlo points per integration matrix")->capture_default_str();
    sub->add_option("--max-draws", opt.max_draws, "Evenly spaced posterior draws analysed (0 = all)")->capture_default_str();
    sub->add_option("--grid-size", opt.grid_size, "Main-effect grid points per factor")->capture_default_str();
    sub->add_option("--distribution", opt.distribution, "Factor distribution: empirical or uniform")
        ->check(CLI::IsMember({"empirical", "uniform"}))
        ->capture_default_str();
    sub->add_flag("--surfaces", opt.surfaces, "Also write per-draw pairwise interaction surfaces");
    sub->add_option("--jobs", opt.jobs, "Worker threads over posterior draws")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Random seed for the integration points")->capture_default_str();
    return sub;
}

void run_sensitivity(const SensitivityCliOptions& opt, std::ostream& log) {
    const FitArtifacts fit = load_fit(opt.fit_dir);
    const std::vector<std::string>& names = fit.train.factor_names;
    const auto d = static_cast<Eigen::Index>(names.size());

    const std::vector<std::size_t> picked = thin_draws(fit.chain.size(), opt.max_draws);
    ChainSamples subset;
    for (const std::size_t k : picked) subset.draws.push_back(fit.chain.draws[k]);

    const FactorDistribution dist = opt.distribution == "uniform"
                                        ? FactorDistribution::uniform(Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d))
                                        : FactorDistribution::empirical(fit.x_scaled);
    SensitivityOptions so;
    so.samples = opt.mc_samples;
    so.grid_size = opt.grid_size;
    so.pairs = parse_pairs(opt.pairs, names);
    so.interaction_surfaces = opt.surfaces;
    so.seed = opt.seed;
    so.jobs = std::max(1U, opt.jobs);
    const SensitivityReport report = posterior_sensitivity(subset, fit.x_scaled, dist, so);

    const fs::path out = opt.out.empty() ? opt.fit_dir / "sensitivity" : opt.out;
    {
        std::ofstream os = open_output(out / kM0File);
        os << "draw,m0,variance\n";
        for (std::size_t k = 0; k < picked.size(); ++k) {
            os << picked[k] << ',' << format_real(report.m0[k]) << ',' << format_real(report.variance[k]) << '\n';
        }
    }
    for (const FactorEffect& fe : report.main) {
        const std::string& name = names[static_cast<std::size_t>(fe.factor)];
        std::ofstream os = open_output(out / ("main_effect_" + name + ".csv"));
        os << name << ",draw,effect\n";
        for (std::size_t g = 0; g < fe.grid.size(); ++g) {
            const std::string x = format_real(fit.scaling.invert(fe.factor, fe.grid[g]));
            for (std::size_t k = 0; k < picked.size(); ++k) {
                os << x << ',' << picked[k] << ','
                   << format_real(fe.curves(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(g))) << '\n';
            }
        }
    }
    {
        std::ofstream os = open_output(out / kMainIndexFile);
        os << "draw";
        for (const FactorEffect& fe : report.main) os << ',' << names[static_cast<std::size_t>(fe.factor)];
        os << '\n';
        for (std::size_t k = 0; k < picked.size(); ++k) {
            os << picked[k];
            for (const FactorEffect& fe : report.main) os << ',' << format_real(fe.index[k]);
            os << '\n';
        }
    }
    {
        std::ofstream os = open_output(out / kPairIndexFile);
        os << "draw";
        for (const PairEffect& pe : report.pairs) os << ',' << pair_name(names, pe.j, pe.k);
        os << '\n';
        for (std::size_t k = 0; k < picked.size(); ++k) {
            os << picked[k];
            for (const PairEffect& pe : report.pairs) os << ',' << format_real(pe.index[k]);
            os << '\n';
        }
    }
    {
        std::ofstream os = open_output(out / kIndexSummaryFile);
        os << "effect,kind,mean,median,lo,hi\n";
        summary_row(os, "m0", "overall_mean", report.m0);
        for (const FactorEffect& fe : report.main) summary_row(os, names[static_cast<std::size_t>(fe.factor)], "main", fe.index);
        for (const PairEffect& pe : report.pairs) summary_row(os, pair_name(names, pe.j, pe.k), "interaction", pe.index);
    }
    if (opt.surfaces) {
        for (const PairEffect& pe : report.pairs) {
            const std::string& a = names[static_cast<std::size_t>(pe.j)];
            const std::string& b = names[static_cast<std::size_t>(pe.k)];
            std::ofstream os = open_output(out / ("interaction_" + a + "_" + b + ".csv"));
            os << a << ',' << b << ",draw,effect\n";
            for (std::size_t gj = 0; gj < pe.grid_j.size(); ++gj) {
                const std::string xj = format_real(fit.scaling.invert(pe.j, pe.grid_j[gj]));
                for (std::size_t gk = 0; gk < pe.grid_k.size(); ++gk) {
                    const std::string xk = format_real(fit.scaling.invert(pe.k, pe.grid_k[gk]));
                    for (std::size_t k = 0; k < picked.size(); ++k) {
                        os << xj << ',' << xk << ',' << picked[k] << ','
                           << format_real(pe.surfaces[k](static_cast<Eigen::Index>(gj), static_cast<Eigen::Index>(gk)))
                           << '\n';
                    }
                }
            }
        }
    }
    log << "sensitivity analysis of " << picked.size() << " draws written to " << out.string() << '\n';
}

}  // namespace epical::cli
