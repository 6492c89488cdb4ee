#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "epical/chain_io.hpp"
#include "epical/cli.hpp"
#include "epical/data_io.hpp"
#include "epical/errors.hpp"
#include "epical/gp_prior.hpp"
#include "epical/mcmc.hpp"
#include "epical/posterior.hpp"
#include "epical/sensitivity.hpp"
#include "epical/sir.hpp"

namespace py = pybind11;
using namespace epical;

namespace {

MeanModel make_model(const std::string& kind, double population, double initial_infectious, double first_day,
                     bool clamp_negative) {
    MeanModel model;
    if (kind == "sir") {
        model.kind = MeanKind::Sir;
    } else if (kind == "test") {
        model.kind = MeanKind::Test;
    } else {
        throw ConfigError("mean model must be 'sir' or 'test'");
    }
    model.initial = Compartments::seeded(population, initial_infectious);
    model.first_day = first_day;
    model.clamp_negative = clamp_negative;
    return model;
}

ObservationSeries make_series(const Eigen::MatrixXd& x, const std::vector<std::int64_t>& y, double population) {
    ObservationSeries s;
    s.x = x;
    s.y = y;
    s.population = population;
    for (std::size_t t = 0; t < y.size(); ++t) {
        s.day_numbers.push_back(static_cast<std::int64_t>(t + 1));
        s.dates.push_back(std::to_string(t + 1));
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j) s.factor_names.push_back("x" + std::to_string(j + 1));
    s.validate();
    return s;
}

Eigen::MatrixXd path_matrix(const ChainSamples& chain, bool beta) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(chain.size()), static_cast<Eigen::Index>(chain.days()));
    for (std::size_t k = 0; k < chain.size(); ++k) {
        const auto& v = beta ? chain.draws[k].path.beta : chain.draws[k].path.gamma;
        for (std::size_t t = 0; t < v.size(); ++t) out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = v[t];
    }
    return out;
}

template <class F>
Eigen::VectorXd hyper_column(const ChainSamples& chain, F get) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(chain.size()));
    for (std::size_t k = 0; k < chain.size(); ++k) out[static_cast<Eigen::Index>(k)] = get(chain.draws[k].psi);
    return out;
}

py::dict series_dict(const ObservationSeries& s) {
    py::dict d;
    d["day"] = s.day_numbers;
    d["x"] = s.x;
    d["y"] = s.y;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Covariate-dependent SIR calibration with Gaussian-process priors";

    py::register_exception<Error>(m, "EpicalError");

    m.def("logit", &logit, py::arg("p"));
    m.def("inv_logit", &inv_logit, py::arg("z"));
    m.def("correlation", [](const Eigen::MatrixXd& xq, const Eigen::MatrixXd& x, const Eigen::VectorXd& phi) {
        return cross_correlation(xq, x, phi);
    }, py::arg("xq"), py::arg("x"), py::arg("phi"), "Matrix of prod_j phi_j^{4 (xq_j - x_j)^2}");

    m.def("sir_step", [](double s, double i, double r, double n, double beta, double gamma, bool clamp) {
        const Compartments c = sir_step(Compartments{s, i, r, n}, beta, gamma, clamp);
        return py::make_tuple(c.s, c.i, c.r);
    }, py::arg("s"), py::arg("i"), py::arg("r"), py::arg("n"), py::arg("beta"), py::arg("gamma"),
          py::arg("clamp_negative") = false, "One day of the SIR recursion; returns (s, i, r)");

    m.def("mean_curve", [](const std::vector<double>& beta, const std::vector<double>& gamma, const std::string& kind,
                           double population, double initial_infectious, double first_day) {
        return mean_curve(make_model(kind, population, initial_infectious, first_day, false), ParamPath{beta, gamma});
    }, py::arg("beta"), py::arg("gamma"), py::arg("mean_model") = "sir", py::arg("population") = 1.0,
          py::arg("initial_infectious") = 0.0, py::arg("first_day") = 1.0, "Daily Poisson means along a rate path");

    m.def("make_synthetic", [](std::uint64_t seed, std::size_t total, std::size_t train) {
        const SyntheticStudy study = make_synthetic(seed, total, train);
        py::dict d;
        d["train"] = series_dict(study.train);
        d["test"] = series_dict(study.test);
        return d;
    }, py::arg("seed"), py::arg("total") = 40, py::arg("train") = 30, "Benchmark study with known rate functions");
    m.def("beta_true", &SyntheticStudy::beta_true, py::arg("x"));
    m.def("gamma_true", &SyntheticStudy::gamma_true, py::arg("x"));

    py::class_<ChainSamples>(m, "Chain", "Stored posterior draws")
        .def("__len__", &ChainSamples::size)
        .def_property_readonly("days", &ChainSamples::days)
        .def_property_readonly("beta", [](const ChainSamples& c) { return path_matrix(c, true); })
        .def_property_readonly("gamma", [](const ChainSamples& c) { return path_matrix(c, false); })
        .def_property_readonly("rho", [](const ChainSamples& c) { return hyper_column(c, [](const Hyperparams& h) { return h.rho; }); })
        .def_property_readonly("tau", [](const ChainSamples& c) { return hyper_column(c, [](const Hyperparams& h) { return h.tau; }); })
        .def_property_readonly("mu", [](const ChainSamples& c) {
            Eigen::MatrixXd out(static_cast<Eigen::Index>(c.size()), 2);
            for (std::size_t k = 0; k < c.size(); ++k) {
                out(static_cast<Eigen::Index>(k), 0) = c.draws[k].psi.mu1;
                out(static_cast<Eigen::Index>(k), 1) = c.draws[k].psi.mu2;
            }
            return out;
        })
        .def_property_readonly("phi", [](const ChainSamples& c) {
            Eigen::MatrixXd out(static_cast<Eigen::Index>(c.size()), c.dim());
            for (std::size_t k = 0; k < c.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = c.draws[k].psi.phi.transpose();
            return out;
        })
        .def_property_readonly("acceptance", [](const ChainSamples& c) {
            py::dict d;
            d["beta_gamma"] = c.acceptance.bg;
            d["rho"] = c.acceptance.rho;
            d["phi"] = c.acceptance.phi;
            d["whitened"] = c.acceptance.whitened;
            return d;
        })
        .def("save", [](const ChainSamples& c, const std::string& path) { write_chain(std::filesystem::path(path), c); })
        .def_static("load", [](const std::string& path) { return read_chain(std::filesystem::path(path)); });

    m.def("run_chain", [](const Eigen::MatrixXd& x, const std::vector<std::int64_t>& y, const std::string& mean_model,
                          double population, double initial_infectious, double first_day, int burn_in, int samples,
                          int thin, std::uint64_t seed, bool independent_gp, bool whitened_moves) {
        const ObservationSeries data = make_series(x, y, population);
        const MeanModel model = make_model(mean_model, population, initial_infectious, first_day, false);
        ChainConfig cfg;
        cfg.burn_in = burn_in;
        cfg.samples = samples;
        cfg.thin = thin;
        cfg.seed = seed;
        cfg.independent_gp = independent_gp;
        cfg.whitened_moves = whitened_moves;
        py::gil_scoped_release release;
        return run_chain(data, model, PriorConfig{}, cfg);
    }, py::arg("x"), py::arg("y"), py::arg("mean_model") = "test", py::arg("population") = 1.0,
          py::arg("initial_infectious") = 0.0, py::arg("first_day") = 1.0, py::arg("burn_in") = 2000,
          py::arg("samples") = 2000, py::arg("thin") = 2, py::arg("seed") = 1, py::arg("independent_gp") = false,
          py::arg("whitened_moves") = true, "Posterior sampling of the rate paths and hyperparameters");

    m.def("rate_means", [](const ChainSamples& chain, const Eigen::MatrixXd& xq, const Eigen::MatrixXd& x_train) {
        const RateSurfaces r = rate_conditional_means(xq, chain, x_train);
        return py::make_tuple(r.beta, r.gamma);
    }, py::arg("chain"), py::arg("xq"), py::arg("x_train"), "Per-draw conditional-mean rates (beta, gamma) at xq");

    m.def("predict", [](const ChainSamples& chain, const Eigen::MatrixXd& x_future, const Eigen::MatrixXd& x_train,
                        const std::string& mean_model, double population, double initial_infectious, double first_day,
                        std::uint64_t seed) {
        Rng rng(seed);
        const PredictiveDraws d = predictive_samples(
            x_future, chain, x_train, make_model(mean_model, population, initial_infectious, first_day, false), rng);
        return py::make_tuple(d.y, d.lambda);
    }, py::arg("chain"), py::arg("x_future"), py::arg("x_train"), py::arg("mean_model") = "test",
          py::arg("population") = 1.0, py::arg("initial_infectious") = 0.0, py::arg("first_day") = 1.0,
          py::arg("seed") = 1, "Posterior-predictive (counts, means) for the days after training");

    m.def("sobol_indices", [](const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& g, Eigen::Index dim,
                              Eigen::Index samples, std::uint64_t seed) {
        const FactorDistribution dist =
            FactorDistribution::uniform(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
        const IntegrationDesign design = make_design(dist, samples, seed);
        AnovaEstimator est(g, design);
        py::dict d;
        std::vector<double> main;
        for (Eigen::Index j = 0; j < dim; ++j) main.push_back(est.main_index(j).value);
        py::dict pairs;
        for (Eigen::Index j = 0; j < dim; ++j) {
            for (Eigen::Index k = j + 1; k < dim; ++k) pairs[py::make_tuple(j, k)] = est.interaction_index(j, k).value;
        }
        d["mean"] = est.overall_mean();
        d["variance"] = est.variance();
        d["main"] = main;
        d["interaction"] = pairs;
        return d;
    }, py::arg("g"), py::arg("dim"), py::arg("samples") = 10000, py::arg("seed") = 1,
          "Main and pairwise interaction indices of a vectorized g on the unit cube");

    m.def("cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Run the command-line tool in process; returns (exit_code, stdout, stderr)");
}
