#include <cstdio>
#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "common.hpp"
#include "epical/chain_io.hpp"
#include "epical/errors.hpp"

namespace epical::cli {

namespace {

struct CityInput {
    std::string name;
    fs::path cases;
    fs::path covariates;
    fs::path data;
    double population = 0.0;
};

CountMode parse_count_mode(const std::string& s) {
    if (s == "auto") return CountMode::Auto;
    if (s == "daily") return CountMode::Daily;
    if (s == "cumulative") return CountMode::Cumulative;
    throw ConfigError("--counts must be auto, daily or cumulative");
}

// Manifest columns: city,cases,covariates,population (paths relative to the manifest).
std::vector<CityInput> read_manifest(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifact("city manifest not found: " + path.string());
    std::vector<CityInput> out;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            if (line != "city,cases,covariates,population") {
                throw ParseError(path.string() + ": expected header 'city,cases,covariates,population'");
            }
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 4) throw ParseError(path.string() + ": expected 4 fields in '" + line + "'");
        CityInput city;
        city.name = cells[0];
        city.cases = path.parent_path() / cells[1];
        city.covariates = path.parent_path() / cells[2];
        city.population = std::stod(cells[3]);
        out.push_back(std::move(city));
    }
    if (out.empty()) throw ParseError(path.string() + ": no cities listed");
    return out;
}

ObservationSeries windowed(const ObservationSeries& series, const FitOptions& opt) {
    std::size_t begin = 0;
    std::size_t end = series.size();
    if (!opt.train_start.empty()) {
        const std::int64_t first = parse_day_label(series.iso_dates, opt.train_start);
        while (begin < end && series.day_numbers[begin] < first) ++begin;
    }
    if (!opt.train_end.empty()) end = split_point(series, opt.train_end);
    if (begin >= end) throw ConfigError("training window is empty");
    return slice(series, begin, end);
}

void write_fitted(const fs::path& path, const ObservationSeries& train, const ChainSamples& chain,
                  const MeanModel& model) {
    const std::vector<Summary> fitted = summarize_columns(fitted_means(chain, model), 0.95);
    std::ofstream os = open_output(path);
    os << (train.iso_dates ? "date" : "day") << ",observed,mean,median,lo,hi\n";
    for (std::size_t t = 0; t < train.size(); ++t) {
        const Summary& s = fitted[t];
        os << train.dates[t] << ',' << train.y[t] << ',' << format_real(s.mean) << ',' << format_real(s.median) << ','
           << format_real(s.lo) << ',' << format_real(s.hi) << '\n';
    }
}

void write_summary(const fs::path& path, const ObservationSeries& train, const ChainSamples& chain,
                   const FitOptions& opt) {
    std::ofstream os = open_output(path);
    auto rate = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    os << "city: " << train.city << '\n';
    os << "training days: " << train.size() << " (" << train.dates.front() << " to " << train.dates.back() << ")\n";
    os << "factors:";
    for (const auto& name : train.factor_names) os << ' ' << name;
    os << '\n';
    os << "prior: " << (opt.independent_gp ? "independent" : "joint") << " Gaussian processes\n";
    os << "iterations: burn-in " << opt.burn_in << ", sampling " << opt.samples << ", thin " << opt.thin << '\n';
    os << "stored draws: " << chain.size() << '\n';
    os << "acceptance rates\n";
    os << "  beta_gamma: " << rate(chain.acceptance.bg) << '\n';
    if (opt.independent_gp) {
        os << "  rho: not sampled\n";
    } else {
        os << "  rho: " << rate(chain.acceptance.rho) << '\n';
    }
    for (std::size_t j = 0; j < chain.acceptance.phi.size(); ++j) {
        os << "  phi_" << train.factor_names[j] << ": " << rate(chain.acceptance.phi[j]) << '\n';
    }
    if (opt.whitened_moves) os << "  whitened: " << rate(chain.acceptance.whitened) << '\n';
}

void fit_city(const CityInput& city, const fs::path& out, const FitOptions& opt) {
    const MeanKind kind = parse_mean_kind(opt.mean_model);
    ObservationSeries series;
    const bool needs_population = kind == MeanKind::Sir || city.data.empty();
    if (needs_population && !(city.population > 0.0)) {
        throw NegativePopulation("a positive --population is required for city '" + city.name + "'");
    }
    if (!city.data.empty()) {
        series = load_combined(city.data, city.population > 0.0 ? city.population : 1.0);
    } else {
        series = load_series(city.cases, city.covariates, city.population, parse_count_mode(opt.counts));
    }
    series.city = city.name;
    const ObservationSeries train = windowed(apply_infectious_shift(series, opt.shift_days), opt);
    auto [scaled, scaling] = scale_covariates(train);

    MeanModel model;
    model.kind = kind;
    model.clamp_negative = opt.clamp_negative;
    model.first_day = train.iso_dates ? 1.0 : static_cast<double>(train.day_numbers.front());
    if (kind == MeanKind::Sir) {
        const double seed_cases = std::max<double>(static_cast<double>(train.y.front()), 1.0);
        if (seed_cases >= train.population) {
            throw NegativePopulation("population " + format_real(train.population) +
                                     " does not exceed the initial infectious count; pass --population");
        }
        model.initial = Compartments::seeded(train.population, seed_cases);
    }

    ChainConfig cfg;
    cfg.burn_in = opt.burn_in;
    cfg.samples = opt.samples;
    cfg.thin = opt.thin;
    cfg.seed = opt.seed;
    cfg.independent_gp = opt.independent_gp;
    cfg.whitened_moves = opt.whitened_moves;
    const ChainSamples chain = run_chain(scaled, model, opt.prior, cfg);

    fs::create_directories(out);
    write_chain(out / kChainFile, chain);
    write_series(out / kTrainFile, train);
    write_scaling(out / kScalingFile, scaling, train.factor_names);
    write_fitted(out / kFittedFile, train, chain, model);
    write_summary(out / kFitSummaryFile, train, chain, opt);

    std::ofstream meta = open_output(out / kMetaFile);
    meta << "city = " << city.name << '\n'
         << "mean-model = " << mean_kind_name(kind) << '\n'
         << "population = " << format_real(train.population) << '\n'
         << "initial-s = " << format_real(model.initial.s) << '\n'
         << "initial-i = " << format_real(model.initial.i) << '\n'
         << "initial-r = " << format_real(model.initial.r) << '\n'
         << "first-day = " << format_real(model.first_day) << '\n'
         << "clamp-negative = " << (model.clamp_negative ? "true" : "false") << '\n'
         << "shift-days = " << opt.shift_days << '\n'
         << "independent-gp = " << (opt.independent_gp ? "true" : "false") << '\n'
         << "seed = " << opt.seed << '\n';
}

}  // namespace

CLI::App* add_fit(CLI::App& app, FitOptions& opt) {
    CLI::App* sub = app.add_subcommand("fit", "Run the MCMC sampler and write the chain and fit summaries");
    sub->add_option("--out", opt.out, "Output directory (one subdirectory per city with --cities)")->required();
    auto* data = sub->add_option("--data", opt.data, "Combined file: date|day,<factors...>,count");
    auto* cases = sub->add_option("--cases", opt.cases, "Case file: date,count (daily or cumulative)");
    auto* cov = sub->add_option("--covariates", opt.covariates, "Covariate file: date,<factors...>");
    auto* cities = sub->add_option("--cities", opt.cities, "Manifest city,cases,covariates,population");
    data->excludes(cases)->excludes(cities);
    cases->needs(cov)->excludes(cities);
    cov->needs(cases);
    sub->add_option("--population", opt.population, "City population N");
    sub->add_option("--counts", opt.counts, "Case-file type: auto, daily or cumulative")->capture_default_str();
    sub->add_option("--shift-days", opt.shift_days, "Days from infection to confirmation")->capture_default_str();
    sub->add_option("--train-start", opt.train_start, "First training date (after the shift)");
    sub->add_option("--train-end", opt.train_end, "Last training date (after the shift)");
    sub->add_option("--mean-model", opt.mean_model, "Mean model: sir or test")
        ->check(CLI::IsMember({"sir", "test"}))
        ->capture_default_str();
    sub->add_flag("--clamp-negative", opt.clamp_negative, "Clamp negative SIR states at zero instead of rejecting");
    sub->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    sub->add_option("--burn-in", opt.burn_in, "Burn-in iterations")->capture_default_str();
    sub->add_option("--samples", opt.samples, "Sampling iterations after burn-in")->capture_default_str();
    sub->add_option("--thin", opt.thin, "Keep every k-th sampling iteration")->capture_default_str();
    sub->add_flag("--independent-gp", opt.independent_gp, "Fix rho = 0 (independent priors for beta and gamma)");
    sub->add_flag("--whitened-moves,!--no-whitened-moves", opt.whitened_moves,
                  "Extra hyperparameter moves with the whitened field held fixed (default on)");
    sub->add_option("--jobs", opt.jobs, "Cities fitted concurrently")->capture_default_str();
    sub->add_option("--prior-a", opt.prior.a, "Inverse-gamma shape for tau")->capture_default_str();
    sub->add_option("--prior-b", opt.prior.b, "Inverse-gamma rate for tau")->capture_default_str();
    sub->add_option("--b-rho", opt.prior.b_rho, "Beta(1, b) shape for rho")->capture_default_str();
    sub->add_option("--b-phi", opt.prior.b_phi, "Beta(1, b) shape for each phi")->capture_default_str();
    sub->add_option("--alpha1", opt.prior.alpha1, "Prior mean of mu1")->capture_default_str();
    sub->add_option("--alpha2", opt.prior.alpha2, "Prior mean of mu2")->capture_default_str();
    sub->add_option("--sigma2-1", opt.prior.sigma2_1, "Prior variance of mu1")->capture_default_str();
    sub->add_option("--sigma2-2", opt.prior.sigma2_2, "Prior variance of mu2")->capture_default_str();
    return sub;
}

void run_fit(const FitOptions& opt, std::ostream& log) {
    if (opt.jobs < 1) throw ConfigError("--jobs must be at least 1");
    if (opt.cities.empty()) {
        CityInput city;
        city.data = opt.data;
        city.cases = opt.cases;
        city.covariates = opt.covariates;
        city.population = opt.population;
        if (city.data.empty() && city.cases.empty()) throw ConfigError("fit needs --data, --cases/--covariates or --cities");
        city.name = !city.data.empty() ? city.data.stem().string() : city.cases.parent_path().filename().string();
        fit_city(city, opt.out, opt);
        log << "fit written to " << opt.out.string() << '\n';
        return;
    }

    const std::vector<CityInput> cities = read_manifest(opt.cities);
    std::atomic<std::size_t> next{0};
    std::mutex guard;
    std::vector<std::string> failures;
    std::optional<ErrorKind> worst;
    auto worker = [&] {
        for (std::size_t k = next++; k < cities.size(); k = next++) {
            try {
                fit_city(cities[k], opt.out / cities[k].name, opt);
            } catch (const Error& e) {
                const std::lock_guard lock(guard);
                failures.push_back(cities[k].name + ": " + e.what());
                if (!worst || e.kind() == ErrorKind::Numerical) worst = e.kind();
            }
        }
    };
    const unsigned jobs = std::min<unsigned>(opt.jobs, static_cast<unsigned>(cities.size()));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (const auto& c : cities) {
        if (fs::exists(opt.out / c.name / kChainFile)) log << "fit written to " << (opt.out / c.name).string() << '\n';
    }
    if (!failures.empty()) {
        std::string msg = "fit failed for " + std::to_string(failures.size()) + " cities:";
        for (const auto& f : failures) msg += "\n  " + f;
        if (worst == ErrorKind::Numerical) throw SamplerFailure(msg);
        throw ParseError(msg);
    }
}

}  // namespace epical::cli
