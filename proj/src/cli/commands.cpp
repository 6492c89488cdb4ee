#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "common.hpp"
#include "epical/chain_io.hpp"
#include "epical/cli.hpp"
#include "epical/errors.hpp"

namespace epical::cli {

namespace {

const std::vector<std::string> kCommands = {"simulate", "fit", "predict", "sensitivity", "report"};

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage:
            return kUsage;
        case ErrorKind::Data:
            return kData;
        case ErrorKind::Numerical:
            return kNumerical;
    }
    return kNumerical;
}

std::optional<std::string> config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return std::nullopt;
}

bool has_option(const std::vector<std::string>& args, const std::string& name) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == name || a.rfind(name + "=", 0) == 0; });
}

// Splices config-file values and EPICAL_SEED in front of the user's own
// tokens; with TakeLast on every option the later command-line value wins.
std::vector<std::string> merged_arguments(const CLI::App& app, const std::vector<std::string>& args) {
    const auto command = std::find_if(args.begin(), args.end(), [](const std::string& a) {
        return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
    });
    if (command == args.end()) return args;
    const CLI::App* sub = app.get_subcommand(*command);

    std::vector<std::string> out{*command};
    if (const auto path = config_path(args)) {
        std::set<std::string> known;
        for (const auto& name : kCommands) {
            for (const CLI::Option* opt : app.get_subcommand(name)->get_options()) known.insert(opt->get_lnames().begin(), opt->get_lnames().end());
        }
        for (const auto& [key, value] : read_config(*path)) {
            if (!known.count(key)) throw ConfigError(*path + ": unknown key '" + key + "'");
            if (key == "config") continue;
            if (sub->get_option_no_throw("--" + key) != nullptr) out.push_back("--" + key + "=" + value);
        }
    }
    if (const char* env = std::getenv("EPICAL_SEED"); env != nullptr && *env != '\0') {
        if (sub->get_option_no_throw("--seed") != nullptr && !has_option(args, "--seed")) {
            out.push_back(std::string("--seed=") + env);
        }
    }
    for (auto it = args.begin(); it != args.end(); ++it) {
        if (it != command) out.push_back(*it);
    }
    return out;
}

}  // namespace

MeanKind parse_mean_kind(const std::string& name) {
    if (name == "sir") return MeanKind::Sir;
    if (name == "test") return MeanKind::Test;
    throw ConfigError("unknown mean model '" + name + "' (expected sir or test)");
}

std::string mean_kind_name(MeanKind kind) { return kind == MeanKind::Sir ? "sir" : "test"; }

std::string day_label(bool iso, std::int64_t day) { return iso ? format_iso_date(day) : std::to_string(day); }

std::int64_t parse_day_label(bool iso, const std::string& label) {
    if (iso) return parse_iso_date(label);
    try {
        std::size_t used = 0;
        const long long v = std::stoll(label, &used);
        if (used == label.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("not a day index: '" + label + "'");
}

std::ofstream open_output(const fs::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    return os;
}

void require_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw MissingArtifact("required file not found: " + path.string());
}

std::vector<Summary> summarize_columns(const Eigen::MatrixXd& draws, double level) {
    std::vector<Summary> out;
    out.reserve(static_cast<std::size_t>(draws.cols()));
    for (Eigen::Index c = 0; c < draws.cols(); ++c) {
        const Eigen::VectorXd col = draws.col(c);
        out.push_back(summarize(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), level));
    }
    return out;
}

FitArtifacts load_fit(const fs::path& dir) {
    FitArtifacts fit;
    fit.dir = dir;
    for (const char* name : {kMetaFile, kChainFile, kTrainFile, kScalingFile}) require_file(dir / name);
    fit.meta = read_config(dir / kMetaFile);
    auto value = [&](const std::string& key) -> const std::string& {
        const auto it = fit.meta.find(key);
        if (it == fit.meta.end()) throw ParseError((dir / kMetaFile).string() + ": missing key '" + key + "'");
        return it->second;
    };
    fit.chain = read_chain(dir / kChainFile);
    fit.train = load_combined(dir / kTrainFile, std::stod(value("population")));
    fit.train.city = value("city");
    fit.scaling = read_scaling(dir / kScalingFile);
    fit.x_scaled = fit.scaling.apply(fit.train.x);
    if (static_cast<Eigen::Index>(fit.chain.days()) != fit.x_scaled.rows()) {
        throw DimensionMismatch("chain has " + std::to_string(fit.chain.days()) + " days but training data has " +
                                std::to_string(fit.x_scaled.rows()) + " rows");
    }
    fit.model.kind = parse_mean_kind(value("mean-model"));
    fit.model.initial.s = std::stod(value("initial-s"));
    fit.model.initial.i = std::stod(value("initial-i"));
    fit.model.initial.r = std::stod(value("initial-r"));
    fit.model.initial.n = fit.train.population;
    fit.model.first_day = std::stod(value("first-day"));
    fit.model.clamp_negative = value("clamp-negative") == "true";
    return fit;
}

CLI::App* add_simulate(CLI::App& app, SimulateOptions& opt) {
    CLI::App* sub = app.add_subcommand("simulate", "Generate the synthetic benchmark study (train, test and truth files)");
    sub->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    sub->add_option("--out", opt.out, "Output directory")->required();
    sub->add_option("--total", opt.total, "Total number of days")->capture_default_str();
    sub->add_option("--train", opt.train, "Number of leading days used for training")->capture_default_str();
    return sub;
}

void run_simulate(const SimulateOptions& opt, std::ostream& log) {
    const SyntheticStudy study = make_synthetic(opt.seed, opt.total, opt.train);
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (ec) throw IoError("cannot create " + opt.out.string() + ": " + ec.message());
    write_series(opt.out / "train.csv", study.train);
    write_series(opt.out / "test.csv", study.test);

    std::ofstream os = open_output(opt.out / "truth.csv");
    os << "day,x,beta,gamma,mean\n";
    for (const ObservationSeries* part : {&study.train, &study.test}) {
        for (std::size_t t = 0; t < part->size(); ++t) {
            const double x = part->x(static_cast<Eigen::Index>(t), 0);
            const auto day = static_cast<double>(part->day_numbers[t]);
            os << part->day_numbers[t] << ',' << format_real(x) << ',' << format_real(SyntheticStudy::beta_true(x))
               << ',' << format_real(SyntheticStudy::gamma_true(x)) << ','
               << format_real(SyntheticStudy::mean_true(day, x)) << '\n';
        }
    }
    if (!os) throw IoError("write failed: " + (opt.out / "truth.csv").string());
    log << "wrote " << study.train.size() << " training and " << study.test.size() << " test days to "
        << opt.out.string() << '\n';
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Covariate-dependent SIR calibration with joint Gaussian-process priors", "epical"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    SimulateOptions simulate;
    FitOptions fit;
    PredictOptions predict;
    SensitivityCliOptions sensitivity;
    ReportOptions report;
    CLI::App* simulate_cmd = add_simulate(app, simulate);
    CLI::App* fit_cmd = add_fit(app, fit);
    CLI::App* predict_cmd = add_predict(app, predict);
    CLI::App* sensitivity_cmd = add_sensitivity(app, sensitivity);
    CLI::App* report_cmd = add_report(app, report);
    std::string config_file;
    for (CLI::App* sub : {simulate_cmd, fit_cmd, predict_cmd, sensitivity_cmd, report_cmd}) {
        sub->add_option("--config", config_file, "Flat key = value file; keys are long flag names without dashes");
    }

    try {
        std::vector<std::string> tokens = merged_arguments(app, args);
        std::reverse(tokens.begin(), tokens.end());
        app.parse(tokens);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
            return kSuccess;
        }
        err << "epical: " << e.what() << "\nRun with --help for usage.\n";
        return kUsage;
    } catch (const Error& e) {
        err << "epical: " << e.what() << '\n';
        return exit_code_for(e.kind());
    }

    try {
        if (simulate_cmd->parsed()) run_simulate(simulate, out);
        if (fit_cmd->parsed()) run_fit(fit, out);
        if (predict_cmd->parsed()) run_predict(predict, out);
        if (sensitivity_cmd->parsed()) run_sensitivity(sensitivity, out);
        if (report_cmd->parsed()) run_report(report, out);
    } catch (const Error& e) {
        err << "epical: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "epical: " << e.what() << '\n';
        return kData;
    } catch (const std::invalid_argument& e) {
        err << "epical: invalid value: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        err << "epical: " << e.what() << '\n';
        return kNumerical;
    }
    return kSuccess;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace epical::cli
