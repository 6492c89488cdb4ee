#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "epical/config.hpp"
#include "epical/data_io.hpp"
#include "epical/mcmc.hpp"
#include "epical/posterior.hpp"

namespace epical::cli {

namespace fs = std::filesystem;

struct SimulateOptions {
    std::uint64_t seed = 1;
    fs::path out;
    std::size_t total = 40;
    std::size_t train = 30;
};

struct FitOptions {
    std::uint64_t seed = 1;
    fs::path out;
    fs::path data;
    fs::path cases;
    fs::path covariates;
    fs::path cities;
    double population = 0.0;
    std::string counts = "auto";
    std::size_t shift_days = 11;
    std::string train_start;
    std::string train_end;
    std::string mean_model = "sir";
    bool clamp_negative = false;
    int burn_in = 2000;
    int samples = 2000;
    int thin = 2;
    bool independent_gp = false;
    bool whitened_moves = true;
    unsigned jobs = 1;
    PriorConfig prior;
};

struct PredictOptions {
    std::uint64_t seed = 1;
    fs::path fit_dir;
    fs::path future;
    fs::path out;
    std::size_t horizon = 14;
    double level = 0.95;
    bool draws = false;
};

struct SensitivityCliOptions {
    std::uint64_t seed = 1;
    fs::path fit_dir;
    fs::path out;
    std::vector<std::string> pairs;
    Eigen::Index mc_samples = 2000;
    std::size_t max_draws = 100;
    std::size_t grid_size = 25;
    std::string distribution = "empirical";
    bool surfaces = false;
    unsigned jobs = 1;
};

struct ReportOptions {
    fs::path fit_dir;
    fs::path forecast_dir;
    fs::path sensitivity_dir;
    fs::path out;
    double level = 0.95;
};

CLI::App* add_simulate(CLI::App& app, SimulateOptions& opt);
CLI::App* add_fit(CLI::App& app, FitOptions& opt);
CLI::App* add_predict(CLI::App& app, PredictOptions& opt);
CLI::App* add_sensitivity(CLI::App& app, SensitivityCliOptions& opt);
CLI::App* add_report(CLI::App& app, ReportOptions& opt);

void run_simulate(const SimulateOptions& opt, std::ostream& log);
void run_fit(const FitOptions& opt, std::ostream& log);
void run_predict(const PredictOptions& opt, std::ostream& log);
void run_sensitivity(const SensitivityCliOptions& opt, std::ostream& log);
void run_report(const ReportOptions& opt, std::ostream& log);

/// Everything a fit directory holds, reloaded for downstream commands.
struct FitArtifacts {
    fs::path dir;
    ConfigMap meta;
    ChainSamples chain;
    ObservationSeries train;  // raw covariates, aligned counts
    Scaling scaling;
    Eigen::MatrixXd x_scaled;
    MeanModel model;
};

inline constexpr const char* kMetaFile = "fit.cfg";
inline constexpr const char* kChainFile = "chain.csv";
inline constexpr const char* kTrainFile = "train.csv";
inline constexpr const char* kScalingFile = "scaling.csv";
inline constexpr const char* kFittedFile = "fitted.csv";
inline constexpr const char* kFitSummaryFile = "fit_summary.txt";
inline constexpr const char* kForecastFile = "forecast.csv";
inline constexpr const char* kForecastDrawsFile = "forecast_draws.csv";
inline constexpr const char* kM0File = "m0.csv";
inline constexpr const char* kMainIndexFile = "main_indices.csv";
inline constexpr const char* kPairIndexFile = "interaction_indices.csv";
inline constexpr const char* kIndexSummaryFile = "indices_summary.csv";
inline constexpr const char* kReportFile = "report.txt";
inline constexpr const char* kReportIndexFile = "report_index.json";

FitArtifacts load_fit(const fs::path& dir);

MeanKind parse_mean_kind(const std::string& name);
std::string mean_kind_name(MeanKind kind);

/// Text label of a day number in the series' date convention.
std::string day_label(bool iso, std::int64_t day);
std::int64_t parse_day_label(bool iso, const std::string& label);

/// Open for writing, creating parent directories; throws IoError with the path.
std::ofstream open_output(const fs::path& path);
void require_file(const fs::path& path);

/// Column-wise summaries of a draws x k matrix.
std::vector<Summary> summarize_columns(const Eigen::MatrixXd& draws, double level);

}  // namespace epical::cli
