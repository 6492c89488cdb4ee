#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "epical/series.hpp"

namespace epical {

/// Covariate columns of the standard weather + intervention file, in order.
inline const std::vector<std::string> kDefaultFactors = {"temperature", "humidity",      "wind_speed",
                                                          "pressure",    "precipitation", "intervention"};

enum class CountMode { Auto, Daily, Cumulative };

struct LoadReport {
    bool cumulative = false;
    std::size_t clamped_negatives = 0;
};

/// Days since 1970-01-01 for "YYYY-MM-DD"; throws ParseError.
std::int64_t parse_iso_date(const std::string& text);
std::string format_iso_date(std::int64_t days);

/// Differences of a cumulative series; negative steps are set to 0 and counted.
std::vector<std::int64_t> daily_from_cumulative(std::span<const std::int64_t> cumulative, std::size_t* clamped = nullptr);

/// Nondecreasing with at least one increase.
bool looks_cumulative(std::span<const std::int64_t> counts);

/// A table of covariate rows keyed by date (ISO) or integer day index. When the
/// file also carries a `count` column it is kept in `counts`.
struct CovariateTable {
    std::vector<std::string> dates;
    std::vector<std::int64_t> day_numbers;
    bool iso_dates = false;
    std::vector<std::string> names;
    Eigen::MatrixXd x;
    std::optional<std::vector<std::int64_t>> counts;

    [[nodiscard]] std::size_t size() const noexcept { return dates.size(); }
};

CovariateTable load_covariates(const std::filesystem::path& path);

/// Join a `date,count` case file with a `date,<factors...>` covariate file.
/// Cumulative case files are differenced (auto-detected unless `mode` says otherwise).
/// Throws ParseError, DateGapError or NegativePopulation.
ObservationSeries load_series(const std::filesystem::path& cases, const std::filesystem::path& covariates,
                              double population, CountMode mode = CountMode::Auto, LoadReport* report = nullptr);

/// Single-file form `date,<factors...>,count` as written by write_series.
ObservationSeries load_combined(const std::filesystem::path& path, double population);
void write_series(const std::filesystem::path& path, const ObservationSeries& series);

/// Pair covariate row t with the count reported k days later; drops k days.
/// Throws ShiftTooLarge when k >= series length.
ObservationSeries apply_infectious_shift(const ObservationSeries& series, std::size_t k_days);

/// Rows [begin, end).
ObservationSeries slice(const ObservationSeries& series, std::size_t begin, std::size_t end);

/// Index one past the last row whose date label is <= `last_label`.
std::size_t split_point(const ObservationSeries& series, const std::string& last_label);

/// Per-column min-max map onto [0, 1] fitted on training rows.
struct Scaling {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    [[nodiscard]] Eigen::MatrixXd invert(const Eigen::MatrixXd& x) const;
    [[nodiscard]] double apply(Eigen::Index j, double v) const { return (v - lo[j]) / (hi[j] - lo[j]); }
    [[nodiscard]] double invert(Eigen::Index j, double v) const { return lo[j] + v * (hi[j] - lo[j]); }
};

/// Throws ConstantColumn if a column has fewer than two distinct values.
Scaling fit_scaling(const Eigen::MatrixXd& x);
std::pair<ObservationSeries, Scaling> scale_covariates(const ObservationSeries& series);

void write_scaling(const std::filesystem::path& path, const Scaling& scaling, const std::vector<std::string>& names);
Scaling read_scaling(const std::filesystem::path& path);

/// Benchmark study: x_t ~ U(0,1), y_t ~ Poisson(5 beta(x_t) + gamma(x_t) (t/10)^2)
/// for t = 1..40 with beta(x) = sin(3x) e^{-x} + 0.2 and gamma(x) = sin(3x);
/// days 1..30 train, 31..40 test. Factor name "x", population 1.
struct SyntheticStudy {
    ObservationSeries train;
    ObservationSeries test;

    static double beta_true(double x);
    static double gamma_true(double x);
    static double mean_true(double t, double x);
};

SyntheticStudy make_synthetic(std::uint64_t seed, std::size_t total = 40, std::size_t train = 30);

}  // namespace epical
