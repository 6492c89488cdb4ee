#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace epical {

/// Aligned daily counts with one covariate row per day.
///
/// `day_numbers` are integers: days since 1970-01-01 when `iso_dates` is set,
/// otherwise the literal day index from the input.
struct ObservationSeries {
    std::vector<std::string> dates;
    std::vector<std::int64_t> day_numbers;
    bool iso_dates = false;
    std::vector<std::int64_t> y;
    Eigen::MatrixXd x;
    std::vector<std::string> factor_names;
    double population = 0.0;
    std::string city;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return x.cols(); }
    void validate() const;
};

}  // namespace epical
