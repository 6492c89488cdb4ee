#pragma once

#include <cstddef>
#include <vector>

namespace epical {

/// One day's state of the discrete SIR system. Counts are real-valued.
struct Compartments {
    double s = 0.0;
    double i = 0.0;
    double r = 0.0;
    double n = 1.0;

    /// s = n - i - r with r = 0.
    static Compartments seeded(double population, double infectious);

    [[nodiscard]] double imbalance() const noexcept { return s + i + r - n; }
    void validate() const;
};

/// Day-indexed contact and removal rates, beta_t = beta(x_t), gamma_t = gamma(x_t).
struct ParamPath {
    std::vector<double> beta;
    std::vector<double> gamma;

    [[nodiscard]] std::size_t size() const noexcept { return beta.size(); }
    void validate() const;
};

enum class MeanKind { Sir, Test };

/// Maps a parameter path onto daily Poisson means.
///
/// Sir: lambda_t = s(t-1) - s(t) along the modified SIR recursion started at `initial`.
/// Test: lambda_t = 5 beta_t + gamma_t (t / 10)^2, the analytic benchmark model.
/// The first entry of a path is day `first_day`.
struct MeanModel {
    MeanKind kind = MeanKind::Sir;
    Compartments initial{};
    double first_day = 1.0;
    bool clamp_negative = false;
};

/// Advance the discrete SIR recursion one day.
/// Throws DegenerateState if i' or s' would be negative, unless `clamp_negative`.
Compartments sir_step(const Compartments& c, double beta, double gamma, bool clamp_negative = false);

struct Rollout {
    std::vector<double> mean;
    Compartments final_state{};
};

/// Daily means plus the state after the last day. Does not check positivity.
Rollout roll_forward(const MeanModel& model, const ParamPath& path);

/// Daily means; throws NonpositiveMean if any mean is <= 0.
std::vector<double> mean_curve(const MeanModel& model, const ParamPath& path);

/// Model that picks up where `rollout` of `days` steps under `model` ended.
MeanModel continued(const MeanModel& model, const Rollout& rollout, std::size_t days);

double test_mean(double t, double beta, double gamma) noexcept;

}  // namespace epical
