#include "epical/sir.hpp"

#include <cmath>
#include <string>

#include "epical/errors.hpp"

namespace epical {

Compartments Compartments::seeded(double population, double infectious) {
    if (!(population > 0.0)) {
        throw NegativePopulation("population must be positive, got " + std::to_string(population));
    }
    Compartments c;
    c.n = population;
    c.i = infectious;
    c.r = 0.0;
    c.s = population - infectious;
    c.validate();
    return c;
}

void Compartments::validate() const {
    if (!(n > 0.0)) throw DegenerateState("population must be positive");
    if (s < 0.0 || i < 0.0 || r < 0.0) throw DegenerateState("negative compartment");
    if (std::abs(imbalance()) > 1e-9 * n) throw DegenerateState("s + i + r does not sum to n");
}

void ParamPath::validate() const {
    if (beta.size() != gamma.size()) {
        throw DimensionMismatch("beta and gamma paths differ in length");
    }
    for (std::size_t t = 0; t < beta.size(); ++t) {
        if (!(beta[t] > 0.0 && beta[t] < 1.0) || !(gamma[t] > 0.0 && gamma[t] < 1.0)) {
            throw DomainError("rate outside (0,1) at day index " + std::to_string(t));
        }
    }
}

Compartments sir_step(const Compartments& c, double beta, double gamma, bool clamp_negative) {
    Compartments next;
    next.n = c.n;
    next.i = (1.0 + beta - gamma) * c.i - beta * c.i * (c.i + c.r) / c.n;
    next.r = c.r + gamma * c.i;
    next.s = c.n - next.i - next.r;
    if (next.i < 0.0 || next.s < 0.0) {
        if (!clamp_negative) {
            throw DegenerateState("SIR step left the feasible region (i'=" + std::to_string(next.i) +
                                  ", s'=" + std::to_string(next.s) + ")");
        }
        // Clamp while keeping s + i + r = n.
        if (next.i < 0.0) {
            next.i = 0.0;
            next.s = c.n - next.r;
        }
        if (next.s < 0.0) {
            next.s = 0.0;
            next.i = c.n - next.r;
        }
    }
    return next;
}

double test_mean(double t, double beta, double gamma) noexcept {
    const double scaled = t / 10.0;
    return 5.0 * beta + gamma * scaled * scaled;
}

Rollout roll_forward(const MeanModel& model, const ParamPath& path) {
    if (path.beta.size() != path.gamma.size()) {
        throw DimensionMismatch("beta and gamma paths differ in length");
    }
    Rollout out;
    out.mean.reserve(path.size());
    if (model.kind == MeanKind::Test) {
        for (std::size_t t = 0; t < path.size(); ++t) {
            out.mean.push_back(test_mean(model.first_day + static_cast<double>(t), path.beta[t], path.gamma[t]));
        }
        out.final_state = model.initial;
        return out;
    }
    Compartments state = model.initial;
    for (std::size_t t = 0; t < path.size(); ++t) {
        const Compartments next = sir_step(state, path.beta[t], path.gamma[t], model.clamp_negative);
        out.mean.push_back(state.s - next.s);
        state = next;
    }
    out.final_state = state;
    return out;
}

std::vector<double> mean_curve(const MeanModel& model, const ParamPath& path) {
    if (path.size() == 0) throw DimensionMismatch("empty parameter path");
    Rollout rollout = roll_forward(model, path);
    for (std::size_t t = 0; t < rollout.mean.size(); ++t) {
        if (!(rollout.mean[t] > 0.0)) {
            throw NonpositiveMean("mean at day index " + std::to_string(t) + " is " +
                                  std::to_string(rollout.mean[t]));
        }
    }
    return std::move(rollout.mean);
}

MeanModel continued(const MeanModel& model, const Rollout& rollout, std::size_t days) {
    MeanModel next = model;
    next.initial = rollout.final_state;
    next.first_day = model.first_day + static_cast<double>(days);
    return next;
}

}  // namespace epical
