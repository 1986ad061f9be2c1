#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "impobs/matrix.hpp"

namespace impobs {

using VectorField = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;

struct IntegratorOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double initial_step = 0.0;  // 0 selects one automatically
    double max_step = 0.0;      // 0 means t1 - t0
    std::size_t max_steps = 10'000'000;
};

struct IntegratorStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
};

// Piecewise quartic continuous extension of the Dormand-Prince pair over
// [t0, t1]; exact (to the step's accuracy) at every step boundary.
class DenseTrajectory {
public:
    DenseTrajectory() = default;
    DenseTrajectory(double t0, std::size_t dim) : t0_(t0), t1_(t0), dim_(dim) {}

    double t0() const noexcept { return t0_; }
    double t1() const noexcept { return t1_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t steps() const noexcept { return starts_.size(); }
    const Vector& final_state() const noexcept { return final_; }
    const IntegratorStats& stats() const noexcept { return stats_; }

    void eval(double t, std::span<double> out) const;
    Vector operator()(double t) const;

private:
    friend DenseTrajectory integrate_flow(const VectorField&, double, double, std::span<const double>,
                                          const IntegratorOptions&);

    double t0_ = 0.0;
    double t1_ = 0.0;
    std::size_t dim_ = 0;
    std::vector<double> starts_;
    std::vector<double> widths_;
    std::vector<double> coeffs_;  // 5 * dim per step
    Vector final_;
    IntegratorStats stats_;
};

// Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) with PI step control.
// The last step is shortened to land exactly on t1. Throws IntegrationError
// (carrying the last good time) on step-size underflow or non-finite state.
DenseTrajectory integrate_flow(const VectorField& field, double t0, double t1, std::span<const double> x0,
                               const IntegratorOptions& options = {});

}  // namespace impobs
