#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace marrow {

/// Raised when integration cannot proceed (step-size underflow, step budget
/// exhausted, a state leaving its admissible region).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Embedded Dormand-Prince 5(4) integrator with the 4th-order continuous
/// extension for dense output. Steps are never taken past the requested end
/// time, so callers can restart it at discontinuities.
class DormandPrince45 {
public:
    using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
    /// Called for every requested output time, in ascending order.
    using Observer = std::function<void(double t, std::span<const double> y)>;
    /// Called after each accepted step with the new state; may throw.
    using StepCheck = std::function<void(double t, std::span<const double> y)>;

    struct Settings {
        double rel_tol = 1e-8;
        std::vector<double> abs_tol; // one per component
        double max_step = 1.0;
        double initial_step = 1e-3;
        std::size_t max_steps = 5'000'000;
    };

    struct Statistics {
        std::size_t accepted = 0;
        std::size_t rejected = 0;
        std::size_t rhs_evaluations = 0;
    };

    DormandPrince45(Rhs rhs, std::size_t dimension, Settings settings);

    /// Advances y from t0 to t1. Output times must be ascending and lie in
    /// [t0, t1]; each is reported through the dense interpolant (t0 reports
    /// the initial state exactly, t1 the final state exactly).
    void integrate(double t0, double t1, std::vector<double>& y,
                   std::span<const double> output_times = {}, const Observer& observer = {},
                   const StepCheck& check = {});

    /// Classical fixed-step 5th-order propagation, used for convergence checks.
    void integrate_fixed(double t0, double t1, std::size_t steps, std::vector<double>& y);

    const Statistics& statistics() const { return stats_; }
    std::size_t dimension() const { return n_; }

private:
    double error_norm(std::span<const double> y0, std::span<const double> y1) const;
    void stage_step(double t, double h, std::span<const double> y);
    void dense_eval(double theta, double h, std::span<double> out) const;

    Rhs rhs_;
    std::size_t n_;
    Settings settings_;
    Statistics stats_;
    double h_suggest_;

    std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_, yerr_;
    std::vector<double> r1_, r2_, r3_, r4_, r5_;
};

}  // namespace marrow
