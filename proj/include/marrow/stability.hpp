#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <string_view>

#include "marrow/dopri5.hpp"
#include "marrow/model.hpp"

namespace marrow {

/// Newton failure: singular Jacobian or no convergence.
class SteadyStateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct SteadyState {
    Vec4 state{};              // may hold negative components
    double residual_norm = 0;  // ||f(state)||_2, cells/day
    bool include_influx = true;
    bool converged = false;
    int iterations = 0;
};

/// Composite expressions that appear in the closed-form equilibria.
struct ClosedFormConstants {
    double phi;
    double psi;
    double omega;

    static ClosedFormConstants from(const ModelParameters& params);
};

struct ClosedFormCandidate {
    std::string label;
    std::optional<Vec4> state;  // nullopt when a denominator vanishes
};

/// The six equilibria of the untreated system with c0 = 0, in the order
/// origin, leukemia-only, Pre-B/transition-only, healthy, mixed with all
/// compartments, and mixed without Pro-B. Formulas hold for either clone
/// origin. c0 of the given parameters is ignored.
std::array<ClosedFormCandidate, 6> closed_form_steady_states(const ModelParameters& params);

struct NewtonOptions {
    /// Convergence when ||f|| <= tol * rate_scale * max(1, ||x||), with
    /// rate_scale the largest rate constant.
    double tol = 1e-13;
    int max_iterations = 100;
    int max_halvings = 30;
    bool include_influx = true;
};

/// Damped Newton on the untreated right-hand side (with or without c0).
/// Throws SteadyStateError on a singular Jacobian or non-convergence.
SteadyState newton_refine(const ModelParameters& params, const Vec4& guess,
                          const NewtonOptions& options = {});

/// Exact partial derivatives of the untreated right-hand side; c0 does not
/// enter.
Mat4 analytic_jacobian(const ModelParameters& params, const Vec4& state);

using Spectrum = std::array<std::complex<double>, 4>;

/// All four eigenvalues via Hessenberg reduction and shifted QR. Sorted by
/// descending real part; conjugate pairs adjacent with +imag first.
Spectrum eigenvalues_4x4(const Mat4& matrix);

enum class Verdict { Stable, Unstable, Inconclusive };
std::string_view to_string(Verdict verdict);

inline constexpr double kDefaultZeroTol = 1e-9;

Verdict classify(const Spectrum& eigenvalues, double zero_tol = kDefaultZeroTol);

struct StabilityReport {
    std::string label;              // P_L1..P_L6 in survey order
    std::string closed_form_label;  // closed-form candidate used as the guess
    SteadyState steady_state;
    Spectrum eigenvalues{};
    Verdict verdict = Verdict::Inconclusive;
};

/// Refines every closed-form candidate on the system including c0 and
/// classifies it. Reports follow the survey numbering P_L1..P_L6, which
/// differs from the closed-form order.
std::array<StabilityReport, 6> full_stability_survey(const ModelParameters& params,
                                                     const NewtonOptions& options = {},
                                                     double zero_tol = kDefaultZeroTol);

}  // namespace marrow
