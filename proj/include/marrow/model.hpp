#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

namespace marrow {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

/// Maturation stage the leukemic clone inherits its proliferation rate from.
enum class CloneOrigin { ProB, PreB };

std::string_view to_string(CloneOrigin origin);
CloneOrigin clone_origin_from_string(std::string_view name);

/// Raw biological constants. Rates in 1/day, capacities in cells, k in 1/cell,
/// c0 in cells/day.
struct RateConstants {
    double c0 = 1.0e7;
    double rho1 = std::log(2.0);
    double rho2 = std::log(2.0) / 1.5;
    double alpha1 = 0.168;
    double alpha2 = 0.144;
    double alpha3 = 0.288;
    double k = 1.0e-10;
    double gamma_L = 0.288e-3;
    double L_max = 1.0e12;
    CloneOrigin clone_origin = CloneOrigin::ProB;

    bool operator==(const RateConstants&) const = default;
};

/// Validated parameter set. The leukemic proliferation rate is resolved once
/// from the clone origin.
class ModelParameters {
public:
    /// Throws std::invalid_argument when a rate or capacity is not strictly
    /// positive (c0 may be zero) or not finite.
    explicit ModelParameters(const RateConstants& constants);

    static ModelParameters standard(CloneOrigin origin = CloneOrigin::ProB);

    const RateConstants& constants() const { return constants_; }

    double c0() const { return constants_.c0; }
    double rho1() const { return constants_.rho1; }
    double rho2() const { return constants_.rho2; }
    double alpha1() const { return constants_.alpha1; }
    double alpha2() const { return constants_.alpha2; }
    double alpha3() const { return constants_.alpha3; }
    double k() const { return constants_.k; }
    double gamma_L() const { return constants_.gamma_L; }
    double L_max() const { return constants_.L_max; }
    CloneOrigin clone_origin() const { return constants_.clone_origin; }
    double rho_L() const { return rho_L_; }

    ModelParameters with_c0(double c0) const;
    ModelParameters with_origin(CloneOrigin origin) const;

    bool operator==(const ModelParameters& other) const { return constants_ == other.constants_; }

private:
    RateConstants constants_;
    double rho_L_;
};

/// Bone-marrow compartments in cells: Pro-B, Pre-B, transition, leukemic.
struct MarrowState {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double l = 0.0;

    double healthy_total() const { return c1 + c2 + c3; }
    double total() const { return c1 + c2 + c3 + l; }

    Vec4 as_vec() const { return {c1, c2, c3, l}; }
    static MarrowState from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

    bool operator==(const MarrowState&) const = default;
};

/// Healthy steady-state marrow with a single leukemic cell.
MarrowState standard_initial_state();

struct StateDerivative {
    double dc1 = 0.0;
    double dc2 = 0.0;
    double dc3 = 0.0;
    double dl = 0.0;

    Vec4 as_vec() const { return {dc1, dc2, dc3, dl}; }
    bool operator==(const StateDerivative&) const = default;
};

/// s = 1 / (1 + k (L + C1 + C2 + C3)); feedback felt by healthy cells.
double healthy_signal(const ModelParameters& params, const MarrowState& state);

/// s_L = 1 / (1 + k (C1 + C2 + C3)); leukemic cells ignore their own crowding.
double leukemic_signal(const ModelParameters& params, const MarrowState& state);

StateDerivative leukemia_rhs(const ModelParameters& params, const MarrowState& state);

/// Untreated dynamics plus a kill term proportional to each proliferation
/// rate. Transition cells (C3) are unaffected.
StateDerivative treatment_rhs(const ModelParameters& params, const MarrowState& state, double mu);

/// Same right-hand side on an unconstrained 4-vector, used where equilibria
/// with negative components must be evaluated.
Vec4 rhs_vec(const ModelParameters& params, const Vec4& y, double mu = 0.0);

}  // namespace marrow
