#include "marrow/model.hpp"

#include <stdexcept>

namespace marrow {

std::string_view to_string(CloneOrigin origin) {
    return origin == CloneOrigin::ProB ? "ProB" : "PreB";
}

CloneOrigin clone_origin_from_string(std::string_view name) {
    if (name == "ProB") return CloneOrigin::ProB;
    if (name == "PreB") return CloneOrigin::PreB;
    throw std::invalid_argument("unknown clone origin '" + std::string(name) +
                                "' (expected ProB or PreB)");
}

namespace {

void require_positive(double value, const char* name) {
    if (!std::isfinite(value) || value <= 0.0) {
        throw std::invalid_argument(std::string("parameter ") + name +
                                    " must be finite and > 0");
    }
}

}  // namespace

ModelParameters::ModelParameters(const RateConstants& constants) : constants_(constants) {
    if (!std::isfinite(constants.c0) || constants.c0 < 0.0) {
        throw std::invalid_argument("parameter c0 must be finite and >= 0");
    }
    require_positive(constants.rho1, "rho1");
    require_positive(constants.rho2, "rho2");
    require_positive(constants.alpha1, "alpha1");
    require_positive(constants.alpha2, "alpha2");
    require_positive(constants.alpha3, "alpha3");
    require_positive(constants.k, "k");
    require_positive(constants.gamma_L, "gamma_L");
    require_positive(constants.L_max, "L_max");
    rho_L_ = constants.clone_origin == CloneOrigin::ProB ? constants.rho1 : constants.rho2;
}

ModelParameters ModelParameters::standard(CloneOrigin origin) {
    RateConstants c;
    c.clone_origin = origin;
    return ModelParameters(c);
}

ModelParameters ModelParameters::with_c0(double c0) const {
    RateConstants c = constants_;
    c.c0 = c0;
    return ModelParameters(c);
}

ModelParameters ModelParameters::with_origin(CloneOrigin origin) const {
    RateConstants c = constants_;
    c.clone_origin = origin;
    return ModelParameters(c);
}

MarrowState standard_initial_state() {
    return {3.52211e9, 1.84911e10, 9.24555e9, 1.0};
}

double healthy_signal(const ModelParameters& params, const MarrowState& state) {
    return 1.0 / (1.0 + params.k() * (state.l + state.c1 + state.c2 + state.c3));
}

double leukemic_signal(const ModelParameters& params, const MarrowState& state) {
    return 1.0 / (1.0 + params.k() * (state.c1 + state.c2 + state.c3));
}

Vec4 rhs_vec(const ModelParameters& params, const Vec4& y, double mu) {
    const double c1 = y[0], c2 = y[1], c3 = y[2], l = y[3];
    const double healthy = c1 + c2 + c3;
    const double s = 1.0 / (1.0 + params.k() * (l + healthy));
    const double s_l = 1.0 / (1.0 + params.k() * healthy);
    const double rho1 = params.rho1(), rho2 = params.rho2(), rho_l = params.rho_L();
    return {
        params.c0() + s * rho1 * c1 - params.alpha1() * c1 - mu * rho1 * c1,
        s * rho2 * c2 + params.alpha1() * c1 - params.alpha2() * c2 - mu * rho2 * c2,
        params.alpha2() * c2 - params.alpha3() * c3,
        s_l * rho_l * l * (1.0 - l / params.L_max()) - params.gamma_L() * l - mu * rho_l * l,
    };
}

StateDerivative treatment_rhs(const ModelParameters& params, const MarrowState& state, double mu) {
    const Vec4 d = rhs_vec(params, state.as_vec(), mu);
    return {d[0], d[1], d[2], d[3]};
}

StateDerivative leukemia_rhs(const ModelParameters& params, const MarrowState& state) {
    return treatment_rhs(params, state, 0.0);
}

}  // namespace marrow
