#include "marrow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "marrow/digest.hpp"

namespace marrow {

void SolverConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw std::invalid_argument("solver tolerances must be > 0");
    }
    if (!(max_step > 0.0)) throw std::invalid_argument("max_step must be > 0");
    if (!(sample_interval > 0.0)) throw std::invalid_argument("sample_interval must be > 0");
}

namespace {

void require_nonnegative(const MarrowState& s) {
    for (double v : s.as_vec()) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument("initial state must be finite and nonnegative");
        }
    }
}

// Sample grid t0 + i*dt, snapped onto whole-day offsets from t0 so that
// samples coincide exactly with dose boundaries; t1 is always included.
std::vector<double> sample_grid(double t0, double t1, double dt) {
    std::vector<double> grid;
    const double eps = 1e-9;
    for (std::size_t i = 0;; ++i) {
        double t = t0 + static_cast<double>(i) * dt;
        const double offset = t - t0;
        const double whole = std::round(offset);
        if (std::abs(offset - whole) < eps) t = t0 + whole;
        if (t >= t1 - eps) break;
        grid.push_back(t);
    }
    grid.push_back(t1);
    return grid;
}

double clamp_cells(double v, double abs_tol, double t) {
    if (v >= 0.0) return v;
    if (v >= -abs_tol) return 0.0;
    throw NumericalError("negative compartment " + std::to_string(v) + " at t=" + std::to_string(t) +
                         " exceeds -abs_tol");
}

void check_cells(double t, std::span<const double> y, double abs_tol) {
    for (std::size_t i = 0; i < 4; ++i) {
        if (!std::isfinite(y[i])) throw NumericalError("non-finite state at t=" + std::to_string(t));
        if (y[i] < -abs_tol) {
            throw NumericalError("negative compartment " + std::to_string(y[i]) + " at t=" +
                                 std::to_string(t) + " exceeds -abs_tol");
        }
    }
}

}  // namespace

SimulationTrace integrate_leukemia(const ModelParameters& params, const MarrowState& state0,
                                   double t0, double t1, const SolverConfig& config) {
    config.validate();
    if (!(t1 > t0)) throw std::invalid_argument("integration requires t1 > t0");
    require_nonnegative(state0);

    DormandPrince45::Settings settings;
    settings.rel_tol = config.rel_tol;
    settings.abs_tol.assign(4, config.abs_tol);
    settings.max_step = config.max_step;

    DormandPrince45 stepper(
        [&params](double, std::span<const double> y, std::span<double> dydt) {
            const Vec4 d = rhs_vec(params, {y[0], y[1], y[2], y[3]});
            std::copy(d.begin(), d.end(), dydt.begin());
        },
        4, settings);

    SimulationTrace trace;
    trace.metadata.params_digest = digest(params);
    trace.metadata.config_digest = digest(config);

    const std::vector<double> grid = sample_grid(t0, t1, config.sample_interval);
    trace.times.reserve(grid.size());
    trace.states.reserve(grid.size());
    trace.mu_values.reserve(grid.size());

    std::vector<double> y{state0.c1, state0.c2, state0.c3, state0.l};
    const double abs_tol = config.abs_tol;
    stepper.integrate(
        t0, t1, y, grid,
        [&](double t, std::span<const double> v) {
            trace.times.push_back(t);
            trace.states.push_back({clamp_cells(v[0], abs_tol, t), clamp_cells(v[1], abs_tol, t),
                                    clamp_cells(v[2], abs_tol, t), clamp_cells(v[3], abs_tol, t)});
            trace.mu_values.push_back(0.0);
        },
        [abs_tol](double t, std::span<const double> v) { check_cells(t, v, abs_tol); });
    return trace;
}

SimulationTrace integrate_treatment(const ModelParameters& params, const Protocol& protocol,
                                    const MarrowState& state0, const DrugState& drug_state0,
                                    double t_start, double t_end, const SolverConfig& config) {
    config.validate();
    if (!(t_end > t_start)) throw std::invalid_argument("integration requires t_end > t_start");
    require_nonnegative(state0);
    const std::size_t n_drugs = protocol.drugs().size();
    if (drug_state0.amounts.size() != n_drugs) {
        throw std::invalid_argument("drug state does not match the protocol");
    }
    for (double m : drug_state0.amounts) {
        if (!std::isfinite(m) || m < 0.0) throw std::invalid_argument("drug amounts must be >= 0");
    }

    std::vector<double> deltas(n_drugs), lambdas(n_drugs), in_day_dose(n_drugs, 0.0);
    for (std::size_t j = 0; j < n_drugs; ++j) {
        deltas[j] = protocol.drugs()[j].delta;
        lambdas[j] = protocol.drugs()[j].lambda;
    }

    // Reservoirs are linear and do not feel the cells, so within a segment
    // they follow their exact exponential from the amounts at seg_begin.
    std::vector<double> reservoir = drug_state0.amounts;
    double seg_begin = t_start;
    auto amount = [&](std::size_t j, double t) { return reservoir[j] * std::exp(-lambdas[j] * (t - seg_begin)); };
    // in_day_dose is nonzero only for InDayThenImpulse during a dose day.
    auto effect = [&](double t) {
        double mu = 0.0;
        for (std::size_t j = 0; j < n_drugs; ++j) mu += deltas[j] * (amount(j, t) + in_day_dose[j]);
        return mu;
    };

    DormandPrince45::Settings settings;
    settings.rel_tol = config.rel_tol;
    settings.abs_tol.assign(4, config.abs_tol);
    settings.max_step = std::min(config.max_step, 1.0);

    DormandPrince45 stepper(
        [&](double t, std::span<const double> y, std::span<double> dydt) {
            const Vec4 d = rhs_vec(params, {y[0], y[1], y[2], y[3]}, effect(t));
            std::copy(d.begin(), d.end(), dydt.begin());
        },
        4, settings);

    SimulationTrace trace;
    trace.metadata.params_digest = digest(params);
    trace.metadata.protocol_digest = digest(protocol);
    trace.metadata.config_digest = digest(config);
    trace.metadata.treatment_start = t_start;
    for (const auto& d : protocol.drugs()) trace.metadata.drug_ids.push_back(d.id);

    const std::vector<double> grid = sample_grid(t_start, t_end, config.sample_interval);
    std::size_t grid_pos = 0;
    const double abs_tol = config.abs_tol;

    auto record = [&](double t, std::span<const double> v) {
        trace.times.push_back(t);
        trace.states.push_back({clamp_cells(v[0], abs_tol, t), clamp_cells(v[1], abs_tol, t),
                                clamp_cells(v[2], abs_tol, t), clamp_cells(v[3], abs_tol, t)});
        DrugState drugs;
        drugs.amounts.resize(n_drugs);
        for (std::size_t j = 0; j < n_drugs; ++j) drugs.amounts[j] = amount(j, t);
        trace.drug_amounts.push_back(std::move(drugs));
        trace.mu_values.push_back(effect(t));
    };

    std::vector<double> y{state0.c1, state0.c2, state0.c3, state0.l};

    const int duration = protocol.duration_days();
    auto check = [abs_tol](double t, std::span<const double> v) { check_cells(t, v, abs_tol); };

    for (int day = 1;; ++day) {
        const bool in_protocol = day <= duration;
        const double begin = t_start + (day - 1);
        if (begin >= t_end) break;
        for (std::size_t j = 0; j < n_drugs; ++j) reservoir[j] = amount(j, begin);
        seg_begin = begin;
        double seg_end = in_protocol ? t_start + day : t_end;
        const bool last = seg_end >= t_end;
        if (last) seg_end = t_end;

        std::fill(in_day_dose.begin(), in_day_dose.end(), 0.0);
        if (in_protocol) {
            for (std::size_t j = 0; j < n_drugs; ++j) {
                const double q = dose_indicator(protocol.drugs()[j], day);
                if (config.dose_timing == DoseTiming::DayStartImpulse) {
                    reservoir[j] += q;
                } else {
                    in_day_dose[j] = q;
                }
            }
        }

        const std::size_t first = grid_pos;
        while (grid_pos < grid.size() && (grid[grid_pos] < seg_end || (last && grid[grid_pos] <= seg_end))) {
            ++grid_pos;
        }
        std::span<const double> outputs(grid.data() + first, grid_pos - first);
        stepper.integrate(seg_begin, seg_end, y, outputs, record, check);

        if (in_protocol && config.dose_timing == DoseTiming::InDayThenImpulse) {
            for (std::size_t j = 0; j < n_drugs; ++j) reservoir[j] = amount(j, seg_end) + in_day_dose[j];
            seg_begin = seg_end;
        }
        if (last) break;
    }
    return trace;
}

double blast_fraction(const MarrowState& state) {
    const double total = state.total();
    if (!(total > 0.0)) throw std::domain_error("blast fraction undefined for an empty marrow");
    return state.l / total;
}

std::optional<double> detect_detection_day(const SimulationTrace& trace, double threshold) {
    if (trace.empty()) return std::nullopt;
    double prev_fraction = blast_fraction(trace.states.front());
    if (prev_fraction >= threshold) return trace.times.front();
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const double fraction = blast_fraction(trace.states[i]);
        if (fraction >= threshold) {
            const double w = (threshold - prev_fraction) / (fraction - prev_fraction);
            return trace.times[i - 1] + w * (trace.times[i] - trace.times[i - 1]);
        }
        prev_fraction = fraction;
    }
    return std::nullopt;
}

namespace {

// Index i with times[i] <= t < times[i+1], or the last index when t equals the
// final time.
std::size_t bracket(const SimulationTrace& trace, double t) {
    if (trace.empty() || t < trace.times.front() || t > trace.times.back() || std::isnan(t)) {
        throw std::out_of_range("time " + std::to_string(t) + " outside trace span");
    }
    auto it = std::upper_bound(trace.times.begin(), trace.times.end(), t);
    return static_cast<std::size_t>(std::distance(trace.times.begin(), it)) - 1;
}

}  // namespace

MarrowState sample_at(const SimulationTrace& trace, double t) {
    const std::size_t i = bracket(trace, t);
    if (trace.times[i] == t || i + 1 == trace.size()) return trace.states[i];
    const double w = (t - trace.times[i]) / (trace.times[i + 1] - trace.times[i]);
    const MarrowState& a = trace.states[i];
    const MarrowState& b = trace.states[i + 1];
    return {a.c1 + w * (b.c1 - a.c1), a.c2 + w * (b.c2 - a.c2), a.c3 + w * (b.c3 - a.c3),
            a.l + w * (b.l - a.l)};
}

double mu_at(const SimulationTrace& trace, double t) {
    const std::size_t i = bracket(trace, t);
    if (trace.times[i] == t || i + 1 == trace.size()) return trace.mu_values[i];
    const double w = (t - trace.times[i]) / (trace.times[i + 1] - trace.times[i]);
    return trace.mu_values[i] + w * (trace.mu_values[i + 1] - trace.mu_values[i]);
}

}  // namespace marrow
