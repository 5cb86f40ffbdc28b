#pragma once

#include <optional>
#include <string>
#include <vector>

#include "marrow/dopri5.hpp"
#include "marrow/model.hpp"
#include "marrow/protocol.hpp"

namespace marrow {

struct SolverConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-2;          // cells
    double max_step = 1.0;          // days; capped at 1 while a protocol is active
    double sample_interval = 0.1;   // days
    DoseTiming dose_timing = DoseTiming::DayStartImpulse;

    /// Throws std::invalid_argument for nonpositive tolerances or intervals.
    void validate() const;
};

struct TraceMetadata {
    std::string params_digest;
    std::string protocol_digest;
    std::string config_digest;
    std::vector<DrugId> drug_ids;   // column order of drug_amounts
    std::optional<double> treatment_start;
};

/// Time-ordered samples of one run. drug_amounts is empty for untreated runs;
/// mu_values holds the instantaneous total effect (0 when untreated).
struct SimulationTrace {
    std::vector<double> times;
    std::vector<MarrowState> states;
    std::vector<DrugState> drug_amounts;
    std::vector<double> mu_values;
    TraceMetadata metadata;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    const MarrowState& final_state() const { return states.back(); }
};

/// Untreated run on [t0, t1], sampled every config.sample_interval (plus t1).
/// Throws std::invalid_argument for t1 <= t0 or a negative initial state and
/// NumericalError on integrator failure.
SimulationTrace integrate_leukemia(const ModelParameters& params, const MarrowState& state0,
                                   double t0, double t1, const SolverConfig& config = {});

/// Treated run starting at t_start, ending at t_end >= t_start. Treatment day d
/// covers [t_start + d - 1, t_start + d); the integrator restarts at each day
/// boundary where dose events are applied. After the protocol the reservoir
/// keeps decaying with no further doses.
SimulationTrace integrate_treatment(const ModelParameters& params, const Protocol& protocol,
                                    const MarrowState& state0, const DrugState& drug_state0,
                                    double t_start, double t_end, const SolverConfig& config = {});

/// L / (C1 + C2 + C3 + L). Throws std::domain_error when the total is not > 0.
double blast_fraction(const MarrowState& state);

/// First time the blast fraction reaches the threshold, linearly interpolated
/// in the fraction between samples. nullopt when the trace never reaches it.
std::optional<double> detect_detection_day(const SimulationTrace& trace, double threshold = 0.8);

/// Linear interpolation between bracketing samples. Throws std::out_of_range
/// outside the trace span.
MarrowState sample_at(const SimulationTrace& trace, double t);

/// Drug effect at t, using the right-continuous sample at day boundaries.
double mu_at(const SimulationTrace& trace, double t);

}  // namespace marrow
