#pragma once

#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "marrow/model.hpp"
#include "marrow/protocol.hpp"
#include "marrow/solver.hpp"

namespace marrow {

/// An experiment could not be set up (no detection, trace too short).
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ResponseCriteria {
    double day8_marrow_blast_limit = 2.3e10;  // cells
    double day15_mrd_fraction = 1e-4;
    double day33_blast_limit = 1.0;           // cells
    double blood_volume = 2.3;                // liters
    double marrow_to_blood_factor = 10.0;

    /// Day +8 limit from 1e9 blasts per liter of blood scaled to the marrow.
    static ResponseCriteria from_blood(double blood_volume_liters, double marrow_to_blood_factor);

    /// Throws std::invalid_argument unless every field is > 0 (+inf allowed).
    void validate() const;
};

enum class Response { Responder, NonResponder };
std::string_view to_string(Response response);

struct Checkpoint {
    double time = 0.0;   // absolute days
    double value = 0.0;  // cells, or a fraction for day +15
    bool pass = false;
};

struct ResponseReport {
    Checkpoint day8;   // marrow blasts
    Checkpoint day15;  // blast fraction
    Checkpoint day33;  // marrow blasts
    Response overall = Response::NonResponder;
};

/// Evaluates the three protocol checkpoints on a trace. Throws ScenarioError
/// when the trace does not span [t_start, t_start + 33].
ResponseReport classify_response(const SimulationTrace& trace, const ResponseCriteria& criteria,
                                 double t_start);

/// Which instant treatment day +1 begins at, relative to the detection day.
enum class StartRule {
    NextWholeDay,  // ceil(detection day)
    AtDetection,   // the interpolated crossing itself
};
std::string_view to_string(StartRule rule);
StartRule start_rule_from_string(std::string_view name);

struct GrowthResult {
    SimulationTrace trace;
    std::optional<double> detection_day;
};

inline constexpr double kDetectionThreshold = 0.8;
inline constexpr double kGrowthHorizon = 300.0;

/// Untreated run from state0 over [0, horizon] and its 80% blast crossing.
GrowthResult growth_experiment(const ModelParameters& params,
                               const MarrowState& state0 = standard_initial_state(),
                               double horizon = kGrowthHorizon, const SolverConfig& config = {});

struct TreatmentStart {
    double detection_day = 0.0;
    double t_start = 0.0;
    MarrowState state;  // marrow at t_start
};

/// Locates detection on the growth run and the state treatment starts from.
/// Throws ScenarioError when the blast fraction never reaches 80%.
TreatmentStart treatment_start(const ModelParameters& params, StartRule rule = StartRule::NextWholeDay,
                               const SolverConfig& config = {},
                               const MarrowState& state0 = standard_initial_state());

struct SweepOptions {
    int count = 50;
    double low = 1.0 / 60.0;
    double high = 1.0 / 6.0;
    ResponseCriteria criteria;
    StartRule start = StartRule::NextWholeDay;
    SolverConfig solver;
    unsigned threads = 1;
};

struct SweepResult {
    std::vector<double> delta_values;  // ascending
    std::vector<double> day8_blasts;   // cells
    std::vector<bool> responds;
    std::optional<double> threshold_delta;  // first grid value under the limit
    std::optional<double> crossing_delta;   // log-linear crossing between grid values
    double midpoint = 0.0;                  // centre of the swept interval
    double t_start = 0.0;
};

/// Day +8 marrow blasts over evenly spaced prednisone influences. Only
/// prednisone acts before the day +8 readout, so the other drugs are left out.
/// Throws std::invalid_argument for count < 2 or an empty range.
SweepResult prednisone_sweep(const ModelParameters& params, const Protocol& protocol,
                             const SweepOptions& options = {});

/// n evenly spaced values from low to high inclusive.
std::vector<double> linspace(double low, double high, int n);

struct HeatmapOptions {
    std::vector<double> delta_P = linspace(0.0, 0.167, 21);
    std::vector<double> delta_V = linspace(0.0, 4.22, 21);
    StartRule start = StartRule::NextWholeDay;
    SolverConfig solver;
    unsigned threads = 1;
};

struct HeatmapResult {
    std::vector<double> delta_P;
    std::vector<double> delta_V;
    std::vector<double> mrd_percent;  // row-major, delta_P index outer
    double t_start = 0.0;

    double at(std::size_t ip, std::size_t iv) const { return mrd_percent[ip * delta_V.size() + iv]; }
};

/// Day +15 blast percentage for every (delta_P, delta_V) pair. The other drugs
/// keep the deltas already set in the protocol.
HeatmapResult heatmap(const ModelParameters& params, const Protocol& protocol,
                      const HeatmapOptions& options = {});

struct RegionSummary {
    std::size_t responder_cells = 0;
    std::size_t nonresponder_cells = 0;
    std::size_t responder_components = 0;  // 4-connected
    std::size_t nonresponder_components = 0;
};

/// Splits the grid by mrd_percent < threshold_percent.
RegionSummary region_summary(const HeatmapResult& result, double threshold_percent = 0.01);

struct FullCourseOptions {
    StartRule start = StartRule::NextWholeDay;
    double post_protocol_days = 100.0;
    ResponseCriteria criteria;
    SolverConfig solver;
};

struct FullCourseResult {
    GrowthResult growth;
    TreatmentStart start;
    SimulationTrace treatment;
    ResponseReport response;

    /// Growth samples before t_start followed by the treated trace.
    SimulationTrace combined_trace() const;
};

/// Growth to detection, the protocol from t_start, then post_protocol_days of
/// follow-up.
FullCourseResult full_treatment_experiment(const ModelParameters& params, const Protocol& protocol,
                                           const FullCourseOptions& options = {},
                                           const MarrowState& state0 = standard_initial_state());

struct HealthyRecovery {
    double time = 0.0;
    Vec4 ratio{};         // C1, C2, C3 against the reference; L slot unused
    double worst = 0.0;   // max |ratio - 1| over the healthy compartments
};

/// Healthy compartments at t_start + days_after_start relative to reference.
HealthyRecovery healthy_recovery(const SimulationTrace& trace, double t_start, double days_after_start,
                                 const MarrowState& reference = standard_initial_state());

}  // namespace marrow
