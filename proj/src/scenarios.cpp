#include "marrow/scenarios.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "parallel.hpp"

namespace marrow {

ResponseCriteria ResponseCriteria::from_blood(double blood_volume_liters, double marrow_to_blood_factor) {
    ResponseCriteria c;
    c.blood_volume = blood_volume_liters;
    c.marrow_to_blood_factor = marrow_to_blood_factor;
    // 1e6 cells/ml, 1000 ml/l
    c.day8_marrow_blast_limit = blood_volume_liters * 1e9 * marrow_to_blood_factor;
    return c;
}

void ResponseCriteria::validate() const {
    for (double v : {day8_marrow_blast_limit, day15_mrd_fraction, day33_blast_limit, blood_volume,
                     marrow_to_blood_factor}) {
        if (std::isnan(v) || !(v > 0.0)) throw std::invalid_argument("response criteria must be > 0");
    }
}

std::string_view to_string(Response response) {
    return response == Response::Responder ? "Responder" : "NonResponder";
}

ResponseReport classify_response(const SimulationTrace& trace, const ResponseCriteria& criteria,
                                 double t_start) {
    criteria.validate();
    const double tol = 1e-9;
    if (trace.empty() || trace.times.front() > t_start + tol || trace.times.back() < t_start + 33.0 - tol) {
        throw ScenarioError("trace must span treatment days +0 to +33");
    }
    auto at = [&](double day) {
        const double t = std::min(t_start + day, trace.times.back());
        return std::pair{t, sample_at(trace, std::max(t, trace.times.front()))};
    };

    ResponseReport report;
    const auto [t8, s8] = at(8.0);
    report.day8 = {t8, s8.l, s8.l < criteria.day8_marrow_blast_limit};
    const auto [t15, s15] = at(15.0);
    const double fraction = blast_fraction(s15);
    report.day15 = {t15, fraction, fraction < criteria.day15_mrd_fraction};
    const auto [t33, s33] = at(33.0);
    report.day33 = {t33, s33.l, s33.l < criteria.day33_blast_limit};
    report.overall = report.day8.pass && report.day15.pass && report.day33.pass ? Response::Responder
                                                                               : Response::NonResponder;
    return report;
}

std::string_view to_string(StartRule rule) {
    return rule == StartRule::NextWholeDay ? "next-whole-day" : "at-detection";
}

StartRule start_rule_from_string(std::string_view name) {
    if (name == "next-whole-day") return StartRule::NextWholeDay;
    if (name == "at-detection") return StartRule::AtDetection;
    throw std::invalid_argument("unknown start rule '" + std::string(name) + "'");
}

GrowthResult growth_experiment(const ModelParameters& params, const MarrowState& state0, double horizon,
                               const SolverConfig& config) {
    GrowthResult result;
    result.trace = integrate_leukemia(params, state0, 0.0, horizon, config);
    result.detection_day = detect_detection_day(result.trace, kDetectionThreshold);
    return result;
}

TreatmentStart treatment_start(const ModelParameters& params, StartRule rule, const SolverConfig& config,
                               const MarrowState& state0) {
    const GrowthResult growth = growth_experiment(params, state0, kGrowthHorizon, config);
    if (!growth.detection_day) {
        throw ScenarioError("blast fraction never reaches 80% within " + std::to_string(kGrowthHorizon) +
                            " days");
    }
    TreatmentStart start;
    start.detection_day = *growth.detection_day;
    start.t_start = rule == StartRule::NextWholeDay ? std::ceil(start.detection_day) : start.detection_day;
    if (start.t_start <= 0.0) {
        start.state = state0;
    } else {
        // Integrate to t_start itself instead of interpolating between samples.
        start.state = integrate_leukemia(params, state0, 0.0, start.t_start, config).final_state();
    }
    return start;
}

std::vector<double> linspace(double low, double high, int n) {
    if (n < 1) throw std::invalid_argument("linspace needs n >= 1");
    std::vector<double> v(static_cast<std::size_t>(n));
    if (n == 1) {
        v[0] = low;
        return v;
    }
    const double step = (high - low) / (n - 1);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = low + i * step;
    v.back() = high;
    return v;
}

namespace {

SolverConfig readout_config(SolverConfig config) {
    // Only end states are read; a coarse sample grid saves memory.
    config.sample_interval = 1.0;
    return config;
}

}  // namespace

SweepResult prednisone_sweep(const ModelParameters& params, const Protocol& protocol,
                             const SweepOptions& options) {
    if (options.count < 2) throw std::invalid_argument("sweep needs at least 2 values");
    if (!(options.high > options.low) || !(options.low >= 0.0)) {
        throw std::invalid_argument("sweep range must satisfy 0 <= low < high");
    }
    options.criteria.validate();
    const DrugSpec* prednisone = protocol.find(DrugId::Prednisone);
    if (!prednisone) throw std::invalid_argument("protocol has no prednisone");

    constexpr int readout_day = 8;
    DrugSpec early = *prednisone;
    std::erase_if(early.schedule, [](const ScheduledDose& d) { return d.day > readout_day; });
    const Protocol first_week(protocol.name() + " (prednisone to day +8)", readout_day, {early});

    const SolverConfig config = readout_config(options.solver);
    const TreatmentStart start = treatment_start(params, options.start, options.solver);

    SweepResult result;
    result.delta_values = linspace(options.low, options.high, options.count);
    result.day8_blasts.assign(result.delta_values.size(), 0.0);
    result.midpoint = 0.5 * (options.low + options.high);
    result.t_start = start.t_start;

    detail::parallel_for(result.delta_values.size(), options.threads, [&](std::size_t i) {
        DrugDeltas deltas;
        deltas.prednisone = result.delta_values[i];
        const Protocol run = first_week.with_deltas(deltas);
        const SimulationTrace trace = integrate_treatment(params, run, start.state, DrugState::zeros(run),
                                                          start.t_start, start.t_start + readout_day, config);
        result.day8_blasts[i] = trace.final_state().l;
    });

    const double limit = options.criteria.day8_marrow_blast_limit;
    result.responds.resize(result.day8_blasts.size());
    for (std::size_t i = 0; i < result.day8_blasts.size(); ++i) {
        result.responds[i] = result.day8_blasts[i] < limit;
        if (result.responds[i] && !result.threshold_delta) {
            result.threshold_delta = result.delta_values[i];
            if (i > 0 && result.day8_blasts[i] > 0.0) {
                const double la = std::log(result.day8_blasts[i - 1]);
                const double lb = std::log(result.day8_blasts[i]);
                const double w = (la - std::log(limit)) / (la - lb);
                result.crossing_delta =
                    result.delta_values[i - 1] + w * (result.delta_values[i] - result.delta_values[i - 1]);
            }
        }
    }
    return result;
}

HeatmapResult heatmap(const ModelParameters& params, const Protocol& protocol, const HeatmapOptions& options) {
    if (options.delta_P.empty() || options.delta_V.empty()) {
        throw std::invalid_argument("heatmap grids must be nonempty");
    }
    for (const auto* grid : {&options.delta_P, &options.delta_V}) {
        for (std::size_t i = 0; i < grid->size(); ++i) {
            if (!((*grid)[i] >= 0.0) || (i > 0 && !((*grid)[i] > (*grid)[i - 1]))) {
                throw std::invalid_argument("heatmap grids must be nonnegative and ascending");
            }
        }
    }
    if (!protocol.find(DrugId::Prednisone) || !protocol.find(DrugId::Vincristine)) {
        throw std::invalid_argument("heatmap protocol needs prednisone and vincristine");
    }

    constexpr double readout_day = 15.0;
    const SolverConfig config = readout_config(options.solver);
    const TreatmentStart start = treatment_start(params, options.start, options.solver);

    HeatmapResult result;
    result.delta_P = options.delta_P;
    result.delta_V = options.delta_V;
    result.t_start = start.t_start;
    const std::size_t nv = options.delta_V.size();
    result.mrd_percent.assign(options.delta_P.size() * nv, 0.0);

    DrugDeltas base;
    for (const auto& d : protocol.drugs()) base.set(d.id, d.delta);

    detail::parallel_for(result.mrd_percent.size(), options.threads, [&](std::size_t cell) {
        DrugDeltas deltas = base;
        deltas.prednisone = options.delta_P[cell / nv];
        deltas.vincristine = options.delta_V[cell % nv];
        const Protocol run = protocol.with_deltas(deltas);
        const SimulationTrace trace = integrate_treatment(params, run, start.state, DrugState::zeros(run),
                                                          start.t_start, start.t_start + readout_day, config);
        result.mrd_percent[cell] = 100.0 * blast_fraction(trace.final_state());
    });
    return result;
}

namespace {

std::size_t count_components(const std::vector<bool>& mask, std::size_t rows, std::size_t cols) {
    std::vector<bool> seen(mask.size(), false);
    std::vector<std::size_t> stack;
    std::size_t components = 0;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || seen[start]) continue;
        ++components;
        stack.push_back(start);
        seen[start] = true;
        while (!stack.empty()) {
            const std::size_t cell = stack.back();
            stack.pop_back();
            const std::size_t r = cell / cols, c = cell % cols;
            auto visit = [&](std::size_t n) {
                if (mask[n] && !seen[n]) {
                    seen[n] = true;
                    stack.push_back(n);
                }
            };
            if (r > 0) visit(cell - cols);
            if (r + 1 < rows) visit(cell + cols);
            if (c > 0) visit(cell - 1);
            if (c + 1 < cols) visit(cell + 1);
        }
    }
    return components;
}

}  // namespace

RegionSummary region_summary(const HeatmapResult& result, double threshold_percent) {
    const std::size_t rows = result.delta_P.size(), cols = result.delta_V.size();
    std::vector<bool> responder(result.mrd_percent.size());
    std::vector<bool> nonresponder(result.mrd_percent.size());
    RegionSummary summary;
    for (std::size_t i = 0; i < result.mrd_percent.size(); ++i) {
        responder[i] = result.mrd_percent[i] < threshold_percent;
        nonresponder[i] = !responder[i];
        (responder[i] ? summary.responder_cells : summary.nonresponder_cells)++;
    }
    summary.responder_components = count_components(responder, rows, cols);
    summary.nonresponder_components = count_components(nonresponder, rows, cols);
    return summary;
}

SimulationTrace FullCourseResult::combined_trace() const {
    SimulationTrace out;
    out.metadata = treatment.metadata;
    const std::size_t n_drugs = treatment.metadata.drug_ids.size();
    for (std::size_t i = 0; i < growth.trace.size() && growth.trace.times[i] < start.t_start; ++i) {
        out.times.push_back(growth.trace.times[i]);
        out.states.push_back(growth.trace.states[i]);
        out.drug_amounts.push_back({std::vector<double>(n_drugs, 0.0)});
        out.mu_values.push_back(0.0);
    }
    out.times.insert(out.times.end(), treatment.times.begin(), treatment.times.end());
    out.states.insert(out.states.end(), treatment.states.begin(), treatment.states.end());
    out.drug_amounts.insert(out.drug_amounts.end(), treatment.drug_amounts.begin(), treatment.drug_amounts.end());
    out.mu_values.insert(out.mu_values.end(), treatment.mu_values.begin(), treatment.mu_values.end());
    return out;
}

FullCourseResult full_treatment_experiment(const ModelParameters& params, const Protocol& protocol,
                                           const FullCourseOptions& options, const MarrowState& state0) {
    if (!(options.post_protocol_days >= 0.0)) throw std::invalid_argument("post_protocol_days must be >= 0");
    FullCourseResult result;
    result.growth = growth_experiment(params, state0, kGrowthHorizon, options.solver);
    result.start = treatment_start(params, options.start, options.solver, state0);
    // The response checkpoints need at least 33 days of treated trace.
    const double span = std::max(protocol.duration_days() + options.post_protocol_days, 33.0);
    result.treatment = integrate_treatment(params, protocol, result.start.state, DrugState::zeros(protocol),
                                           result.start.t_start, result.start.t_start + span, options.solver);
    result.response = classify_response(result.treatment, options.criteria, result.start.t_start);
    return result;
}

HealthyRecovery healthy_recovery(const SimulationTrace& trace, double t_start, double days_after_start,
                                 const MarrowState& reference) {
    HealthyRecovery r;
    r.time = t_start + days_after_start;
    const MarrowState s = sample_at(trace, r.time);
    const Vec4 now = s.as_vec(), ref = reference.as_vec();
    for (int i = 0; i < 3; ++i) {
        r.ratio[i] = now[i] / ref[i];
        r.worst = std::max(r.worst, std::abs(r.ratio[i] - 1.0));
    }
    return r;
}

}  // namespace marrow
