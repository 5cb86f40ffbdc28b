#include "marrow/cli.hpp"

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "marrow/digest.hpp"
#include "marrow/io.hpp"

namespace marrow {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
    std::string params_path;
    std::string protocol_path;
    std::string out_dir = ".";
    std::uint64_t seed = 12345;
    unsigned threads = 1;
    std::optional<double> rel_tol;
    std::optional<double> abs_tol;
    std::string dose_timing = "day-start-impulse";
    std::string start_rule = "next-whole-day";
};

struct DeltaOverrides {
    std::optional<double> prednisone, vincristine, daunorubicin, asparaginase;

    Protocol apply(const Protocol& protocol) const {
        DrugDeltas deltas;
        for (const auto& d : protocol.drugs()) deltas.set(d.id, d.delta);
        if (prednisone) deltas.prednisone = *prednisone;
        if (vincristine) deltas.vincristine = *vincristine;
        if (daunorubicin) deltas.daunorubicin = *daunorubicin;
        if (asparaginase) deltas.asparaginase = *asparaginase;
        return protocol.with_deltas(deltas);
    }
};

// Everything a command needs once the flags have been validated.
struct Inputs {
    ParamsFile params;
    Protocol protocol = default_sehop_protocol();
    SolverConfig solver;
    StartRule start = StartRule::NextWholeDay;
    fs::path out_dir;
};

Inputs resolve(const CommonOptions& o) {
    Inputs in;
    if (!o.params_path.empty()) in.params = load_params(o.params_path);
    if (!o.protocol_path.empty()) in.protocol = load_protocol(o.protocol_path);
    if (o.rel_tol) in.solver.rel_tol = *o.rel_tol;
    if (o.abs_tol) in.solver.abs_tol = *o.abs_tol;
    if (o.dose_timing == "in-day-then-impulse") {
        in.solver.dose_timing = DoseTiming::InDayThenImpulse;
    } else if (o.dose_timing != "day-start-impulse") {
        throw ConfigError("unknown dose timing '" + o.dose_timing + "'");
    }
    try {
        in.solver.validate();
        in.start = start_rule_from_string(o.start_rule);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    in.out_dir = o.out_dir;
    std::error_code ec;
    fs::create_directories(in.out_dir, ec);
    if (ec || !fs::is_directory(in.out_dir)) throw ConfigError("cannot create output directory " + o.out_dir);
    return in;
}

OutputMetadata metadata(const CommonOptions& o, const Inputs& in, bool with_protocol) {
    OutputMetadata meta;
    meta.seed = o.seed;
    meta.params_digest = digest(in.params.params);
    if (with_protocol) meta.protocol_digest = digest(in.protocol);
    meta.config_digest = digest(in.solver);
    return meta;
}

template <class Writer, class... Args>
void write_csv(const fs::path& path, Writer writer, const Args&... args) {
    std::ostringstream buffer;
    writer(buffer, args...);
    write_text_file(path, buffer.str());
}

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--params", o.params_path, "Parameters JSON (default: built-in standard values)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--protocol", o.protocol_path, "Protocol JSON (default: built-in induction protocol)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    cmd->add_option("--threads", o.threads, "Worker threads for grid commands")
        ->check(CLI::Range(1u, 1024u))
        ->capture_default_str();
    cmd->add_option("--rel-tol", o.rel_tol, "Integrator relative tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--abs-tol", o.abs_tol, "Integrator absolute tolerance in cells")->check(CLI::PositiveNumber);
    cmd->add_option("--dose-timing", o.dose_timing, "day-start-impulse | in-day-then-impulse")
        ->check(CLI::IsMember({"day-start-impulse", "in-day-then-impulse"}))
        ->capture_default_str();
    cmd->add_option("--start-rule", o.start_rule, "Treatment start: next-whole-day | at-detection")
        ->check(CLI::IsMember({"next-whole-day", "at-detection"}))
        ->capture_default_str();
}

void add_deltas(CLI::App* cmd, DeltaOverrides& d) {
    cmd->add_option("--delta-P", d.prednisone, "Prednisone influence (day/mg)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--delta-V", d.vincristine, "Vincristine influence (day/mg)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--delta-D", d.daunorubicin, "Daunorubicin influence (day/mg)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--delta-A", d.asparaginase, "Asparaginase influence (day/U)")->check(CLI::NonNegativeNumber);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bone-marrow leukemia model: growth, treatment, stability and sensitivity runs", "marrowsim"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    CommonOptions common;
    DeltaOverrides deltas;

    auto* grow = app.add_subcommand("grow", "Untreated growth run and 80% blast detection day");
    add_common(grow, common);
    std::optional<std::string> origin;
    double horizon = kGrowthHorizon;
    grow->add_option("--origin", origin, "Clone origin override: ProB | PreB")
        ->check(CLI::IsMember({"ProB", "PreB"}));
    grow->add_option("--horizon", horizon, "Simulated days")->check(CLI::PositiveNumber)->capture_default_str();

    auto* treat = app.add_subcommand("treat", "Growth to detection, full protocol, response checkpoints");
    add_common(treat, common);
    add_deltas(treat, deltas);
    double post_days = 100.0;
    treat->add_option("--post-days", post_days, "Follow-up days after the protocol")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();

    auto* stability = app.add_subcommand("stability", "Steady-state survey with eigenvalues and verdicts");
    add_common(stability, common);
    bool no_influx = false;
    double zero_tol = kDefaultZeroTol;
    stability->add_flag("--no-influx", no_influx, "Refine on the system with c0 = 0");
    stability->add_option("--zero-tol", zero_tol, "Hyperbolicity tolerance (1/day)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Day +8 blasts over a prednisone influence sweep");
    add_common(sweep, common);
    SweepOptions sweep_options;
    sweep->add_option("--count", sweep_options.count, "Number of values")
        ->check(CLI::Range(2, 100000))
        ->capture_default_str();
    sweep->add_option("--low", sweep_options.low, "Smallest delta_P")->check(CLI::NonNegativeNumber);
    sweep->add_option("--high", sweep_options.high, "Largest delta_P")->check(CLI::PositiveNumber);

    auto* heat = app.add_subcommand("heatmap", "Day +15 MRD over a delta_P x delta_V grid");
    add_common(heat, common);
    add_deltas(heat, deltas);
    int grid_p = 21, grid_v = 21;
    double max_p = 0.167, max_v = 4.22, mrd_threshold = 0.01;
    heat->add_option("--grid-p", grid_p, "delta_P grid points")->check(CLI::Range(1, 10000))->capture_default_str();
    heat->add_option("--grid-v", grid_v, "delta_V grid points")->check(CLI::Range(1, 10000))->capture_default_str();
    heat->add_option("--max-p", max_p, "Largest delta_P")->check(CLI::PositiveNumber)->capture_default_str();
    heat->add_option("--max-v", max_v, "Largest delta_V")->check(CLI::PositiveNumber)->capture_default_str();
    heat->add_option("--mrd-threshold", mrd_threshold, "Responder threshold in percent")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* sobol = app.add_subcommand("sobol", "Sobol indices of the drug influences");
    add_common(sobol, common);
    SobolConfig sobol_config;
    std::string qoi_kind = "leukemic", qoi_transform = "identity";
    sobol->add_option("--samples", sobol_config.base_samples, "Base sample count N (power of two >= 64)")
        ->capture_default_str();
    sobol->add_option("--qoi", qoi_kind, "healthy | leukemic")
        ->check(CLI::IsMember({"healthy", "leukemic"}))
        ->capture_default_str();
    sobol->add_option("--day", sobol_config.qoi.day, "Treatment day of the readout")
        ->check(CLI::Range(1, 10000))
        ->capture_default_str();
    sobol->add_option("--transform", qoi_transform, "identity | log10")
        ->check(CLI::IsMember({"identity", "log10"}))
        ->capture_default_str();
    sobol->add_option("--bootstrap", sobol_config.bootstrap_resamples, "Bootstrap resamples for intervals")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const Inputs in = resolve(common);
        const ModelParameters& params = in.params.params;

        if (*grow) {
            const ModelParameters run = origin ? params.with_origin(clone_origin_from_string(*origin)) : params;
            const GrowthResult result = growth_experiment(run, in.params.initial_state, horizon, in.solver);
            Inputs shown = in;
            shown.params.params = run;
            const OutputMetadata meta = metadata(common, shown, false);
            write_csv(in.out_dir / "grow_trace.csv", write_trace_csv, result.trace, meta);
            write_text_file(in.out_dir / "grow_summary.json", growth_json(result, run.clone_origin(), meta));
            if (result.detection_day) {
                out << "detection day " << format_number(*result.detection_day) << '\n';
            } else {
                out << "no detection within " << format_number(horizon) << " days\n";
            }
        } else if (*treat) {
            Inputs run = in;
            run.protocol = deltas.apply(in.protocol);
            FullCourseOptions options;
            options.start = in.start;
            options.post_protocol_days = post_days;
            options.solver = in.solver;
            const FullCourseResult result =
                full_treatment_experiment(params, run.protocol, options, in.params.initial_state);
            const OutputMetadata meta = metadata(common, run, true);
            write_csv(in.out_dir / "treat_trace.csv", write_trace_csv, result.combined_trace(), meta);
            write_text_file(in.out_dir / "response.json",
                            response_json(result.response, options.criteria, result.start.detection_day,
                                          result.start.t_start, meta));
            out << "response " << to_string(result.response.overall) << '\n';
        } else if (*stability) {
            NewtonOptions newton;
            newton.include_influx = !no_influx;
            const auto reports = full_stability_survey(params, newton, zero_tol);
            write_csv(in.out_dir / "survey.csv", write_survey_csv, reports, metadata(common, in, false));
            for (const auto& r : reports) out << r.label << ' ' << to_string(r.verdict) << '\n';
        } else if (*sweep) {
            sweep_options.start = in.start;
            sweep_options.solver = in.solver;
            sweep_options.threads = common.threads;
            const SweepResult result = prednisone_sweep(params, in.protocol, sweep_options);
            const OutputMetadata meta = metadata(common, in, true);
            write_csv(in.out_dir / "sweep.csv", write_sweep_csv, result, meta);
            write_text_file(in.out_dir / "sweep_summary.json", sweep_json(result, sweep_options.criteria, meta));
            out << "threshold delta_P "
                << (result.threshold_delta ? format_number(*result.threshold_delta) : std::string("none")) << '\n';
        } else if (*heat) {
            Inputs run = in;
            run.protocol = deltas.apply(in.protocol);
            HeatmapOptions options;
            options.delta_P = linspace(0.0, max_p, grid_p);
            options.delta_V = linspace(0.0, max_v, grid_v);
            options.start = in.start;
            options.solver = in.solver;
            options.threads = common.threads;
            const HeatmapResult result = heatmap(params, run.protocol, options);
            const RegionSummary regions = region_summary(result, mrd_threshold);
            const OutputMetadata meta = metadata(common, run, true);
            write_csv(in.out_dir / "heatmap.csv", write_heatmap_csv, result, meta);
            write_text_file(in.out_dir / "heatmap_summary.json", heatmap_json(result, regions, mrd_threshold, meta));
            out << "heatmap cells " << result.mrd_percent.size() << ", responders " << regions.responder_cells << '\n';
        } else if (*sobol) {
            sobol_config.seed = common.seed;
            sobol_config.threads = common.threads;
            sobol_config.qoi.kind = qoi_kind_from_string(qoi_kind);
            sobol_config.qoi.transform = qoi_transform_from_string(qoi_transform);
            try {
                sobol_config.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            const ParameterDomain domain;
            const QoiContext context = make_qoi_context(params, in.protocol, in.start, in.solver);
            const SobolResult result = sobol_analysis(context, domain, sobol_config);
            const OutputMetadata meta = metadata(common, in, true);
            write_csv(in.out_dir / "sobol.csv", write_sobol_csv, result, meta);
            write_text_file(in.out_dir / "sobol_summary.json", sobol_json(result, domain, meta));
            for (std::size_t i = 0; i < 4; ++i) {
                out << ParameterDomain::names[i] << " S1=" << format_number(result.indices.first_order[i])
                    << " ST=" << format_number(result.indices.total[i]) << '\n';
            }
        }
    } catch (const ConfigError& e) {
        err << "marrowsim: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ProtocolError& e) {
        err << "marrowsim: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "marrowsim: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ScenarioError& e) {
        err << "marrowsim: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        err << "marrowsim: invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::domain_error& e) {
        err << "marrowsim: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace marrow
