#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "marrow/model.hpp"
#include "marrow/protocol.hpp"
#include "marrow/scenarios.hpp"
#include "marrow/sensitivity.hpp"
#include "marrow/solver.hpp"
#include "marrow/stability.hpp"

namespace marrow {

inline constexpr std::string_view kVersion = "0.1.0";

/// Unreadable or invalid input file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ParamsFile {
    ModelParameters params = ModelParameters::standard();
    MarrowState initial_state = standard_initial_state();
};

/// Keys mirror the model symbols: c0, rho1, rho2, alpha1, alpha2, alpha3, k,
/// gamma_L, L_max, clone_origin ("ProB" | "PreB") and initial_state {C1, C2,
/// C3, L}. Missing keys keep their standard values; unknown keys are rejected.
/// Throws ConfigError with the offending key or the line/column of a syntax
/// error.
ParamsFile parse_params(std::string_view text);
std::string serialize_params(const ParamsFile& file);

std::string read_text_file(const std::filesystem::path& path);
ParamsFile load_params(const std::filesystem::path& path);
/// Wraps ProtocolError and file errors in ConfigError.
Protocol load_protocol(const std::filesystem::path& path);

/// Leading comment line of every CSV output.
struct OutputMetadata {
    std::optional<std::uint64_t> seed;
    std::string params_digest;
    std::string protocol_digest;
    std::string config_digest;

    std::string header_line() const;  // "# marrowsim <version> seed=... params=... ..."
};

/// Fixed formatting for every number written to disk.
std::string format_number(double value);

void write_trace_csv(std::ostream& out, const SimulationTrace& trace, const OutputMetadata& meta);
void write_survey_csv(std::ostream& out, const std::array<StabilityReport, 6>& reports, const OutputMetadata& meta);
void write_sobol_csv(std::ostream& out, const SobolResult& result, const OutputMetadata& meta);
void write_heatmap_csv(std::ostream& out, const HeatmapResult& result, const OutputMetadata& meta);
void write_sweep_csv(std::ostream& out, const SweepResult& result, const OutputMetadata& meta);

/// JSON documents, pretty-printed with a trailing newline.
std::string response_json(const ResponseReport& report, const ResponseCriteria& criteria, double detection_day,
                          double t_start, const OutputMetadata& meta);
std::string growth_json(const GrowthResult& growth, CloneOrigin origin, const OutputMetadata& meta);
std::string sweep_json(const SweepResult& result, const ResponseCriteria& criteria, const OutputMetadata& meta);
std::string heatmap_json(const HeatmapResult& result, const RegionSummary& regions, double threshold_percent,
                         const OutputMetadata& meta);
std::string sobol_json(const SobolResult& result, const ParameterDomain& domain, const OutputMetadata& meta);

/// Writes text to path, replacing any existing file. Throws ConfigError.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace marrow
