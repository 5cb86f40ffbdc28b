#include "marrow/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace marrow {

using json = nlohmann::ordered_json;

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

double number_field(const json& node, const std::string& key, const std::string& where) {
    if (!node.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return node.at(key).get<double>();
}

}  // namespace

ParamsFile parse_params(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError("params syntax error at line " + std::to_string(line) + ", column " +
                          std::to_string(column));
    }
    if (!root.is_object()) throw ConfigError("params: top level must be an object");

    RateConstants c;
    const std::pair<const char*, double*> scalars[] = {
        {"c0", &c.c0},         {"rho1", &c.rho1},       {"rho2", &c.rho2},   {"alpha1", &c.alpha1},
        {"alpha2", &c.alpha2}, {"alpha3", &c.alpha3},   {"k", &c.k},         {"gamma_L", &c.gamma_L},
        {"L_max", &c.L_max},
    };
    MarrowState state = standard_initial_state();

    for (const auto& [key, value] : root.items()) {
        bool known = false;
        for (const auto& [name, slot] : scalars) {
            if (key == name) {
                *slot = number_field(root, key, "params");
                known = true;
            }
        }
        if (known) continue;
        if (key == "clone_origin") {
            if (!value.is_string()) throw ConfigError("params: 'clone_origin' must be a string");
            try {
                c.clone_origin = clone_origin_from_string(value.get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("params.clone_origin: ") + e.what());
            }
        } else if (key == "initial_state") {
            if (!value.is_object()) throw ConfigError("params: 'initial_state' must be an object");
            const std::pair<const char*, double*> fields[] = {
                {"C1", &state.c1}, {"C2", &state.c2}, {"C3", &state.c3}, {"L", &state.l}};
            for (const auto& [sub, _] : value.items()) {
                bool found = false;
                for (const auto& [name, slot] : fields) {
                    if (sub == name) {
                        *slot = number_field(value, sub, "params.initial_state");
                        found = true;
                    }
                }
                if (!found) throw ConfigError("params.initial_state: unknown key '" + sub + "'");
            }
        } else {
            throw ConfigError("params: unknown key '" + key + "'");
        }
    }

    for (double v : state.as_vec()) {
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("params.initial_state: components must be finite and >= 0");
    }
    try {
        return {ModelParameters(c), state};
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("params: ") + e.what());
    }
}

std::string serialize_params(const ParamsFile& file) {
    const RateConstants& c = file.params.constants();
    json root;
    root["c0"] = c.c0;
    root["rho1"] = c.rho1;
    root["rho2"] = c.rho2;
    root["alpha1"] = c.alpha1;
    root["alpha2"] = c.alpha2;
    root["alpha3"] = c.alpha3;
    root["k"] = c.k;
    root["gamma_L"] = c.gamma_L;
    root["L_max"] = c.L_max;
    root["clone_origin"] = std::string(to_string(c.clone_origin));
    root["initial_state"] = {{"C1", file.initial_state.c1},
                             {"C2", file.initial_state.c2},
                             {"C3", file.initial_state.c3},
                             {"L", file.initial_state.l}};
    return root.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

ParamsFile load_params(const std::filesystem::path& path) {
    try {
        return parse_params(read_text_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Protocol load_protocol(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return parse_protocol(text);
    } catch (const ProtocolError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";  // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

std::string OutputMetadata::header_line() const {
    std::string line = "# marrowsim " + std::string(kVersion);
    line += " seed=" + (seed ? std::to_string(*seed) : std::string("none"));
    line += " params=" + (params_digest.empty() ? std::string("none") : params_digest);
    line += " protocol=" + (protocol_digest.empty() ? std::string("none") : protocol_digest);
    line += " config=" + (config_digest.empty() ? std::string("none") : config_digest);
    return line;
}

void write_trace_csv(std::ostream& out, const SimulationTrace& trace, const OutputMetadata& meta) {
    out << meta.header_line() << '\n';
    out << "t_days,C1,C2,C3,L,mu,mu_P,mu_V,mu_D,mu_A,blast_fraction\n";
    constexpr DrugId columns[] = {DrugId::Prednisone, DrugId::Vincristine, DrugId::Daunorubicin,
                                  DrugId::Asparaginase};
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const MarrowState& s = trace.states[i];
        out << format_number(trace.times[i]) << ',' << format_number(s.c1) << ',' << format_number(s.c2) << ','
            << format_number(s.c3) << ',' << format_number(s.l) << ',' << format_number(trace.mu_values[i]);
        for (DrugId id : columns) {
            double amount = 0.0;
            if (i < trace.drug_amounts.size()) {
                for (std::size_t j = 0; j < trace.metadata.drug_ids.size(); ++j) {
                    if (trace.metadata.drug_ids[j] == id) amount = trace.drug_amounts[i].amounts[j];
                }
            }
            out << ',' << format_number(amount);
        }
        const double total = s.total();
        out << ',' << format_number(total > 0.0 ? s.l / total : 0.0) << '\n';
    }
}

void write_survey_csv(std::ostream& out, const std::array<StabilityReport, 6>& reports,
                      const OutputMetadata& meta) {
    out << meta.header_line() << '\n';
    out << "candidate,C1,C2,C3,L,residual,re1,im1,re2,im2,re3,im3,re4,im4,verdict\n";
    for (const auto& r : reports) {
        out << r.label;
        for (double v : r.steady_state.state) out << ',' << format_number(v);
        out << ',' << format_number(r.steady_state.residual_norm);
        for (const auto& lambda : r.eigenvalues) {
            out << ',' << format_number(lambda.real()) << ',' << format_number(lambda.imag());
        }
        out << ',' << to_string(r.verdict) << '\n';
    }
}

void write_sobol_csv(std::ostream& out, const SobolResult& result, const OutputMetadata& meta) {
    out << meta.header_line() << '\n';
    out << "parameter,S1,ST,variance,N,seed,qoi\n";
    for (std::size_t i = 0; i < 4; ++i) {
        out << ParameterDomain::names[i] << ',' << format_number(result.indices.first_order[i]) << ','
            << format_number(result.indices.total[i]) << ',' << format_number(result.indices.variance) << ','
            << result.config.base_samples << ',' << result.config.seed << ',' << result.config.qoi.label() << '\n';
    }
}

void write_heatmap_csv(std::ostream& out, const HeatmapResult& result, const OutputMetadata& meta) {
    out << meta.header_line() << '\n';
    out << "delta_P,delta_V,mrd_percent\n";
    for (std::size_t ip = 0; ip < result.delta_P.size(); ++ip) {
        for (std::size_t iv = 0; iv < result.delta_V.size(); ++iv) {
            out << format_number(result.delta_P[ip]) << ',' << format_number(result.delta_V[iv]) << ','
                << format_number(result.at(ip, iv)) << '\n';
        }
    }
}

void write_sweep_csv(std::ostream& out, const SweepResult& result, const OutputMetadata& meta) {
    out << meta.header_line() << '\n';
    out << "delta_P,day8_blasts,responds\n";
    for (std::size_t i = 0; i < result.delta_values.size(); ++i) {
        out << format_number(result.delta_values[i]) << ',' << format_number(result.day8_blasts[i]) << ','
            << (result.responds[i] ? "true" : "false") << '\n';
    }
}

namespace {

json meta_json(const OutputMetadata& meta) {
    json node;
    node["version"] = std::string(kVersion);
    node["seed"] = meta.seed ? json(*meta.seed) : json(nullptr);
    auto text_or_null = [](const std::string& s) { return s.empty() ? json(nullptr) : json(s); };
    node["params_digest"] = text_or_null(meta.params_digest);
    node["protocol_digest"] = text_or_null(meta.protocol_digest);
    node["config_digest"] = text_or_null(meta.config_digest);
    return node;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json checkpoint_json(const Checkpoint& c, double limit) {
    return {{"time", c.time}, {"value", c.value}, {"limit", finite_or_null(limit)}, {"pass", c.pass}};
}

}  // namespace

std::string response_json(const ResponseReport& report, const ResponseCriteria& criteria, double detection_day,
                          double t_start, const OutputMetadata& meta) {
    json root;
    root["detection_day"] = detection_day;
    root["t_start"] = t_start;
    root["day8_blasts"] = checkpoint_json(report.day8, criteria.day8_marrow_blast_limit);
    root["day15_fraction"] = checkpoint_json(report.day15, criteria.day15_mrd_fraction);
    root["day33_blasts"] = checkpoint_json(report.day33, criteria.day33_blast_limit);
    root["overall"] = std::string(to_string(report.overall));
    root["metadata"] = meta_json(meta);
    return root.dump(2) + "\n";
}

std::string growth_json(const GrowthResult& growth, CloneOrigin origin, const OutputMetadata& meta) {
    json root;
    root["clone_origin"] = std::string(to_string(origin));
    root["detection_threshold"] = kDetectionThreshold;
    root["detection_day"] = optional_number(growth.detection_day);
    root["horizon_days"] = growth.trace.empty() ? 0.0 : growth.trace.times.back();
    root["metadata"] = meta_json(meta);
    return root.dump(2) + "\n";
}

std::string sweep_json(const SweepResult& result, const ResponseCriteria& criteria, const OutputMetadata& meta) {
    json root;
    root["count"] = result.delta_values.size();
    root["day8_limit"] = finite_or_null(criteria.day8_marrow_blast_limit);
    root["t_start"] = result.t_start;
    root["threshold_delta"] = optional_number(result.threshold_delta);
    root["crossing_delta"] = optional_number(result.crossing_delta);
    root["midpoint"] = result.midpoint;
    root["metadata"] = meta_json(meta);
    return root.dump(2) + "\n";
}

std::string heatmap_json(const HeatmapResult& result, const RegionSummary& regions, double threshold_percent,
                         const OutputMetadata& meta) {
    json root;
    root["rows"] = result.mrd_percent.size();
    root["t_start"] = result.t_start;
    root["mrd_threshold_percent"] = threshold_percent;
    root["responder_cells"] = regions.responder_cells;
    root["nonresponder_cells"] = regions.nonresponder_cells;
    root["responder_components"] = regions.responder_components;
    root["nonresponder_components"] = regions.nonresponder_components;
    root["metadata"] = meta_json(meta);
    return root.dump(2) + "\n";
}

std::string sobol_json(const SobolResult& result, const ParameterDomain& domain, const OutputMetadata& meta) {
    json root;
    root["qoi"] = result.config.qoi.label();
    root["N"] = result.config.base_samples;
    root["seed"] = result.config.seed;
    root["evaluations"] = result.outputs.size();
    root["variance"] = finite_or_null(result.indices.variance);
    root["degenerate"] = result.indices.degenerate;
    json params = json::array();
    for (std::size_t i = 0; i < 4; ++i) {
        params.push_back({{"parameter", std::string(ParameterDomain::names[i])},
                          {"low", domain.ranges[i].low},
                          {"high", domain.ranges[i].high},
                          {"S1", finite_or_null(result.indices.first_order[i])},
                          {"S1_ci", {finite_or_null(result.indices.first_order_ci[i][0]),
                                     finite_or_null(result.indices.first_order_ci[i][1])}},
                          {"ST", finite_or_null(result.indices.total[i])},
                          {"ST_ci", {finite_or_null(result.indices.total_ci[i][0]),
                                     finite_or_null(result.indices.total_ci[i][1])}}});
    }
    root["indices"] = params;
    root["metadata"] = meta_json(meta);
    return root.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace marrow
