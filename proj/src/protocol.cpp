#include "marrow/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

namespace marrow {

using json = nlohmann::json;

std::string_view to_string(DrugId id) {
    switch (id) {
    case DrugId::Prednisone: return "prednisone";
    case DrugId::Vincristine: return "vincristine";
    case DrugId::Daunorubicin: return "daunorubicin";
    case DrugId::Asparaginase: return "asparaginase";
    }
    return "?";
}

std::string_view to_string(DoseUnit unit) {
    return unit == DoseUnit::MgPerDay ? "mg/day" : "U/day";
}

std::string_view to_string(DoseTiming timing) {
    return timing == DoseTiming::DayStartImpulse ? "day-start-impulse" : "in-day-then-impulse";
}

std::optional<DrugId> drug_id_from_string(std::string_view name) {
    for (DrugId id : {DrugId::Prednisone, DrugId::Vincristine, DrugId::Daunorubicin,
                      DrugId::Asparaginase}) {
        if (to_string(id) == name) return id;
    }
    return std::nullopt;
}

std::optional<DoseUnit> dose_unit_from_string(std::string_view name) {
    if (name == "mg/day") return DoseUnit::MgPerDay;
    if (name == "U/day") return DoseUnit::UPerDay;
    return std::nullopt;
}

double DrugSpec::total_administered() const {
    double sum = 0.0;
    for (const auto& d : schedule) sum += d.dose;
    return sum;
}

double DrugDeltas::get(DrugId id) const {
    switch (id) {
    case DrugId::Prednisone: return prednisone;
    case DrugId::Vincristine: return vincristine;
    case DrugId::Daunorubicin: return daunorubicin;
    case DrugId::Asparaginase: return asparaginase;
    }
    return 0.0;
}

void DrugDeltas::set(DrugId id, double value) {
    switch (id) {
    case DrugId::Prednisone: prednisone = value; break;
    case DrugId::Vincristine: vincristine = value; break;
    case DrugId::Daunorubicin: daunorubicin = value; break;
    case DrugId::Asparaginase: asparaginase = value; break;
    }
}

Protocol::Protocol(std::string name, int duration_days, std::vector<DrugSpec> drugs)
    : name_(std::move(name)), duration_days_(duration_days), drugs_(std::move(drugs)) {
    if (duration_days_ < 1) throw ProtocolError("duration_days must be >= 1");
    std::set<DrugId> seen;
    for (std::size_t i = 0; i < drugs_.size(); ++i) {
        const DrugSpec& drug = drugs_[i];
        const std::string where = "drugs[" + std::to_string(i) + "] (" +
                                  std::string(to_string(drug.id)) + ")";
        if (!seen.insert(drug.id).second) throw ProtocolError(where + ": duplicate drug id");
        if (!std::isfinite(drug.lambda) || drug.lambda <= 0.0)
            throw ProtocolError(where + ": decay rate must be > 0");
        if (!std::isfinite(drug.delta) || drug.delta < 0.0)
            throw ProtocolError(where + ": delta must be >= 0");
        int previous = 0;
        for (std::size_t j = 0; j < drug.schedule.size(); ++j) {
            const auto& entry = drug.schedule[j];
            const std::string at = where + ".schedule[" + std::to_string(j) + "]";
            if (entry.day < 1) throw ProtocolError(at + ": day must be >= 1");
            if (entry.day <= previous) throw ProtocolError(at + ": days must be strictly increasing");
            if (!std::isfinite(entry.dose) || entry.dose < 0.0)
                throw ProtocolError(at + ": dose must be >= 0");
            if (entry.day > duration_days_)
                throw ProtocolError(at + ": day " + std::to_string(entry.day) +
                                    " exceeds duration " + std::to_string(duration_days_));
            previous = entry.day;
        }
    }
}

const DrugSpec* Protocol::find(DrugId id) const {
    auto it = std::find_if(drugs_.begin(), drugs_.end(), [id](const DrugSpec& d) { return d.id == id; });
    return it == drugs_.end() ? nullptr : &*it;
}

Protocol Protocol::with_deltas(const DrugDeltas& deltas) const {
    std::vector<DrugSpec> drugs = drugs_;
    for (auto& d : drugs) d.delta = deltas.get(d.id);
    return Protocol(name_, duration_days_, std::move(drugs));
}

Protocol Protocol::with_zero_doses() const {
    std::vector<DrugSpec> drugs = drugs_;
    for (auto& d : drugs) {
        for (auto& entry : d.schedule) entry.dose = 0.0;
    }
    return Protocol(name_ + " (zero dose)", duration_days_, std::move(drugs));
}

double decay_rate_from_half_life(double half_life_days) {
    if (!(half_life_days > 0.0) || !std::isfinite(half_life_days)) {
        throw std::domain_error("half-life must be finite and > 0");
    }
    return std::numbers::ln2 / half_life_days;
}

double dose_indicator(const DrugSpec& drug, int treatment_day) {
    if (treatment_day < 1) throw std::domain_error("treatment day must be >= 1");
    auto it = std::lower_bound(drug.schedule.begin(), drug.schedule.end(), treatment_day,
                               [](const ScheduledDose& d, int day) { return d.day < day; });
    return (it != drug.schedule.end() && it->day == treatment_day) ? it->dose : 0.0;
}

std::vector<double> drug_decay_rhs(const DrugState& state, const Protocol& protocol) {
    std::vector<double> out(protocol.drugs().size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = -protocol.drugs()[j].lambda * state.amounts.at(j);
    }
    return out;
}

DrugState apply_dose_event(const DrugState& state, const Protocol& protocol, int treatment_day) {
    DrugState next = state;
    for (std::size_t j = 0; j < protocol.drugs().size(); ++j) {
        next.amounts.at(j) += dose_indicator(protocol.drugs()[j], treatment_day);
    }
    return next;
}

double total_effect(const DrugState& state, const Protocol& protocol, int treatment_day) {
    double mu = 0.0;
    for (std::size_t j = 0; j < protocol.drugs().size(); ++j) {
        const DrugSpec& drug = protocol.drugs()[j];
        mu += drug.delta * (state.amounts.at(j) + dose_indicator(drug, treatment_day));
    }
    return mu;
}

double reservoir_effect(const DrugState& state, const Protocol& protocol) {
    double mu = 0.0;
    for (std::size_t j = 0; j < protocol.drugs().size(); ++j) {
        mu += protocol.drugs()[j].delta * state.amounts.at(j);
    }
    return mu;
}

Protocol default_sehop_protocol(const DrugDeltas& deltas) {
    auto days = [](std::initializer_list<int> list, double dose) {
        std::vector<ScheduledDose> out;
        for (int d : list) out.push_back({d, dose});
        return out;
    };

    DrugSpec prednisone{DrugId::Prednisone, DoseUnit::MgPerDay, {}, 9.6 * std::numbers::ln2,
                        deltas.prednisone};
    for (int d = 1; d <= 28; ++d) prednisone.schedule.push_back({d, 60.0});
    for (int d = 29; d <= 31; ++d) prednisone.schedule.push_back({d, 30.0});
    for (int d = 32; d <= 34; ++d) prednisone.schedule.push_back({d, 15.0});
    for (int d = 35; d <= 37; ++d) prednisone.schedule.push_back({d, 7.5});

    DrugSpec vincristine{DrugId::Vincristine, DoseUnit::MgPerDay, days({8, 15, 22, 29}, 1.5),
                         0.28 * std::numbers::ln2, deltas.vincristine};
    DrugSpec daunorubicin{DrugId::Daunorubicin, DoseUnit::MgPerDay, days({8, 15}, 30.0),
                          1.17 * std::numbers::ln2, deltas.daunorubicin};
    DrugSpec asparaginase{DrugId::Asparaginase, DoseUnit::UPerDay,
                          days({12, 15, 18, 21, 24, 27, 30, 33}, 10000.0), 0.8 * std::numbers::ln2,
                          deltas.asparaginase};

    return Protocol("SEHOP-PETHEMA-2013 Induction I'A (standard risk)", 37,
                    {prednisone, vincristine, daunorubicin, asparaginase});
}

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

template <typename T>
T required(const json& object, const char* key, const std::string& where) {
    if (!object.contains(key)) throw ProtocolError(where + ": missing field '" + key + "'");
    try {
        return object.at(key).get<T>();
    } catch (const json::exception&) {
        throw ProtocolError(where + ": field '" + key + "' has the wrong type");
    }
}

DrugSpec parse_drug(const json& node, const std::string& where) {
    if (!node.is_object()) throw ProtocolError(where + ": expected an object");
    DrugSpec drug;
    const auto id_name = required<std::string>(node, "id", where);
    const auto id = drug_id_from_string(id_name);
    if (!id) throw ProtocolError(where + ": unknown drug id '" + id_name + "'");
    drug.id = *id;

    const auto unit_name = required<std::string>(node, "unit", where);
    const auto unit = dose_unit_from_string(unit_name);
    if (!unit) throw ProtocolError(where + ": unknown unit '" + unit_name + "'");
    drug.unit = *unit;

    const bool has_half_life = node.contains("half_life_days");
    const bool has_lambda = node.contains("lambda_per_day");
    if (has_half_life == has_lambda) {
        throw ProtocolError(where + ": exactly one of half_life_days / lambda_per_day is required");
    }
    if (has_half_life) {
        const double half_life = required<double>(node, "half_life_days", where);
        if (!(half_life > 0.0)) throw ProtocolError(where + ": half_life_days must be > 0");
        drug.lambda = decay_rate_from_half_life(half_life);
    } else {
        drug.lambda = required<double>(node, "lambda_per_day", where);
    }
    drug.delta = required<double>(node, "delta", where);

    const auto schedule = required<json>(node, "schedule", where);
    if (!schedule.is_array()) throw ProtocolError(where + ": schedule must be an array");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const std::string at = where + ".schedule[" + std::to_string(i) + "]";
        if (!schedule[i].is_object()) throw ProtocolError(at + ": expected an object");
        const json& day = schedule[i].contains("day") ? schedule[i]["day"] : json();
        if (!day.is_number_integer()) throw ProtocolError(at + ": 'day' must be an integer");
        drug.schedule.push_back({day.get<int>(), required<double>(schedule[i], "dose", at)});
    }
    return drug;
}

}  // namespace

Protocol parse_protocol(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ProtocolError("protocol syntax error at line " + std::to_string(line) + ", column " +
                            std::to_string(column));
    }
    if (!root.is_object()) throw ProtocolError("protocol: top level must be an object");

    const auto name = required<std::string>(root, "name", "protocol");
    const json& duration = root.contains("duration_days") ? root["duration_days"] : json();
    if (!duration.is_number_integer()) throw ProtocolError("protocol: 'duration_days' must be an integer");
    const auto drugs_node = required<json>(root, "drugs", "protocol");
    if (!drugs_node.is_array()) throw ProtocolError("protocol: 'drugs' must be an array");

    std::vector<DrugSpec> drugs;
    for (std::size_t i = 0; i < drugs_node.size(); ++i) {
        drugs.push_back(parse_drug(drugs_node[i], "drugs[" + std::to_string(i) + "]"));
    }
    return Protocol(name, duration.get<int>(), std::move(drugs));
}

std::string serialize_protocol(const Protocol& protocol) {
    json root;
    root["name"] = protocol.name();
    root["duration_days"] = protocol.duration_days();
    root["drugs"] = json::array();
    for (const auto& drug : protocol.drugs()) {
        json node;
        node["id"] = std::string(to_string(drug.id));
        node["unit"] = std::string(to_string(drug.unit));
        node["lambda_per_day"] = drug.lambda;
        node["delta"] = drug.delta;
        node["schedule"] = json::array();
        for (const auto& entry : drug.schedule) {
            node["schedule"].push_back({{"day", entry.day}, {"dose", entry.dose}});
        }
        root["drugs"].push_back(std::move(node));
    }
    return root.dump(2) + "\n";
}

}  // namespace marrow
