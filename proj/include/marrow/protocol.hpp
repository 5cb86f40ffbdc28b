#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace marrow {

enum class DrugId { Prednisone, Vincristine, Daunorubicin, Asparaginase };
enum class DoseUnit { MgPerDay, UPerDay };

std::string_view to_string(DrugId id);
std::string_view to_string(DoseUnit unit);
std::optional<DrugId> drug_id_from_string(std::string_view name);
std::optional<DoseUnit> dose_unit_from_string(std::string_view name);

/// Malformed or invalid protocol text. The message carries the location
/// (line/column for syntax errors, JSON path for validation errors).
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScheduledDose {
    int day = 1;       // treatment day, 1-based
    double dose = 0.0; // units/day

    bool operator==(const ScheduledDose&) const = default;
};

struct DrugSpec {
    DrugId id = DrugId::Prednisone;
    DoseUnit unit = DoseUnit::MgPerDay;
    std::vector<ScheduledDose> schedule; // strictly increasing days
    double lambda = 1.0;                 // decay rate, 1/day
    double delta = 0.0;                  // influence, day/unit

    double total_administered() const;
    bool operator==(const DrugSpec&) const = default;
};

/// How an administered dose enters the drug reservoir during integration.
///
/// DayStartImpulse: the dose is added to mu_j at the start of its treatment
/// day and decays from there; the instantaneous effect is sum delta_j mu_j.
///
/// InDayThenImpulse: during the dose day the effect carries an extra
/// delta_j q_j term, and q_j is transferred into mu_j at the end of the day.
enum class DoseTiming { DayStartImpulse, InDayThenImpulse };

std::string_view to_string(DoseTiming timing);

/// Influence coefficients for the four induction drugs.
struct DrugDeltas {
    double prednisone = 0.092;
    double vincristine = 2.11;
    double daunorubicin = 2.5 / 30.0;
    double asparaginase = 2.5e-4;

    double get(DrugId id) const;
    void set(DrugId id, double value);
    bool operator==(const DrugDeltas&) const = default;
};

class Protocol {
public:
    /// Throws ProtocolError when drug ids repeat, a schedule is not strictly
    /// increasing, a day is < 1, a dose is negative, lambda <= 0, delta < 0,
    /// or a scheduled day exceeds the duration.
    Protocol(std::string name, int duration_days, std::vector<DrugSpec> drugs);

    const std::string& name() const { return name_; }
    int duration_days() const { return duration_days_; }
    const std::vector<DrugSpec>& drugs() const { return drugs_; }
    const DrugSpec* find(DrugId id) const;

    /// Copy with each present drug's delta replaced.
    Protocol with_deltas(const DrugDeltas& deltas) const;
    /// Copy with every scheduled dose set to zero.
    Protocol with_zero_doses() const;

    bool operator==(const Protocol&) const = default;

private:
    std::string name_;
    int duration_days_;
    std::vector<DrugSpec> drugs_;
};

/// Residual drug amounts mu_j, index-aligned with Protocol::drugs().
struct DrugState {
    std::vector<double> amounts;

    static DrugState zeros(const Protocol& protocol) {
        return {std::vector<double>(protocol.drugs().size(), 0.0)};
    }
    bool operator==(const DrugState&) const = default;
};

/// ln(2) / half_life. Throws std::domain_error for a nonpositive half-life.
double decay_rate_from_half_life(double half_life_days);

/// Q_j on a treatment day: the scheduled dose, or 0 when none is scheduled.
/// Throws std::domain_error when treatment_day < 1.
double dose_indicator(const DrugSpec& drug, int treatment_day);

std::vector<double> drug_decay_rhs(const DrugState& state, const Protocol& protocol);

/// mu_j += q_j for every drug dosed on the given day.
DrugState apply_dose_event(const DrugState& state, const Protocol& protocol, int treatment_day);

/// sum_j delta_j (mu_j + Q_j(day)). With the pre-dose reservoir this is the
/// effect at the start of a dose day.
double total_effect(const DrugState& state, const Protocol& protocol, int treatment_day);

/// sum_j delta_j mu_j, the effect carried by the reservoir alone.
double reservoir_effect(const DrugState& state, const Protocol& protocol);

/// Induction I'A, standard risk, 1 m^2 body surface. Deltas default to the
/// minimal responding set.
Protocol default_sehop_protocol(const DrugDeltas& deltas = {});

Protocol parse_protocol(std::string_view text);
std::string serialize_protocol(const Protocol& protocol);

}  // namespace marrow
