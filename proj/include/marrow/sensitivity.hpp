#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "marrow/model.hpp"
#include "marrow/protocol.hpp"
#include "marrow/scenarios.hpp"
#include "marrow/solver.hpp"

namespace marrow {

struct Interval {
    double low = 0.0;
    double high = 1.0;
};

/// Ranges of the four drug influences, in DrugId order.
struct ParameterDomain {
    std::array<Interval, 4> ranges{{
        {1.0 / 60.0, 1.0 / 6.0},
        {1.0 / 1.5, 10.0 / 1.5},
        {1.0 / 30.0, 1.0 / 3.0},
        {1e-4, 1e-3},
    }};

    /// Throws std::invalid_argument unless 0 <= low < high for every range.
    void validate() const;
    static constexpr std::array<std::string_view, 4> names{"delta_P", "delta_V", "delta_D", "delta_A"};
};

enum class QoiKind { HealthyAtDay, LeukemicAtDay };
std::string_view to_string(QoiKind kind);
QoiKind qoi_kind_from_string(std::string_view name);

/// Optional output transform. Log10 tames the many-decade spread of leukemic
/// counts, which otherwise leaves the variance to a handful of samples.
enum class QoiTransform { Identity, Log10 };
std::string_view to_string(QoiTransform transform);
QoiTransform qoi_transform_from_string(std::string_view name);

inline constexpr double kLogFloorCells = 1e-30;

struct Qoi {
    QoiKind kind = QoiKind::LeukemicAtDay;
    int day = 15;  // treatment day the output is read at
    QoiTransform transform = QoiTransform::Identity;

    std::string label() const;  // e.g. "leukemic@15", "log10(leukemic)@15"
};

struct SobolConfig {
    std::size_t base_samples = 1024;  // N, a power of two >= 64
    std::uint64_t seed = 12345;
    Qoi qoi;
    unsigned threads = 1;
    std::size_t bootstrap_resamples = 200;

    void validate() const;
};

/// Saltelli design on the unit cube: rows of A, B and the d hybrid matrices
/// A_B^(i) (A with column i taken from B). Points come from a Sobol'
/// sequence of dimension 2d with a seeded random digital shift.
class SaltelliDesign {
public:
    SaltelliDesign(std::size_t dimension, std::size_t base_samples, std::uint64_t seed);

    std::size_t dimension() const { return d_; }
    std::size_t base_samples() const { return n_; }
    /// N (d + 2) rows: A, then B, then A_B^(1) ... A_B^(d).
    std::size_t rows() const { return n_ * (d_ + 2); }
    /// Unit-cube coordinates of one design row.
    std::vector<double> row(std::size_t index) const;

private:
    std::size_t d_;
    std::size_t n_;
    std::vector<double> a_;  // n x d
    std::vector<double> b_;  // n x d
};

/// The design rows scaled into the domain, each a (delta_P, delta_V,
/// delta_D, delta_A) sample.
std::vector<std::array<double, 4>> saltelli_matrices(const ParameterDomain& domain, const SobolConfig& config);

/// Treatment start state shared by every QoI evaluation.
struct QoiContext {
    ModelParameters params;
    Protocol protocol;
    TreatmentStart start;
    SolverConfig solver;
};

QoiContext make_qoi_context(const ModelParameters& params, const Protocol& protocol,
                            StartRule rule = StartRule::NextWholeDay, const SolverConfig& solver = {});

/// Treats from the detection state with the sampled deltas and reads healthy
/// or leukemic cells at treatment day qoi.day.
double evaluate_qoi(const QoiContext& context, const std::array<double, 4>& deltas, const Qoi& qoi);

struct SobolIndices {
    std::vector<double> first_order;
    std::vector<double> total;
    std::vector<std::array<double, 2>> first_order_ci;  // 95% bootstrap interval
    std::vector<std::array<double, 2>> total_ci;
    double variance = 0.0;
    bool degenerate = false;  // output variance was zero, indices are NaN
};

/// First-order (Saltelli 2010) and total (Jansen) estimators from outputs
/// laid out like SaltelliDesign rows. Throws std::invalid_argument for a
/// size mismatch or non-finite outputs.
SobolIndices sobol_indices(std::span<const double> outputs, std::size_t dimension, std::size_t base_samples,
                           std::size_t bootstrap_resamples = 0, std::uint64_t seed = 0);

struct SobolResult {
    SobolIndices indices;
    std::vector<double> outputs;  // one per design row
    SobolConfig config;
};

/// Full analysis: design, parallel QoI evaluation, estimation.
SobolResult sobol_analysis(const QoiContext& context, const ParameterDomain& domain, const SobolConfig& config);

}  // namespace marrow
