#include "marrow/sensitivity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <boost/random/sobol.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "parallel.hpp"

namespace marrow {

void ParameterDomain::validate() const {
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto& r = ranges[i];
        if (!(r.low >= 0.0) || !(r.high > r.low) || !std::isfinite(r.high)) {
            throw std::invalid_argument(std::string(names[i]) + " range must satisfy 0 <= low < high");
        }
    }
}

std::string_view to_string(QoiKind kind) { return kind == QoiKind::HealthyAtDay ? "healthy" : "leukemic"; }

QoiKind qoi_kind_from_string(std::string_view name) {
    if (name == "healthy") return QoiKind::HealthyAtDay;
    if (name == "leukemic") return QoiKind::LeukemicAtDay;
    throw std::invalid_argument("unknown QoI '" + std::string(name) + "' (expected healthy or leukemic)");
}

std::string_view to_string(QoiTransform transform) {
    return transform == QoiTransform::Identity ? "identity" : "log10";
}

QoiTransform qoi_transform_from_string(std::string_view name) {
    if (name == "identity") return QoiTransform::Identity;
    if (name == "log10") return QoiTransform::Log10;
    throw std::invalid_argument("unknown QoI transform '" + std::string(name) + "' (expected identity or log10)");
}

std::string Qoi::label() const {
    const std::string base(to_string(kind));
    const std::string at = "@" + std::to_string(day);
    return transform == QoiTransform::Log10 ? "log10(" + base + ")" + at : base + at;
}

void SobolConfig::validate() const {
    if (base_samples < 64 || !std::has_single_bit(base_samples)) {
        throw std::invalid_argument("base sample count must be a power of two >= 64");
    }
    if (qoi.day < 1) throw std::invalid_argument("QoI day must be >= 1");
}

SaltelliDesign::SaltelliDesign(std::size_t dimension, std::size_t base_samples, std::uint64_t seed)
    : d_(dimension), n_(base_samples), a_(dimension * base_samples), b_(dimension * base_samples) {
    if (d_ == 0 || n_ == 0) throw std::invalid_argument("design needs a dimension and samples");
    boost::random::sobol engine(static_cast<unsigned>(2 * d_));
    std::mt19937_64 shift_source(seed);
    std::vector<std::uint64_t> shift(2 * d_);
    for (auto& s : shift) s = shift_source();

    constexpr double scale = 0x1p-53;
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < 2 * d_; ++j) {
            const std::uint64_t bits = static_cast<std::uint64_t>(engine()) ^ shift[j];
            const double u = static_cast<double>(bits >> 11) * scale;
            (j < d_ ? a_[i * d_ + j] : b_[i * d_ + j - d_]) = u;
        }
    }
}

std::vector<double> SaltelliDesign::row(std::size_t index) const {
    if (index >= rows()) throw std::out_of_range("design row out of range");
    const std::size_t block = index / n_, i = index % n_;
    std::vector<double> out(a_.begin() + i * d_, a_.begin() + (i + 1) * d_);
    if (block == 1) {
        std::copy(b_.begin() + i * d_, b_.begin() + (i + 1) * d_, out.begin());
    } else if (block >= 2) {
        const std::size_t column = block - 2;
        out[column] = b_[i * d_ + column];
    }
    return out;
}

std::vector<std::array<double, 4>> saltelli_matrices(const ParameterDomain& domain, const SobolConfig& config) {
    domain.validate();
    config.validate();
    const SaltelliDesign design(4, config.base_samples, config.seed);
    std::vector<std::array<double, 4>> samples(design.rows());
    for (std::size_t r = 0; r < design.rows(); ++r) {
        const auto u = design.row(r);
        for (std::size_t j = 0; j < 4; ++j) {
            const auto& range = domain.ranges[j];
            samples[r][j] = range.low + u[j] * (range.high - range.low);
        }
    }
    return samples;
}

QoiContext make_qoi_context(const ModelParameters& params, const Protocol& protocol, StartRule rule,
                            const SolverConfig& solver) {
    return {params, protocol, treatment_start(params, rule, solver), solver};
}

double evaluate_qoi(const QoiContext& context, const std::array<double, 4>& deltas, const Qoi& qoi) {
    if (qoi.day < 1) throw std::invalid_argument("QoI day must be >= 1");
    DrugDeltas d;
    d.prednisone = deltas[0];
    d.vincristine = deltas[1];
    d.daunorubicin = deltas[2];
    d.asparaginase = deltas[3];
    const Protocol run = context.protocol.with_deltas(d);
    SolverConfig config = context.solver;
    config.sample_interval = 1.0;
    const double t0 = context.start.t_start;
    const SimulationTrace trace =
        integrate_treatment(context.params, run, context.start.state, DrugState::zeros(run), t0, t0 + qoi.day, config);
    const MarrowState& s = trace.final_state();
    const double cells = qoi.kind == QoiKind::HealthyAtDay ? s.healthy_total() : s.l;
    return qoi.transform == QoiTransform::Log10 ? std::log10(std::max(cells, kLogFloorCells)) : cells;
}

namespace {

struct Estimates {
    std::vector<double> first;
    std::vector<double> total;
    double variance;
};

// Estimators over the base-sample subset `rows` (indices into 0..N-1).
Estimates estimate(std::span<const double> y, std::size_t d, std::size_t n, std::span<const std::size_t> rows) {
    const std::size_t m = rows.size();
    double mean = 0.0;
    for (std::size_t r : rows) mean += y[r] + y[n + r];
    mean /= static_cast<double>(2 * m);
    double variance = 0.0;
    for (std::size_t r : rows) {
        variance += (y[r] - mean) * (y[r] - mean) + (y[n + r] - mean) * (y[n + r] - mean);
    }
    variance /= static_cast<double>(2 * m);

    Estimates e{std::vector<double>(d), std::vector<double>(d), variance};
    for (std::size_t i = 0; i < d; ++i) {
        const std::size_t offset = (2 + i) * n;
        double first = 0.0, total = 0.0;
        for (std::size_t r : rows) {
            const double fa = y[r], fb = y[n + r], fab = y[offset + r];
            first += fb * (fab - fa);
            total += (fa - fab) * (fa - fab);
        }
        e.first[i] = first / static_cast<double>(m) / variance;
        e.total[i] = total / static_cast<double>(2 * m) / variance;
    }
    return e;
}

std::array<double, 2> percentile_interval(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    auto pick = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    return {pick(0.025), pick(0.975)};
}

}  // namespace

SobolIndices sobol_indices(std::span<const double> outputs, std::size_t dimension, std::size_t base_samples,
                           std::size_t bootstrap_resamples, std::uint64_t seed) {
    if (dimension == 0 || base_samples < 2 || outputs.size() != base_samples * (dimension + 2)) {
        throw std::invalid_argument("outputs must hold N (d + 2) values");
    }
    for (double v : outputs) {
        if (!std::isfinite(v)) throw std::invalid_argument("QoI outputs must be finite");
    }

    SobolIndices result;
    std::vector<std::size_t> all(base_samples);
    for (std::size_t i = 0; i < base_samples; ++i) all[i] = i;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    const Estimates point = estimate(outputs, dimension, base_samples, all);
    double mean_abs = 0.0;
    for (std::size_t i = 0; i < 2 * base_samples; ++i) mean_abs += std::abs(outputs[i]);
    mean_abs /= static_cast<double>(2 * base_samples);
    // Zero variance, up to round-off in the mean, leaves the indices undefined.
    const double noise = std::numeric_limits<double>::epsilon() * mean_abs;
    result.variance = point.variance;
    result.first_order_ci.assign(dimension, {nan, nan});
    result.total_ci.assign(dimension, {nan, nan});
    if (!(point.variance > noise * noise)) {
        result.degenerate = true;
        result.first_order.assign(dimension, nan);
        result.total.assign(dimension, nan);
        return result;
    }
    result.first_order = point.first;
    result.total = point.total;
    if (bootstrap_resamples == 0) return result;

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    boost::random::uniform_int_distribution<std::size_t> pick(0, base_samples - 1);
    std::vector<std::vector<double>> first(dimension), total(dimension);
    std::vector<std::size_t> rows(base_samples);
    for (std::size_t b = 0; b < bootstrap_resamples; ++b) {
        for (auto& r : rows) r = pick(rng);
        const Estimates e = estimate(outputs, dimension, base_samples, rows);
        if (!(e.variance > 0.0)) continue;
        for (std::size_t i = 0; i < dimension; ++i) {
            first[i].push_back(e.first[i]);
            total[i].push_back(e.total[i]);
        }
    }
    for (std::size_t i = 0; i < dimension; ++i) {
        if (first[i].empty()) continue;
        result.first_order_ci[i] = percentile_interval(first[i]);
        result.total_ci[i] = percentile_interval(total[i]);
    }
    return result;
}

SobolResult sobol_analysis(const QoiContext& context, const ParameterDomain& domain, const SobolConfig& config) {
    const auto samples = saltelli_matrices(domain, config);
    SobolResult result;
    result.config = config;
    result.outputs.assign(samples.size(), 0.0);
    detail::parallel_for(samples.size(), config.threads, [&](std::size_t i) {
        result.outputs[i] = evaluate_qoi(context, samples[i], config.qoi);
    });
    result.indices = sobol_indices(result.outputs, 4, config.base_samples, config.bootstrap_resamples, config.seed);
    return result;
}

}  // namespace marrow
