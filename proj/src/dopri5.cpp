#include "marrow/dopri5.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace marrow {

namespace {

constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace

DormandPrince45::DormandPrince45(Rhs rhs, std::size_t dimension, Settings settings)
    : rhs_(std::move(rhs)), n_(dimension), settings_(std::move(settings)),
      h_suggest_(settings_.initial_step), k1_(n_), k2_(n_), k3_(n_), k4_(n_), k5_(n_), k6_(n_),
      k7_(n_), ytmp_(n_), ynew_(n_), yerr_(n_), r1_(n_), r2_(n_), r3_(n_), r4_(n_), r5_(n_) {
    if (settings_.abs_tol.size() != n_) {
        throw std::invalid_argument("abs_tol must have one entry per component");
    }
    if (!(settings_.rel_tol > 0.0) || !(settings_.max_step > 0.0)) {
        throw std::invalid_argument("rel_tol and max_step must be > 0");
    }
    for (double a : settings_.abs_tol) {
        if (!(a > 0.0)) throw std::invalid_argument("abs_tol entries must be > 0");
    }
}

// Stages 2..7 given k1 = f(t, y); leaves the 5th-order solution in ynew_
// and the embedded error estimate in yerr_.
void DormandPrince45::stage_step(double t, double h, std::span<const double> y) {
    for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y[i] + h * a21 * k1_[i];
    rhs_(t + c2 * h, ytmp_, k2_);
    for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    rhs_(t + c3 * h, ytmp_, k3_);
    for (std::size_t i = 0; i < n_; ++i)
        ytmp_[i] = y[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    rhs_(t + c4 * h, ytmp_, k4_);
    for (std::size_t i = 0; i < n_; ++i)
        ytmp_[i] = y[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    rhs_(t + c5 * h, ytmp_, k5_);
    for (std::size_t i = 0; i < n_; ++i)
        ytmp_[i] = y[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] +
                               a65 * k5_[i]);
    rhs_(t + h, ytmp_, k6_);
    for (std::size_t i = 0; i < n_; ++i)
        ynew_[i] = y[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] +
                               a76 * k6_[i]);
    rhs_(t + h, ynew_, k7_);
    for (std::size_t i = 0; i < n_; ++i)
        yerr_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                        e7 * k7_[i]);
    stats_.rhs_evaluations += 6;
}

double DormandPrince45::error_norm(std::span<const double> y0, std::span<const double> y1) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        const double scale =
            settings_.abs_tol[i] + settings_.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = yerr_[i] / scale;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(n_));
}

void DormandPrince45::dense_eval(double theta, double, std::span<double> out) const {
    const double theta1 = 1.0 - theta;
    for (std::size_t i = 0; i < n_; ++i) {
        out[i] = r1_[i] + theta * (r2_[i] + theta1 * (r3_[i] + theta * (r4_[i] + theta1 * r5_[i])));
    }
}

void DormandPrince45::integrate(double t0, double t1, std::vector<double>& y,
                                std::span<const double> output_times, const Observer& observer,
                                const StepCheck& check) {
    if (y.size() != n_) throw std::invalid_argument("state dimension mismatch");
    if (!(t1 >= t0)) throw std::invalid_argument("integration interval must satisfy t1 >= t0");

    std::size_t next_out = 0;
    auto emit_until = [&](double t_limit, bool inclusive, auto&& value_at) {
        while (next_out < output_times.size() &&
               (output_times[next_out] < t_limit || (inclusive && output_times[next_out] <= t_limit))) {
            if (observer) value_at(output_times[next_out]);
            ++next_out;
        }
    };

    // Outputs at (or numerically before) t0 get the initial state.
    emit_until(t0, true, [&](double t) { observer(t, y); });
    if (t1 == t0) return;

    rhs_(t0, y, k1_);
    ++stats_.rhs_evaluations;

    double t = t0;
    double h = std::min({h_suggest_, settings_.max_step, t1 - t0});
    const double span = t1 - t0;
    std::size_t steps = 0;
    std::vector<double> dense(n_);

    while (t < t1) {
        if (++steps > settings_.max_steps) {
            throw NumericalError("step budget exhausted at t=" + std::to_string(t));
        }
        bool last = false;
        if (t + h >= t1 - 1e-12 * std::max(1.0, std::abs(t1))) {
            h = t1 - t;
            last = true;
        }
        const double h_min = 1e-14 * std::max({1.0, std::abs(t), span});
        if (h < h_min) {
            throw NumericalError("step size underflow at t=" + std::to_string(t));
        }

        stage_step(t, h, y);
        const double err = error_norm(y, ynew_);
        if (!std::isfinite(err)) {
            ++stats_.rejected;
            h *= 0.2;
            continue;
        }
        if (err > 1.0) {
            ++stats_.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            continue;
        }

        ++stats_.accepted;
        const double t_new = last ? t1 : t + h;
        if (check) check(t_new, ynew_);

        for (std::size_t i = 0; i < n_; ++i) {
            const double ydiff = ynew_[i] - y[i];
            const double bspl = h * k1_[i] - ydiff;
            r1_[i] = y[i];
            r2_[i] = ydiff;
            r3_[i] = bspl;
            r4_[i] = ydiff - h * k7_[i] - bspl;
            r5_[i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] +
                          d7 * k7_[i]);
        }

        const double t_old = t;
        const double h_used = h;
        if (last) {
            emit_until(t1, false, [&](double to) {
                dense_eval((to - t_old) / h_used, h_used, dense);
                observer(to, dense);
            });
        } else {
            emit_until(t_new, false, [&](double to) {
                dense_eval((to - t_old) / h_used, h_used, dense);
                observer(to, dense);
            });
        }

        y.swap(ynew_);
        std::swap(k1_, k7_);
        t = t_new;

        const double fac = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
        const double h_next = std::min(settings_.max_step, h_used * fac);
        if (!last) {
            h = h_next;
            h_suggest_ = h_next;
        } else if (h_used >= h_suggest_) {
            h_suggest_ = h_next;
        }
    }

    emit_until(t1, true, [&](double to) { observer(to, y); });
}

void DormandPrince45::integrate_fixed(double t0, double t1, std::size_t steps, std::vector<double>& y) {
    if (steps == 0) throw std::invalid_argument("steps must be > 0");
    const double h = (t1 - t0) / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = t0 + static_cast<double>(s) * h;
        rhs_(t, y, k1_);
        ++stats_.rhs_evaluations;
        stage_step(t, h, y);
        std::copy(ynew_.begin(), ynew_.end(), y.begin());
    }
}

}  // namespace marrow
