#include "marrow/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace marrow {

ClosedFormConstants ClosedFormConstants::from(const ModelParameters& p) {
    const double a1 = p.alpha1(), a2 = p.alpha2(), a3 = p.alpha3();
    const double r1 = p.rho1(), r2 = p.rho2(), rl = p.rho_L();
    const double k = p.k(), g = p.gamma_L(), lm = p.L_max();
    return {
        a1 * a2 * r1 + a1 * a3 * r1 + a2 * a3 * r1 - a1 * a3 * r2,
        g * k * lm - rl,
        a1 * g * k * lm - a1 * rl - a1 * k * lm * rl + r1 * rl,
    };
}

namespace {

bool degenerate(double denominator, double scale) {
    return !std::isfinite(denominator) || std::abs(denominator) <= 1e-14 * scale;
}

double norm2(const Vec4& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
}

double rate_scale(const ModelParameters& p) {
    return std::max({p.rho1(), p.rho2(), p.alpha1(), p.alpha2(), p.alpha3(), p.gamma_L()});
}

}  // namespace

std::array<ClosedFormCandidate, 6> closed_form_steady_states(const ModelParameters& params) {
    const double a1 = params.alpha1(), a2 = params.alpha2(), a3 = params.alpha3();
    const double r1 = params.rho1(), r2 = params.rho2(), rl = params.rho_L();
    const double k = params.k(), g = params.gamma_L(), lm = params.L_max();
    const auto [phi, psi, omega] = ClosedFormConstants::from(params);

    const double phi_scale = a1 * a2 * r1 + a1 * a3 * r1 + a2 * a3 * r1 + a1 * a3 * r2;
    const double psi_scale = g * k * lm + rl;
    const bool phi_bad = degenerate(phi, phi_scale);
    const bool psi_bad = degenerate(psi, psi_scale);

    std::array<ClosedFormCandidate, 6> out;
    out[0] = {"origin", Vec4{0.0, 0.0, 0.0, 0.0}};
    out[1] = {"leukemia-only", Vec4{0.0, 0.0, 0.0, lm * (rl - g) / rl}};
    out[2] = {"preB-transition",
              Vec4{0.0, a3 * (r2 - a2) / (a2 * (a2 + a3) * k), (r2 - a2) / ((a2 + a3) * k), 0.0}};

    if (phi_bad) {
        out[3] = {"healthy", std::nullopt};
    } else {
        const double c2 = a3 * r1 * (r1 - a1) / (k * phi);
        out[3] = {"healthy",
                  Vec4{a3 * (r1 - a1) * (a2 * r1 - a1 * r2) / (a1 * k * phi), c2, a2 * c2 / a3, 0.0}};
    }

    if (phi_bad || psi_bad) {
        out[4] = {"mixed-all", std::nullopt};
    } else {
        const double base = omega / (k * phi * psi);
        out[4] = {"mixed-all", Vec4{-a3 * (a2 * r1 - a1 * r2) * base / a1, -a3 * r1 * base,
                                    -a2 * r1 * base, lm * (g * r1 - a1 * rl) / (a1 * psi)}};
    }

    if (psi_bad) {
        out[5] = {"mixed-no-proB", std::nullopt};
    } else {
        const double l = lm * (g * r2 - a2 * rl) / (a2 * psi);
        const double healthy = (r2 / a2 - 1.0) / k - l;
        out[5] = {"mixed-no-proB",
                  Vec4{0.0, healthy * a3 / (a2 + a3), healthy * a2 / (a2 + a3), l}};
    }
    return out;
}

Mat4 analytic_jacobian(const ModelParameters& p, const Vec4& y) {
    const double c1 = y[0], c2 = y[1], l = y[3];
    const double healthy = y[0] + y[1] + y[2];
    const double k = p.k();
    const double s = 1.0 / (1.0 + k * (l + healthy));
    const double s_l = 1.0 / (1.0 + k * healthy);
    const double ds = -k * s * s;         // ds/dC_i = ds/dL
    const double ds_l = -k * s_l * s_l;   // ds_L/dC_i; ds_L/dL = 0
    const double r1 = p.rho1(), r2 = p.rho2(), rl = p.rho_L(), lm = p.L_max();
    const double logistic = l * (1.0 - l / lm);

    Mat4 j{};
    const double row1 = r1 * c1 * ds;
    j[0] = {s * r1 - p.alpha1() + row1, row1, row1, row1};
    const double row2 = r2 * c2 * ds;
    j[1] = {p.alpha1() + row2, s * r2 - p.alpha2() + row2, row2, row2};
    j[2] = {0.0, p.alpha2(), -p.alpha3(), 0.0};
    const double row4 = rl * logistic * ds_l;
    j[3] = {row4, row4, row4, s_l * rl * (1.0 - 2.0 * l / lm) - p.gamma_L()};
    return j;
}

namespace {

// Solves a x = b by Gaussian elimination with partial pivoting. Returns false
// for a numerically singular matrix.
bool solve4(Mat4 a, Vec4& b) {
    double scale = 0.0;
    for (const auto& row : a)
        for (double v : row) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return false;
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) <= 1e-14 * scale) return false;
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (int r = col + 1; r < 4; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = 3; r >= 0; --r) {
        double sum = b[r];
        for (int c = r + 1; c < 4; ++c) sum -= a[r][c] * b[c];
        b[r] = sum / a[r][r];
    }
    return true;
}

}  // namespace

SteadyState newton_refine(const ModelParameters& params, const Vec4& guess,
                          const NewtonOptions& options) {
    const ModelParameters system = options.include_influx ? params : params.with_c0(0.0);
    const double scale = rate_scale(system);
    auto converged = [&](const Vec4& x, double residual) {
        return residual <= options.tol * scale * std::max(1.0, norm2(x));
    };

    SteadyState result;
    result.include_influx = options.include_influx;
    Vec4 x = guess;
    Vec4 f = rhs_vec(system, x);
    double residual = norm2(f);

    for (int it = 0; it <= options.max_iterations; ++it) {
        if (converged(x, residual)) {
            result.state = x;
            result.residual_norm = residual;
            result.converged = true;
            result.iterations = it;
            return result;
        }
        if (it == options.max_iterations) break;

        Vec4 step{-f[0], -f[1], -f[2], -f[3]};
        if (!solve4(analytic_jacobian(system, x), step)) {
            throw SteadyStateError("singular Jacobian during Newton refinement");
        }

        double lambda = 1.0;
        Vec4 trial{};
        Vec4 f_trial{};
        double trial_residual = 0.0;
        int halvings = 0;
        for (;; ++halvings) {
            for (int i = 0; i < 4; ++i) trial[i] = x[i] + lambda * step[i];
            f_trial = rhs_vec(system, trial);
            trial_residual = norm2(f_trial);
            if (trial_residual < residual || halvings == options.max_halvings) break;
            lambda *= 0.5;
        }
        if (!(trial_residual < residual)) {
            // No decrease even for the smallest step: the iterate sits on
            // the floating-point floor of the residual.
            if (converged(x, residual * 1e-3)) continue;
            throw SteadyStateError("Newton refinement stalled at residual " + std::to_string(residual));
        }
        x = trial;
        f = f_trial;
        residual = trial_residual;
    }
    throw SteadyStateError("Newton refinement did not converge in " +
                           std::to_string(options.max_iterations) + " iterations");
}

namespace {

// Upper Hessenberg form by stabilized elementary similarity transforms.
void to_hessenberg(Mat4& a) {
    constexpr int n = 4;
    for (int m = 1; m < n - 1; ++m) {
        double x = 0.0;
        int i = m;
        for (int j = m; j < n; ++j) {
            if (std::abs(a[j][m - 1]) > std::abs(x)) {
                x = a[j][m - 1];
                i = j;
            }
        }
        if (i != m) {
            for (int j = m - 1; j < n; ++j) std::swap(a[i][j], a[m][j]);
            for (int j = 0; j < n; ++j) std::swap(a[j][i], a[j][m]);
        }
        if (x != 0.0) {
            for (i = m + 1; i < n; ++i) {
                double y = a[i][m - 1];
                if (y != 0.0) {
                    y /= x;
                    a[i][m - 1] = y;
                    for (int j = m; j < n; ++j) a[i][j] -= y * a[m][j];
                    for (int j = 0; j < n; ++j) a[j][m] += y * a[j][i];
                }
            }
        }
    }
    for (int i = 2; i < n; ++i)
        for (int j = 0; j < i - 1; ++j) a[i][j] = 0.0;
}

double sign_of(double magnitude, double s) { return s >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude); }

// Francis double-shift QR on an upper Hessenberg matrix.
Spectrum hessenberg_qr(Mat4 a) {
    constexpr int n = 4;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    Spectrum w{};
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a[i][j]);

    int nn = n - 1;
    double t = 0.0;
    double p = 0, q = 0, r = 0, s = 0, x = 0, y = 0, z = 0;
    while (nn >= 0) {
        int its = 0;
        int l;
        do {
            for (l = nn; l > 0; --l) {
                s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
                if (s == 0.0) s = anorm;
                if (std::abs(a[l][l - 1]) <= eps * s) {
                    a[l][l - 1] = 0.0;
                    break;
                }
            }
            x = a[nn][nn];
            if (l == nn) {
                w[nn--] = x + t;
            } else {
                y = a[nn - 1][nn - 1];
                const double wprod = a[nn][nn - 1] * a[nn - 1][nn];
                if (l == nn - 1) {
                    p = 0.5 * (y - x);
                    q = p * p + wprod;
                    z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        w[nn - 1] = w[nn] = x + z;
                        if (z != 0.0) w[nn] = x - wprod / z;
                    } else {
                        w[nn] = {x + p, -z};
                        w[nn - 1] = std::conj(w[nn]);
                    }
                    nn -= 2;
                } else {
                    if (its == 60) throw NumericalError("QR iteration did not converge");
                    double wshift = wprod;
                    if (its == 10 || its == 20) {
                        t += x;
                        for (int i = 0; i <= nn; ++i) a[i][i] -= x;
                        s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
                        y = x = 0.75 * s;
                        wshift = -0.4375 * s * s;
                    }
                    ++its;
                    int m;
                    for (m = nn - 2; m >= l; --m) {
                        z = a[m][m];
                        r = x - z;
                        s = y - z;
                        p = (r * s - wshift) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
                        const double v =
                            std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) + std::abs(a[m + 1][m + 1]));
                        if (u <= eps * v) break;
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        a[i + 2][i] = 0.0;
                        if (i != m) a[i + 2][i - 1] = 0.0;
                    }
                    for (int k = m; k < nn; ++k) {
                        if (k != m) {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if (k + 1 != nn) r = a[k + 2][k - 1];
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s != 0.0) {
                            if (k == m) {
                                if (l != m) a[k][k - 1] = -a[k][k - 1];
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for (int j = k; j <= nn; ++j) {
                                p = a[k][j] + q * a[k + 1][j];
                                if (k + 1 != nn) {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            const int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                p = x * a[i][k] + y * a[i][k + 1];
                                if (k + 1 != nn) {
                                    p += z * a[i][k + 2];
                                    a[i][k + 2] -= p * r;
                                }
                                a[i][k + 1] -= p * q;
                                a[i][k] -= p;
                            }
                        }
                    }
                }
            }
        } while (l + 1 < nn);
    }
    return w;
}

}  // namespace

Spectrum eigenvalues_4x4(const Mat4& matrix) {
    for (const auto& row : matrix)
        for (double v : row)
            if (!std::isfinite(v)) throw std::invalid_argument("matrix entries must be finite");
    Mat4 a = matrix;
    to_hessenberg(a);
    Spectrum w = hessenberg_qr(a);
    std::sort(w.begin(), w.end(), [](const std::complex<double>& lhs, const std::complex<double>& rhs) {
        if (lhs.real() != rhs.real()) return lhs.real() > rhs.real();
        return lhs.imag() > rhs.imag();
    });
    return w;
}

std::string_view to_string(Verdict verdict) {
    switch (verdict) {
    case Verdict::Stable: return "Stable";
    case Verdict::Unstable: return "Unstable";
    case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

Verdict classify(const Spectrum& eigenvalues, double zero_tol) {
    bool all_negative = true;
    for (const auto& lambda : eigenvalues) {
        if (lambda.real() > zero_tol) return Verdict::Unstable;
        if (!(lambda.real() < -zero_tol)) all_negative = false;
    }
    return all_negative ? Verdict::Stable : Verdict::Inconclusive;
}

std::array<StabilityReport, 6> full_stability_survey(const ModelParameters& params,
                                                     const NewtonOptions& options, double zero_tol) {
    // Survey numbering -> closed-form index. The survey lists the mixed
    // equilibria first and the healthy one last.
    constexpr std::array<int, 6> survey_from_closed_form{4, 5, 2, 0, 1, 3};

    const auto candidates = closed_form_steady_states(params);
    std::array<StabilityReport, 6> reports;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& candidate = candidates[survey_from_closed_form[i]];
        if (!candidate.state) {
            throw SteadyStateError("closed-form candidate '" + candidate.label + "' is degenerate");
        }
        StabilityReport& report = reports[i];
        report.label = "P_L" + std::to_string(i + 1);
        report.closed_form_label = candidate.label;
        report.steady_state = newton_refine(params, *candidate.state, options);
        const ModelParameters system = options.include_influx ? params : params.with_c0(0.0);
        report.eigenvalues = eigenvalues_4x4(analytic_jacobian(system, report.steady_state.state));
        report.verdict = classify(report.eigenvalues, zero_tol);
    }
    return reports;
}

}  // namespace marrow
