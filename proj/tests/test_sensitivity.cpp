#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "marrow/sensitivity.hpp"

using namespace marrow;

namespace {

template <class F>
std::vector<double> evaluate(const SaltelliDesign& design, F f) {
    std::vector<double> y(design.rows());
    for (std::size_t r = 0; r < design.rows(); ++r) y[r] = f(design.row(r));
    return y;
}

double ishigami(const std::vector<double>& u) {
    const double pi = std::numbers::pi;
    const double x1 = -pi + 2 * pi * u[0], x2 = -pi + 2 * pi * u[1], x3 = -pi + 2 * pi * u[2];
    return std::sin(x1) + 7.0 * std::sin(x2) * std::sin(x2) + 0.1 * std::pow(x3, 4) * std::sin(x1);
}

}  // namespace

TEST_CASE("Saltelli design layout") {
    const SaltelliDesign design(3, 64, 99);
    CHECK(design.rows() == 64 * 5);
    for (std::size_t i = 0; i < 64; ++i) {
        const auto a = design.row(i), b = design.row(64 + i);
        for (std::size_t c = 0; c < 3; ++c) {
            const auto hybrid = design.row((2 + c) * 64 + i);
            for (std::size_t k = 0; k < 3; ++k) CHECK(hybrid[k] == (k == c ? b[k] : a[k]));
        }
        for (double v : a) {
            CHECK(v >= 0.0);
            CHECK(v < 1.0);
        }
    }
    CHECK_THROWS_AS(design.row(design.rows()), std::out_of_range);
    CHECK_THROWS_AS(SaltelliDesign(0, 64, 1), std::invalid_argument);
}

TEST_CASE("design is seeded and deterministic") {
    const SaltelliDesign a(4, 128, 5), b(4, 128, 5), c(4, 128, 6);
    bool differs = false;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        CHECK(a.row(r) == b.row(r));
        differs = differs || a.row(r) != c.row(r);
    }
    CHECK(differs);
}

TEST_CASE("design marginals are uniform") {
    const SaltelliDesign design(4, 1024, 12345);
    for (std::size_t column = 0; column < 8; ++column) {
        std::vector<double> v;
        for (std::size_t i = 0; i < 1024; ++i) {
            const auto row = design.row(column < 4 ? i : 1024 + i);
            v.push_back(row[column % 4]);
        }
        std::sort(v.begin(), v.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double n = static_cast<double>(v.size());
            ks = std::max({ks, std::abs(v[i] - static_cast<double>(i) / n),
                           std::abs(v[i] - static_cast<double>(i + 1) / n)});
        }
        CAPTURE(column);
        CHECK(ks < 0.05);
    }
}

TEST_CASE("estimators on functions with known indices") {
    SUBCASE("additive x1 + 2 x2") {
        const SaltelliDesign design(2, 4096, 12345);
        const auto y = evaluate(design, [](const std::vector<double>& u) { return u[0] + 2.0 * u[1]; });
        const SobolIndices s = sobol_indices(y, 2, 4096, 100, 1);
        CHECK(std::abs(s.first_order[0] - 0.2) <= 0.02);
        CHECK(std::abs(s.first_order[1] - 0.8) <= 0.02);
        CHECK(std::abs(s.total[0] - 0.2) <= 0.02);
        CHECK(std::abs(s.total[1] - 0.8) <= 0.02);
        CHECK(s.variance == doctest::Approx(5.0 / 12.0).epsilon(0.02));
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(s.first_order_ci[i][0] <= s.first_order[i]);
            CHECK(s.first_order_ci[i][1] >= s.first_order[i]);
            CHECK(s.total_ci[i][0] <= s.total[i]);
            CHECK(s.total_ci[i][1] >= s.total[i]);
        }
    }
    SUBCASE("Ishigami") {
        const SaltelliDesign design(3, 8192, 3);
        const SobolIndices s = sobol_indices(evaluate(design, ishigami), 3, 8192);
        CHECK(std::abs(s.first_order[0] - 0.3139) <= 0.03);
        CHECK(std::abs(s.first_order[1] - 0.4424) <= 0.03);
        CHECK(std::abs(s.first_order[2]) <= 0.03);
        CHECK(std::abs(s.total[0] - 0.5576) <= 0.03);
        CHECK(std::abs(s.total[1] - 0.4424) <= 0.03);
        CHECK(std::abs(s.total[2] - 0.2437) <= 0.03);
    }
    SUBCASE("constant output is degenerate") {
        const std::vector<double> y(64 * 4, 3.25);
        const SobolIndices s = sobol_indices(y, 2, 64, 10, 1);
        CHECK(s.degenerate);
        CHECK(std::isnan(s.first_order[0]));
        CHECK(std::isnan(s.total[1]));
    }
    SUBCASE("input errors") {
        std::vector<double> y(64 * 4, 1.0);
        CHECK_THROWS_AS(sobol_indices(y, 3, 64), std::invalid_argument);
        y[5] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(sobol_indices(y, 2, 64), std::invalid_argument);
    }
}

TEST_CASE("configuration") {
    SobolConfig c;
    CHECK_NOTHROW(c.validate());
    c.base_samples = 1000;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.base_samples = 32;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.base_samples = 64;
    c.qoi.day = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    ParameterDomain d;
    CHECK_NOTHROW(d.validate());
    d.ranges[2] = {0.5, 0.5};
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);

    CHECK(Qoi{}.label() == "leukemic@15");
    CHECK(Qoi{QoiKind::HealthyAtDay, 33, QoiTransform::Log10}.label() == "log10(healthy)@33");
    CHECK(qoi_kind_from_string("healthy") == QoiKind::HealthyAtDay);
    CHECK(qoi_transform_from_string("log10") == QoiTransform::Log10);
    CHECK_THROWS_AS(qoi_kind_from_string("blasts"), std::invalid_argument);
}

TEST_CASE("scaled samples stay inside the domain") {
    const ParameterDomain domain;
    SobolConfig config;
    config.base_samples = 256;
    const auto samples = saltelli_matrices(domain, config);
    CHECK(samples.size() == 256 * 6);
    for (const auto& s : samples) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(s[j] >= domain.ranges[j].low);
            CHECK(s[j] <= domain.ranges[j].high);
        }
    }
}

TEST_CASE("treatment QoI") {
    const QoiContext context = make_qoi_context(ModelParameters::standard(), default_sehop_protocol());
    const std::array<double, 4> base{0.092, 2.11, 2.5 / 30.0, 2.5e-4};
    const Qoi leukemic{QoiKind::LeukemicAtDay, 15, QoiTransform::Log10};

    SUBCASE("stronger prednisone leaves fewer blasts") {
        double previous = std::numeric_limits<double>::infinity();
        for (double dp : {1.0 / 60.0, 0.05, 0.1, 1.0 / 6.0}) {
            auto d = base;
            d[0] = dp;
            const double v = evaluate_qoi(context, d, leukemic);
            CHECK(v < previous);
            previous = v;
        }
    }
    SUBCASE("stronger vincristine leaves fewer blasts") {
        auto lo = base, hi = base;
        lo[1] = 1.0 / 1.5;
        hi[1] = 10.0 / 1.5;
        CHECK(evaluate_qoi(context, hi, leukemic) < evaluate_qoi(context, lo, leukemic));
    }
    SUBCASE("identity and log10 transforms agree") {
        const double raw = evaluate_qoi(context, base, Qoi{});
        CHECK(std::log10(raw) == doctest::Approx(evaluate_qoi(context, base, leukemic)));
        CHECK(evaluate_qoi(context, base, Qoi{QoiKind::HealthyAtDay, 15, QoiTransform::Identity}) > 0.0);
    }
    SUBCASE("analysis is independent of the thread count") {
        SobolConfig config;
        config.base_samples = 64;
        config.bootstrap_resamples = 20;
        config.qoi = leukemic;
        const SobolResult one = sobol_analysis(context, ParameterDomain{}, config);
        config.threads = 4;
        const SobolResult four = sobol_analysis(context, ParameterDomain{}, config);
        CHECK(one.outputs == four.outputs);
        CHECK(one.indices.total == four.indices.total);
        CHECK(one.indices.first_order_ci == four.indices.first_order_ci);
    }
}
