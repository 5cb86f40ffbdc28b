#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "marrow/dopri5.hpp"
#include "marrow/solver.hpp"

using namespace marrow;

namespace {

double rel_diff(const MarrowState& a, const MarrowState& b) {
    double worst = 0.0;
    const Vec4 x = a.as_vec(), y = b.as_vec();
    for (int i = 0; i < 4; ++i) {
        const double scale = std::max({std::abs(x[i]), std::abs(y[i]), 1.0});
        worst = std::max(worst, std::abs(x[i] - y[i]) / scale);
    }
    return worst;
}

DormandPrince45 decay_stepper(double rate) {
    DormandPrince45::Settings s;
    s.abs_tol = {1e-14};
    s.rel_tol = 1e-12;
    return DormandPrince45([rate](double, std::span<const double> y, std::span<double> d) { d[0] = -rate * y[0]; },
                           1, s);
}

}  // namespace

TEST_CASE("Dormand-Prince fixed-step order") {
    auto stepper = decay_stepper(1.0);
    std::vector<double> errors;
    for (std::size_t steps : {8u, 16u, 32u}) {
        std::vector<double> y{1.0};
        stepper.integrate_fixed(0.0, 2.0, steps, y);
        errors.push_back(std::abs(y[0] - std::exp(-2.0)));
    }
    const double order1 = std::log2(errors[0] / errors[1]);
    const double order2 = std::log2(errors[1] / errors[2]);
    CHECK(order1 == doctest::Approx(5.0).epsilon(0.06));
    CHECK(order2 == doctest::Approx(5.0).epsilon(0.06));
}

TEST_CASE("Dormand-Prince adaptive run and dense output") {
    auto stepper = decay_stepper(3.0);
    std::vector<double> y{2.0};
    const std::vector<double> grid{0.0, 0.125, 0.5, 0.9, 1.0};
    std::vector<double> seen;
    stepper.integrate(0.0, 1.0, y, grid, [&](double t, std::span<const double> v) {
        seen.push_back(t);
        CHECK(v[0] == doctest::Approx(2.0 * std::exp(-3.0 * t)).epsilon(1e-9));
    });
    CHECK(seen == grid);
    CHECK(y[0] == doctest::Approx(2.0 * std::exp(-3.0)).epsilon(1e-11));
    CHECK(stepper.statistics().accepted > 0);
}

TEST_CASE("Dormand-Prince reports failures") {
    DormandPrince45::Settings s;
    s.abs_tol = {1e-12};
    s.max_steps = 10;
    DormandPrince45 stiff([](double, std::span<const double> y, std::span<double> d) { d[0] = -1e6 * y[0]; }, 1, s);
    std::vector<double> y{1.0};
    CHECK_THROWS_AS(stiff.integrate(0.0, 100.0, y), NumericalError);

    DormandPrince45 blowup([](double, std::span<const double> y, std::span<double> d) { d[0] = y[0] * y[0]; }, 1,
                           DormandPrince45::Settings{1e-8, {1e-8}, 1.0, 1e-3, 5'000'000});
    y = {1.0};
    CHECK_THROWS_AS(blowup.integrate(0.0, 2.0, y), NumericalError);
}

TEST_CASE("untreated integration") {
    const auto p = ModelParameters::standard();

    SUBCASE("empty marrow without influx stays empty") {
        const auto trace = integrate_leukemia(p.with_c0(0.0), MarrowState{}, 0.0, 50.0);
        for (const auto& s : trace.states) CHECK(s == MarrowState{});
    }
    SUBCASE("healthy marrow never grows a clone") {
        MarrowState healthy = standard_initial_state();
        healthy.l = 0.0;
        const auto trace = integrate_leukemia(p, healthy, 0.0, 200.0);
        for (const auto& s : trace.states) CHECK(s.l == 0.0);
    }
    SUBCASE("state at day 150 matches a tight independent integration") {
        const auto trace = integrate_leukemia(p, standard_initial_state(), 0.0, 150.0);
        const MarrowState reference{1701940778.029635, 10429646667.311802, 6397955639.2567377,
                                    89616916043.884659};
        CHECK(rel_diff(trace.final_state(), reference) < 1e-6);
    }
    SUBCASE("halving the tolerances moves the day-150 state by less than 10 rel_tol") {
        SolverConfig loose, tight;
        tight.rel_tol = loose.rel_tol / 2.0;
        tight.abs_tol = loose.abs_tol / 2.0;
        const auto a = integrate_leukemia(p, standard_initial_state(), 0.0, 150.0, loose).final_state();
        const auto b = integrate_leukemia(p, standard_initial_state(), 0.0, 150.0, tight).final_state();
        CHECK(rel_diff(a, b) < 10.0 * loose.rel_tol);
    }
    SUBCASE("detection day for both clone origins") {
        const auto prob = integrate_leukemia(p, standard_initial_state(), 0.0, 300.0);
        const auto day = detect_detection_day(prob);
        REQUIRE(day.has_value());
        // Reference from a 1e-3-day grid on the independent integration.
        CHECK(*day == doctest::Approx(149.34173590094517).epsilon(1e-5));

        const auto preb = integrate_leukemia(p.with_origin(CloneOrigin::PreB), standard_initial_state(), 0.0, 300.0);
        const auto later = detect_detection_day(preb);
        REQUIRE(later.has_value());
        CHECK(*later > *day);
        CHECK(*later > 218.0);
        CHECK(*later < 228.0);
    }
    SUBCASE("no crossing") {
        const auto trace = integrate_leukemia(p, standard_initial_state(), 0.0, 100.0);
        CHECK_FALSE(detect_detection_day(trace).has_value());
    }
    SUBCASE("deterministic") {
        const auto a = integrate_leukemia(p, standard_initial_state(), 0.0, 120.0);
        const auto b = integrate_leukemia(p, standard_initial_state(), 0.0, 120.0);
        CHECK(a.times == b.times);
        CHECK(a.states == b.states);
    }
    SUBCASE("argument errors") {
        CHECK_THROWS_AS(integrate_leukemia(p, standard_initial_state(), 5.0, 5.0), std::invalid_argument);
        CHECK_THROWS_AS(integrate_leukemia(p, {-1.0, 0, 0, 0}, 0.0, 1.0), std::invalid_argument);
        SolverConfig bad;
        bad.rel_tol = 0.0;
        CHECK_THROWS_AS(integrate_leukemia(p, standard_initial_state(), 0.0, 1.0, bad), std::invalid_argument);
    }
}

TEST_CASE("trace queries") {
    CHECK(blast_fraction({1e9, 1e9, 1e9, 0.0}) == 0.0);
    CHECK(blast_fraction({0, 0, 0, 5.0}) == 1.0);
    CHECK(blast_fraction({1e9, 1e9, 1e9, 1.2e10}) == doctest::Approx(0.8));
    CHECK_THROWS_AS(blast_fraction({}), std::domain_error);

    SimulationTrace t;
    t.times = {0.0, 1.0, 2.0};
    t.states = {{0, 0, 0, 2}, {4, 8, 2, 6}, {1, 1, 1, 1}};
    t.mu_values = {0.0, 1.0, 3.0};
    CHECK(sample_at(t, 1.0) == t.states[1]);
    CHECK(sample_at(t, 0.5) == MarrowState{2, 4, 1, 4});
    CHECK(mu_at(t, 1.5) == doctest::Approx(2.0));
    CHECK_THROWS_AS(sample_at(t, 2.5), std::out_of_range);
    CHECK_THROWS_AS(sample_at(t, -0.1), std::out_of_range);
}

TEST_CASE("treated integration") {
    const auto p = ModelParameters::standard();
    const auto growth = integrate_leukemia(p, standard_initial_state(), 0.0, 150.0);
    const MarrowState start = growth.final_state();
    const Protocol protocol = default_sehop_protocol();

    SUBCASE("zero doses reduce to the untreated system") {
        const Protocol none = protocol.with_zero_doses();
        const auto treated = integrate_treatment(p, none, start, DrugState::zeros(none), 150.0, 200.0);
        const auto untreated = integrate_leukemia(p, start, 150.0, 200.0);
        REQUIRE(treated.times == untreated.times);
        for (std::size_t i = 0; i < treated.size(); ++i) {
            CHECK(rel_diff(treated.states[i], untreated.states[i]) < 1e-6);
            CHECK(treated.mu_values[i] == 0.0);
        }
    }
    SUBCASE("grid lands on every day boundary") {
        const auto trace = integrate_treatment(p, protocol, start, DrugState::zeros(protocol), 150.0, 190.0);
        for (int d = 0; d <= 40; ++d) {
            CHECK(std::count(trace.times.begin(), trace.times.end(), 150.0 + d) == 1);
        }
        CHECK(std::is_sorted(trace.times.begin(), trace.times.end()));
        CHECK(std::adjacent_find(trace.times.begin(), trace.times.end()) == trace.times.end());
        CHECK(trace.metadata.treatment_start == 150.0);
        CHECK(trace.metadata.drug_ids.size() == 4);
    }
    SUBCASE("reservoirs decay exponentially between dose boundaries") {
        const auto trace = integrate_treatment(p, protocol, start, DrugState::zeros(protocol), 150.0, 200.0);
        double worst = 0.0;
        std::size_t anchor = 0;
        for (std::size_t i = 1; i < trace.size(); ++i) {
            if (trace.times[i] == std::floor(trace.times[i])) {
                anchor = i;  // doses apply at this instant; the next day starts here
                continue;
            }
            for (std::size_t j = 0; j < 4; ++j) {
                const double m0 = trace.drug_amounts[anchor].amounts[j];
                if (m0 < 1e-6) continue;
                const double exact = m0 * std::exp(-protocol.drugs()[j].lambda * (trace.times[i] - trace.times[anchor]));
                if (exact < 1e-6) continue;
                worst = std::max(worst, std::abs(trace.drug_amounts[i].amounts[j] - exact) / exact);
            }
        }
        CHECK(worst < 1e-8);
    }
    SUBCASE("sawtooth effect: one jump per dose day") {
        const auto trace = integrate_treatment(p, protocol, start, DrugState::zeros(protocol), 150.0, 200.0);
        int jumps = 0;
        for (std::size_t i = 1; i < trace.size(); ++i) {
            if (trace.mu_values[i] > trace.mu_values[i - 1] * (1.0 + 1e-9)) ++jumps;
        }
        // Prednisone is given every day; the day-1 dose is already in the first sample.
        CHECK(trace.mu_values.front() > 0.0);
        CHECK(jumps == 36);
        const auto after = std::find(trace.times.begin(), trace.times.end(), 187.0) - trace.times.begin();
        for (auto i = static_cast<std::size_t>(after) + 1; i < trace.size(); ++i) {
            CHECK(trace.mu_values[i] < trace.mu_values[i - 1]);
        }
    }
    SUBCASE("day +8 samples agree with a direct run to that instant") {
        const auto trace = integrate_treatment(p, protocol, start, DrugState::zeros(protocol), 150.0, 170.0);
        const auto direct = integrate_treatment(p, protocol, start, DrugState::zeros(protocol), 150.0, 158.0);
        CHECK(rel_diff(sample_at(trace, 158.0), direct.final_state()) < 1e-12);
    }
    SUBCASE("in-day timing gives a stronger first week") {
        SolverConfig inday;
        inday.dose_timing = DoseTiming::InDayThenImpulse;
        const auto a = integrate_treatment(p, protocol, start, DrugState::zeros(protocol), 150.0, 158.0);
        const auto b = integrate_treatment(p, protocol, start, DrugState::zeros(protocol), 150.0, 158.0, inday);
        CHECK(b.final_state().l < a.final_state().l);
        CHECK(b.metadata.config_digest != a.metadata.config_digest);
    }
    SUBCASE("argument errors") {
        CHECK_THROWS_AS(integrate_treatment(p, protocol, start, DrugState{{1.0}}, 150.0, 160.0), std::invalid_argument);
        CHECK_THROWS_AS(integrate_treatment(p, protocol, start, DrugState{{-1.0, 0, 0, 0}}, 150.0, 160.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(integrate_treatment(p, protocol, start, DrugState::zeros(protocol), 150.0, 150.0),
                        std::invalid_argument);
    }
}
