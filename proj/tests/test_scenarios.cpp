#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "marrow/scenarios.hpp"

using namespace marrow;

TEST_CASE("response criteria") {
    const ResponseCriteria c = ResponseCriteria::from_blood(2.3, 10.0);
    CHECK(c.day8_marrow_blast_limit == doctest::Approx(2.3e10));
    CHECK(ResponseCriteria{}.day8_marrow_blast_limit == doctest::Approx(c.day8_marrow_blast_limit));
    CHECK_NOTHROW(c.validate());

    ResponseCriteria open = c;
    open.day8_marrow_blast_limit = std::numeric_limits<double>::infinity();
    CHECK_NOTHROW(open.validate());
    open.blood_volume = 0.0;
    CHECK_THROWS_AS(open.validate(), std::invalid_argument);
    CHECK(to_string(Response::Responder) == "Responder");
    CHECK(to_string(Response::NonResponder) == "NonResponder");
}

TEST_CASE("growth and treatment start") {
    const auto p = ModelParameters::standard();
    const GrowthResult prob = growth_experiment(p);
    const GrowthResult preb = growth_experiment(p.with_origin(CloneOrigin::PreB));
    REQUIRE(prob.detection_day);
    REQUIRE(preb.detection_day);
    CHECK(*preb.detection_day > *prob.detection_day + 50.0);
    CHECK(prob.trace.times.back() == kGrowthHorizon);

    const TreatmentStart next = treatment_start(p);
    CHECK(next.t_start == std::ceil(next.detection_day));
    CHECK(next.detection_day == doctest::Approx(*prob.detection_day));

    const TreatmentStart at = treatment_start(p, StartRule::AtDetection);
    CHECK(at.t_start == at.detection_day);
    CHECK(blast_fraction(at.state) == doctest::Approx(kDetectionThreshold).epsilon(1e-4));
    CHECK(blast_fraction(next.state) > kDetectionThreshold);

    MarrowState cured = standard_initial_state();
    cured.l = 0.0;
    CHECK_THROWS_AS(treatment_start(p, StartRule::NextWholeDay, {}, cured), ScenarioError);

    CHECK(start_rule_from_string(to_string(StartRule::AtDetection)) == StartRule::AtDetection);
    CHECK(start_rule_from_string("next-whole-day") == StartRule::NextWholeDay);
    CHECK_THROWS_AS(start_rule_from_string("ceil"), std::invalid_argument);
}

TEST_CASE("response classification") {
    const auto p = ModelParameters::standard();
    const TreatmentStart start = treatment_start(p);
    const Protocol protocol = default_sehop_protocol();

    SUBCASE("untreated disease is a non-responder at every checkpoint") {
        const auto trace = integrate_leukemia(p, start.state, start.t_start, start.t_start + 40.0);
        const ResponseReport r = classify_response(trace, {}, start.t_start);
        CHECK(r.overall == Response::NonResponder);
        CHECK_FALSE(r.day8.pass);
        CHECK_FALSE(r.day15.pass);
        CHECK_FALSE(r.day33.pass);
        CHECK(r.day8.time == start.t_start + 8.0);
        CHECK(r.day33.time == start.t_start + 33.0);

        ResponseCriteria open;
        open.day8_marrow_blast_limit = std::numeric_limits<double>::infinity();
        CHECK(classify_response(trace, open, start.t_start).day8.pass);
    }
    SUBCASE("default protocol responds") {
        const auto trace = integrate_treatment(p, protocol, start.state, DrugState::zeros(protocol), start.t_start,
                                               start.t_start + 37.0);
        const ResponseReport r = classify_response(trace, {}, start.t_start);
        CHECK(r.overall == Response::Responder);
        CHECK(r.day8.value == doctest::Approx(sample_at(trace, start.t_start + 8.0).l));
        CHECK(r.day15.value == doctest::Approx(blast_fraction(sample_at(trace, start.t_start + 15.0))));
    }
    SUBCASE("weakest drugs fail") {
        DrugDeltas weak;
        weak.prednisone = 1.0 / 60.0;
        weak.vincristine = 1.0 / 1.5;
        weak.daunorubicin = 1.0 / 30.0;
        weak.asparaginase = 1e-4;
        const Protocol run = protocol.with_deltas(weak);
        const auto trace = integrate_treatment(p, run, start.state, DrugState::zeros(run), start.t_start,
                                               start.t_start + 37.0);
        CHECK(classify_response(trace, {}, start.t_start).overall == Response::NonResponder);
    }
    SUBCASE("trace must cover the checkpoints") {
        const auto trace = integrate_leukemia(p, start.state, start.t_start, start.t_start + 20.0);
        CHECK_THROWS_AS(classify_response(trace, {}, start.t_start), ScenarioError);
        CHECK_THROWS_AS(classify_response(trace, {}, start.t_start - 1.0), ScenarioError);
    }
}

TEST_CASE("prednisone sweep") {
    const auto p = ModelParameters::standard();
    const SweepResult sweep = prednisone_sweep(p, default_sehop_protocol());
    REQUIRE(sweep.delta_values.size() == 50);
    CHECK(sweep.delta_values.front() == doctest::Approx(1.0 / 60.0));
    CHECK(sweep.delta_values.back() == doctest::Approx(1.0 / 6.0));
    CHECK(sweep.midpoint == doctest::Approx(0.5 * (1.0 / 60.0 + 1.0 / 6.0)));
    for (std::size_t i = 1; i < 50; ++i) {
        CHECK(sweep.day8_blasts[i] <= sweep.day8_blasts[i - 1]);
        CHECK(sweep.responds[i] == (sweep.day8_blasts[i] <= ResponseCriteria{}.day8_marrow_blast_limit));
    }
    REQUIRE(sweep.threshold_delta);
    REQUIRE(sweep.crossing_delta);
    CHECK(*sweep.crossing_delta <= *sweep.threshold_delta);
    const auto first = std::find(sweep.responds.begin(), sweep.responds.end(), true) - sweep.responds.begin();
    CHECK(*sweep.threshold_delta == sweep.delta_values[static_cast<std::size_t>(first)]);
    CHECK(*sweep.crossing_delta > sweep.delta_values[static_cast<std::size_t>(first) - 1]);

    SweepOptions threaded;
    threaded.threads = 3;
    CHECK(prednisone_sweep(p, default_sehop_protocol(), threaded).day8_blasts == sweep.day8_blasts);

    SweepOptions bad;
    bad.count = 1;
    CHECK_THROWS_AS(prednisone_sweep(p, default_sehop_protocol(), bad), std::invalid_argument);
    bad.count = 5;
    bad.high = bad.low;
    CHECK_THROWS_AS(prednisone_sweep(p, default_sehop_protocol(), bad), std::invalid_argument);
}

TEST_CASE("linspace") {
    CHECK(linspace(0.0, 1.0, 5) == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(linspace(2.0, 3.0, 1) == std::vector<double>{2.0});
    CHECK(linspace(0.0, 0.167, 21).back() == 0.167);
    CHECK_THROWS_AS(linspace(0.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("heatmap") {
    const auto p = ModelParameters::standard();
    HeatmapOptions options;
    options.delta_P = linspace(0.0, 0.167, 5);
    options.delta_V = linspace(0.0, 4.22, 5);
    const HeatmapResult map = heatmap(p, default_sehop_protocol(), options);
    REQUIRE(map.mrd_percent.size() == 25);
    for (std::size_t ip = 0; ip < 5; ++ip) {
        for (std::size_t iv = 0; iv < 5; ++iv) {
            CHECK(map.at(ip, iv) >= 0.0);
            CHECK(map.at(ip, iv) <= 100.0);
            if (ip > 0) CHECK(map.at(ip, iv) <= map.at(ip - 1, iv));
            if (iv > 0) CHECK(map.at(ip, iv) <= map.at(ip, iv - 1));
        }
    }
    CHECK(map.at(0, 0) > 1.0);
    CHECK(map.at(4, 4) < 0.01);

    options.threads = 4;
    CHECK(heatmap(p, default_sehop_protocol(), options).mrd_percent == map.mrd_percent);
}

TEST_CASE("region summary") {
    HeatmapResult map;
    map.delta_P = {0, 1, 2};
    map.delta_V = {0, 1, 2};
    // Responders (x) form two islands under 4-connectivity:
    //   x . x
    //   . . x
    //   . . .
    map.mrd_percent = {0.001, 5, 0.001, 5, 5, 0.001, 5, 5, 5};
    const RegionSummary r = region_summary(map, 0.01);
    CHECK(r.responder_cells == 3);
    CHECK(r.nonresponder_cells == 6);
    CHECK(r.responder_components == 2);
    CHECK(r.nonresponder_components == 1);
}

TEST_CASE("full course") {
    const auto p = ModelParameters::standard();
    const FullCourseResult course = full_treatment_experiment(p, default_sehop_protocol());
    CHECK(course.response.overall == Response::Responder);
    CHECK(course.treatment.times.front() == course.start.t_start);
    CHECK(course.treatment.times.back() == course.start.t_start + 137.0);

    const SimulationTrace all = course.combined_trace();
    CHECK(all.times.front() == 0.0);
    CHECK(std::adjacent_find(all.times.begin(), all.times.end(), std::greater_equal<>()) == all.times.end());
    CHECK(all.size() == all.states.size());
    CHECK(all.size() == all.drug_amounts.size());

    // Blasts fall fastest on a combined vincristine and daunorubicin day.
    double best = 0.0;
    int best_day = 0;
    for (int d = 1; d <= 33; ++d) {
        const double t = course.start.t_start + d;
        const double drop = std::log(sample_at(course.treatment, t - 1.0).l / sample_at(course.treatment, t).l);
        if (drop > best) {
            best = drop;
            best_day = d;
        }
    }
    CHECK((best_day == 8 || best_day == 15));

    const HealthyRecovery rec = healthy_recovery(course.treatment, course.start.t_start, 87.0);
    CHECK(rec.time == course.start.t_start + 87.0);
    CHECK(rec.worst == doctest::Approx(std::max({std::abs(rec.ratio[0] - 1), std::abs(rec.ratio[1] - 1),
                                                 std::abs(rec.ratio[2] - 1)})));
    CHECK_THROWS_AS(healthy_recovery(course.treatment, course.start.t_start, 200.0), std::out_of_range);
}
