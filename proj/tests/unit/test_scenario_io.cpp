#include <doctest.h>

#include <filesystem>

#include "chokimpc/errors.hpp"
#include "chokimpc/io.hpp"
#include "chokimpc/pipeline.hpp"
#include "chokimpc/scenario.hpp"
#include "chokimpc/tightening.hpp"

using namespace chokimpc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("chokimpc_unit_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Excitation sweep() {
    Excitation e;
    e.basal_levels = {0, 250, 500};
    e.initial_bg = {120};
    e.meal_sets = {{}};
    e.segment_hours = 12;
    return e;
}

}  // namespace

TEST_CASE("basal sweep sample arithmetic and segment isolation") {
    const PatientParams p;
    const SignalLog log = generate_training_data(p, sweep(), 1);
    CHECK(log.size() == 432);
    CHECK(log.segment.front() == 0);
    CHECK(log.segment.back() == 2);
    const RegressorDataset ds = build_regressors(log, {5, 9, 3});
    CHECK(ds.size() == 3 * (144 - 9 - 1));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        // insulin lags are constant within a segment
        const auto w = ds.row(i);
        CHECK(w[16] == w[19]);
    }
    Excitation none;
    CHECK_THROWS_AS(generate_training_data(p, none, 1), ConfigError);
}

TEST_CASE("three-meal scenario and trace length") {
    const Scenario s = Scenario::three_meal_days();
    CHECK(s.samples() == 864);
    REQUIRE(s.meals.size() == 3);
    CHECK(s.meals[0].minute == 360.0);
    CHECK(s.meals[1].grams == 100.0);
    CHECK(s.meals[2].minute == 19 * 60.0);
    CHECK(s.meals[2].duration_min == 15.0);

    const PatientParams p;
    Scenario quiet = s;
    quiet.noise = {false, false, false};
    const ClosedLoopResult r = run_closed_loop(p, nullptr, quiet);
    CHECK(!r.fault);
    CHECK(r.trace.size() == 864);
    CHECK(r.trace.t_min.back() == 863 * 5.0);
    const ClosedLoopResult again = run_closed_loop(p, nullptr, quiet);
    CHECK(again.trace.bg == r.trace.bg);

    Scenario fast;
    fast.days = 1;
    fast.noise = {false, false, false};
    const ClosedLoopResult flat = run_closed_loop(p, nullptr, fast);
    for (double g : flat.trace.bg) CHECK(std::abs(g - p.basal_glucose) <= 5.0);
}

TEST_CASE("boluses follow meals by twenty minutes and the trace records commands") {
    PatientParams p;
    Scenario s = Scenario::three_meal_days(1);
    s.noise = {false, true, false};
    const ClosedLoopResult r = run_closed_loop(p, nullptr, s);
    const GlucoseTrace& t = r.trace;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t.meal_est[k] > 0) {
            CHECK(t.bolus[k + 4] > 0.0);
            CHECK(t.bolus[k + 4] == bolus_calculate(t.meal_est[k], t.cgm[k + 4], p));
        }
        CHECK(t.basal_cmd[k] == p.u_ref());
        CHECK(std::abs(t.basal_act[k] - t.basal_cmd[k]) < 1.0);
    }
}

TEST_CASE("save, load, save is byte-identical") {
    const fs::path d = scratch("roundtrip");
    const PatientParams p;
    const SignalLog log = generate_training_data(p, sweep(), 2);
    save_signal_log(d / "a.csv", log);
    save_signal_log(d / "b.csv", load_signal_log(d / "a.csv"));
    CHECK(read_text(d / "a.csv") == read_text(d / "b.csv"));
    const SignalLog back = load_signal_log(d / "a.csv");
    CHECK(back.y == log.y);
    CHECK(back.u2 == log.u2);

    const RegressorDataset ds = build_regressors(log, {5, 9, 3});
    save_dataset(d / "ds.csv", ds);
    save_dataset(d / "ds2.csv", load_dataset(d / "ds.csv"));
    CHECK(read_text(d / "ds.csv") == read_text(d / "ds2.csv"));
    CHECK(load_dataset(d / "ds.csv").regressors() == ds.regressors());

    Scenario s = Scenario::three_meal_days(1);
    const ClosedLoopResult r = run_closed_loop(p, nullptr, s);
    save_trace(d / "t.csv", r.trace);
    save_trace(d / "t2.csv", load_trace(d / "t.csv"));
    CHECK(read_text(d / "t.csv") == read_text(d / "t2.csv"));
    CHECK(load_trace(d / "t.csv").bg == r.trace.bg);

    write_json(d / "p.json", to_json(p));
    write_json(d / "p2.json", to_json(patient_from_json(read_json(d / "p.json"))));
    CHECK(read_text(d / "p.json") == read_text(d / "p2.json"));

    write_json(d / "s.json", to_json(s));
    write_json(d / "s2.json", to_json(scenario_from_json(read_json(d / "s.json"))));
    CHECK(read_text(d / "s.json") == read_text(d / "s2.json"));

    const HolderParams hp = HolderParams::from_blocks({5, 9, 3}, 0.1 + 1e-15, 1.0 / 3.0, 2.0 / 7.0, 1.0, 14.83);
    const HolderParams hq = holder_params_from_json(to_json(hp));
    CHECK(hq.L == hp.L);
    CHECK(hq.mu == hp.mu);

    Eigen::MatrixXd m(2, 3);
    m << 1.0 / 3, -2e-300, 7, 0.1, 1e300, -0.0;
    CHECK(matrix_from_json(Json{{"m", to_json(m)}}, "m") == m);
}

TEST_CASE("controller bundle round trip") {
    const fs::path d = scratch("bundle");
    const PatientParams p;
    const SignalLog log = generate_training_data(p, sweep(), 3);
    FitConfig fc;
    const FitOutcome fo = fit_pipeline(log, fc);
    const PredictionModel model(fo.train, fo.params);
    ControllerDesign design;
    design.min_width = 0;
    const ControllerDesignReport rep = design_controller(model, p.u_ref(), design);
    save_dataset(d / "train.csv", *fo.train);
    ControllerBundle b{fo.params, "train.csv", rep.config, rep.linear.epsilon, rep.terminal.residual};
    save_controller(d / "c.json", b);
    save_controller(d / "c2.json", load_controller(d / "c.json"));
    CHECK(read_text(d / "c.json") == read_text(d / "c2.json"));
    const MpcController c = make_controller(d / "c.json");
    CHECK(c.config().K == rep.config.K);
    CHECK(c.config().P == rep.config.P);
    CHECK(c.config().Nc == rep.config.Nc);
}

TEST_CASE("malformed files name the line or field") {
    const fs::path d = scratch("malformed");
    write_text_atomic(d / "log.csv", "t_min,y_mgdl,u1_g\n0,1,2\n");
    try {
        (void)load_signal_log(d / "log.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("u2_pmol") != std::string::npos);
    }
    write_text_atomic(d / "log2.csv", "t_min,y_mgdl,u1_g,u2_pmol\n0,1,2,3\n5,abc,2,3\n");
    try {
        (void)load_signal_log(d / "log2.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        CHECK(std::string(e.what()).find("y_mgdl") != std::string::npos);
    }
    write_text_atomic(d / "p.json", R"({"name": "x", "si": "high"})");
    try {
        (void)load_patient(d / "p.json");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("si") != std::string::npos);
    }
    write_text_atomic(d / "s.json", R"({"days": 1, "meals": [{"time": "25:99", "grams": 10}]})");
    CHECK_THROWS_AS(load_scenario(d / "s.json"), ConfigError);
}
