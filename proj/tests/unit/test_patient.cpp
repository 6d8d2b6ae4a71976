#include <doctest.h>

#include "chokimpc/errors.hpp"
#include "chokimpc/patient.hpp"
#include "support.hpp"

using namespace chokimpc;
using doctest::Approx;

namespace {

PlantState run(const PatientParams& p, PlantState s, double basal, int steps, double mult = 1.0) {
    for (int k = 0; k < steps; ++k) s = plant_step(s, {basal, 0, 0, mult}, p);
    return s;
}

}  // namespace

TEST_CASE("equilibrium holds at u_ref") {
    const PatientParams p;
    PlantState s = PlantState::equilibrium(p, p.basal_glucose);
    for (int k = 0; k < 288; ++k) {
        const PlantState n = plant_step(s, {p.u_ref(), 0, 0, 1.0}, p);
        CHECK(std::abs(n.G - s.G) < 0.1);
        s = n;
    }
    CHECK(s.G == Approx(p.basal_glucose).epsilon(1e-6));
}

TEST_CASE("no insulin drifts up toward the hepatic ceiling") {
    const PatientParams p;
    PlantState s = PlantState::equilibrium(p, p.basal_glucose);
    double prev = s.G;
    for (int k = 0; k < 288 * 4; ++k) {
        s = plant_step(s, {0, 0, 0, 1.0}, p);
        CHECK(s.G >= prev - 1e-9);
        CHECK(s.G <= p.hepatic_ceiling() + 1e-9);
        prev = s.G;
    }
    CHECK(s.G > p.basal_glucose + 50);
}

TEST_CASE("meal with bolus returns below 180 within five hours") {
    PatientParams p;
    p.carb_ratio = 12.0;
    PlantState s = PlantState::equilibrium(p, p.basal_glucose);
    double peak = 0.0;
    for (int k = 0; k < 60; ++k) {
        const double meal = k < 3 ? 100.0 / 3.0 : 0.0;
        const double bolus = k == 4 ? bolus_calculate(100.0, s.G, p) : 0.0;
        s = plant_step(s, {p.u_ref(), bolus, meal, 1.0}, p);
        peak = std::max(peak, s.G);
    }
    CHECK(peak > p.basal_glucose + 20);
    CHECK(s.G < 180.0);
}

TEST_CASE("more insulin never raises glucose") {
    const PatientParams p;
    PlantState lo = PlantState::equilibrium(p, 150);
    PlantState hi = lo;
    for (int k = 0; k < 200; ++k) {
        const double meal = (k == 20) ? 40.0 : 0.0;
        lo = plant_step(lo, {p.u_ref(), 0, meal, 1.0}, p);
        hi = plant_step(hi, {p.u_ref() * 1.5, k == 25 ? 3000.0 : 0.0, meal, 1.0}, p);
        CHECK(hi.G <= lo.G + 1e-9);
        CHECK(hi.nonnegative());
    }
}

TEST_CASE("lower sensitivity gives higher steady glucose") {
    const PatientParams p;
    const PlantState s0 = PlantState::equilibrium(p, p.basal_glucose);
    CHECK(run(p, s0, p.u_ref(), 600, 0.8).G > run(p, s0, p.u_ref(), 600, 1.0).G);
}

TEST_CASE("sensitivity profile lookup") {
    const SensitivityProfile c = SensitivityProfile::circadian();
    CHECK(c.at(0) == 0.8);
    CHECK(c.at(359) == 0.8);
    CHECK(c.at(360) == 1.2);
    CHECK(c.at(719.9) == 1.2);
    CHECK(c.at(720) == 1.0);
    CHECK(c.at(1440 + 400) == 1.2);
    CHECK(SensitivityProfile::flat().at(400) == 1.0);
    SensitivityProfile bad;
    bad.segments = {{2, 1.0}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sensor") {
    CgmNoise off;
    off.enabled = false;
    CgmSensor exact(off, 1);
    CHECK(exact.measure(123.4) == 123.4);
    CHECK(exact.measure(500) == 400.0);
    CHECK(exact.measure(10) == 40.0);

    CgmSensor noisy(CgmNoise{}, 2);
    double s = 0.0, s2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double e = noisy.measure(150) - 150;
        s += e;
        s2 += e * e;
    }
    const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
    CHECK(sd >= 1.5);
    CHECK(sd <= 4.0);
}

TEST_CASE("pump") {
    InsulinPump quiet(false, 1);
    CHECK(quiet.actuate(100) == 100.0);
    InsulinPump pump(true, 3);
    CHECK(pump.actuate(0) == 0.0);
    double s = 0.0;
    for (int i = 0; i < 10000; ++i) s += pump.actuate(100);
    CHECK(std::abs(s / 10000 - 100) <= 0.01);
}

TEST_CASE("meal announcement") {
    RandomStream rng(4);
    CHECK(announce_meal(70, rng, false) == 70.0);
    CHECK(announce_meal(0, rng) == 0.0);
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double e = announce_meal(100, rng);
        CHECK(e >= 0.0);
        s += e;
        s2 += e * e;
    }
    const double sd = std::sqrt(s2 / 10000 - (s / 10000) * (s / 10000));
    CHECK(std::abs(sd - 30.0) <= 1.0);
}

TEST_CASE("bolus calculator") {
    PatientParams p;
    p.carb_ratio = 10;
    p.correction_factor = 50;
    CHECK(bolus_calculate(0, 120, p) == 0.0);
    CHECK(bolus_calculate(60, 120, p) == 36000.0);
    CHECK(bolus_calculate(0, 220, p) == 2 * kPmolPerUnit);
}

TEST_CASE("patient validation") {
    PatientParams p;
    p.si = -1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}
