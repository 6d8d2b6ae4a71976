#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chokimpc/random.hpp"

namespace chokimpc {

/// pmol of insulin per unit.
inline constexpr double kPmolPerUnit = 6000.0;

/// Piecewise-constant 24 h insulin-sensitivity multiplier.
struct SensitivityProfile {
    /// (start hour, multiplier), sorted by start hour; the first entry starts at 0.
    std::vector<std::pair<double, double>> segments{{0.0, 1.0}};

    static SensitivityProfile flat();
    /// 0.8 from 00 to 06 h, 1.2 from 06 to 12 h, 1.0 from 12 to 24 h.
    static SensitivityProfile circadian();

    /// Multiplier in effect at `minute_of_day` (wrapped to [0, 1440)).
    [[nodiscard]] double at(double minute_of_day) const;
    void validate() const;
};

/// Substitute virtual patient: Bergman-type minimal model with two-compartment
/// subcutaneous insulin and gut absorption.
///
///   S1' = r(t) - ka S1               S2' = ka (S1 - S2)
///   I'  = ka S2 / VI - ke I          X'  = p2 (m(t) SI I - X)
///   D1' = meal(t) - kabs D1          D2' = kabs (D1 - D2)
///   G'  = EGP0 - (GEZI + X) G + f kabs D2 1000 / VG
struct PatientParams {
    std::string name = "adult";
    double body_weight = 70.0;       // kg
    double egp0 = 1.4;               // mg/dL/min, glucose production at zero insulin action
    double gezi = 0.004;             // 1/min, glucose effectiveness at zero insulin
    double si = 3.5e-4;              // (1/min) per (pmol/L)
    double p2 = 0.02;                // 1/min, remote insulin action rate
    double vi = 0.12;                // L/kg, insulin distribution volume
    double ke = 0.138;               // 1/min, plasma insulin elimination
    double ka = 0.018;               // 1/min, subcutaneous absorption
    double vg = 1.6;                 // dL/kg, glucose distribution volume
    double kabs = 0.025;             // 1/min, gut absorption
    double bioavailability = 0.8;
    double basal_glucose = 120.0;    // mg/dL at the equilibrium basal
    double carb_ratio = 35.0;        // g per unit
    double correction_factor = 100.0;  // mg/dL per unit
    double target = 120.0;           // mg/dL
    SensitivityProfile profile = SensitivityProfile::circadian();

    /// Remote insulin action at the basal equilibrium.
    [[nodiscard]] double basal_action() const;
    /// Plasma insulin at the basal equilibrium, pmol/L.
    [[nodiscard]] double basal_plasma_insulin() const;
    /// Equilibrium basal dose, pmol per 5-min sample.
    [[nodiscard]] double u_ref() const;
    /// Glucose ceiling reached with no insulin at all.
    [[nodiscard]] double hepatic_ceiling() const { return egp0 / gezi; }

    void validate() const;
};

struct PlantState {
    double G = 120.0;  // plasma glucose, mg/dL
    double X = 0.0;    // remote insulin action, 1/min
    double I = 0.0;    // plasma insulin, pmol/L
    double S1 = 0.0;   // subcutaneous depots, pmol
    double S2 = 0.0;
    double D1 = 0.0;   // gut carbohydrate, g
    double D2 = 0.0;

    /// Insulin states at the basal equilibrium, glucose at `glucose`.
    static PlantState equilibrium(const PatientParams& p, double glucose);
    [[nodiscard]] bool nonnegative() const;
};

struct PlantInputs {
    double basal = 0.0;  // pmol delivered uniformly over the sample
    double bolus = 0.0;  // pmol injected at the start of the sample
    double meal = 0.0;   // g ingested uniformly over the sample
    double sensitivity = 1.0;
};

/// One 5-min sample, RK4 with 1-min substeps. Throws SimulationFault on blow-up.
PlantState plant_step(const PlantState& state, const PlantInputs& in, const PatientParams& params,
                      double dt_min = 5.0, int substeps = 5);

struct CgmNoise {
    bool enabled = true;
    double ar_coefficient = 0.7;
    double innovation_std = 2.0;  // mg/dL
    double transform_scale = 6.0; // Johnson SU-type shape, mg/dL
    double sensor_min = 40.0;
    double sensor_max = 400.0;
};

/// CGM with AR(1) noise passed through a monotone sinh transform, clamped to the sensor range.
class CgmSensor {
public:
    CgmSensor(CgmNoise noise, std::uint64_t seed);
    double measure(double bg);

private:
    CgmNoise noise_;
    RandomStream rng_;
    double state_ = 0.0;
};

/// Pump with additive N(0, 0.1) pmol noise; zero commands deliver exactly zero.
class InsulinPump {
public:
    InsulinPump(bool noise, std::uint64_t seed, double stddev = 0.1);
    double actuate(double command);

private:
    bool noise_;
    RandomStream rng_;
    double stddev_;
};

/// carbs * (1 + N(0, 0.3)), floored at zero.
double announce_meal(double carbs, RandomStream& rng, bool noise = true, double relative_std = 0.3);

/// est/CR + max(0, BG - target)/CF units, returned in pmol.
double bolus_calculate(double est_carbs, double bg, const PatientParams& params);

}  // namespace chokimpc
