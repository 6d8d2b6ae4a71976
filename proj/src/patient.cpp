#include "chokimpc/patient.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "chokimpc/errors.hpp"
#include "chokimpc/narx_data.hpp"

namespace chokimpc {

SensitivityProfile SensitivityProfile::flat() { return SensitivityProfile{{{0.0, 1.0}}}; }

SensitivityProfile SensitivityProfile::circadian() {
    return SensitivityProfile{{{0.0, 0.8}, {6.0, 1.2}, {12.0, 1.0}}};
}

double SensitivityProfile::at(double minute_of_day) const {
    double m = std::fmod(minute_of_day, 1440.0);
    if (m < 0.0) m += 1440.0;
    const double hour = m / 60.0;
    double mult = segments.front().second;
    for (const auto& [start, value] : segments) {
        if (hour >= start) mult = value;
    }
    return mult;
}

void SensitivityProfile::validate() const {
    if (segments.empty() || segments.front().first != 0.0) {
        throw ConfigError("sensitivity profile must start at hour 0");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& [start, value] = segments[i];
        if (start < 0.0 || start >= 24.0) throw ConfigError("sensitivity profile hour outside [0, 24)");
        if (i > 0 && !(start > segments[i - 1].first)) {
            throw ConfigError("sensitivity profile hours must increase");
        }
        if (!(value >= 0.5 && value <= 1.5)) throw ConfigError("sensitivity multiplier outside [0.5, 1.5]");
    }
}

double PatientParams::basal_action() const { return egp0 / basal_glucose - gezi; }

double PatientParams::basal_plasma_insulin() const { return basal_action() / si; }

double PatientParams::u_ref() const {
    return kSamplePeriodMin * basal_plasma_insulin() * vi * body_weight * ke;
}

void PatientParams::validate() const {
    auto positive = [&](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string("patient '") + name + "': field '" + field + "' must be > 0");
        }
    };
    positive(body_weight, "body_weight");
    positive(egp0, "egp0");
    positive(gezi, "gezi");
    positive(si, "si");
    positive(p2, "p2");
    positive(vi, "vi");
    positive(ke, "ke");
    positive(ka, "ka");
    positive(vg, "vg");
    positive(kabs, "kabs");
    positive(bioavailability, "bioavailability");
    positive(basal_glucose, "basal_glucose");
    positive(carb_ratio, "carb_ratio");
    positive(correction_factor, "correction_factor");
    positive(target, "target");
    if (bioavailability > 1.0) throw ConfigError("patient '" + name + "': field 'bioavailability' must be <= 1");
    if (!(basal_action() > 0.0)) {
        throw ConfigError("patient '" + name + "': field 'basal_glucose' must lie below the hepatic ceiling");
    }
    profile.validate();
}

PlantState PlantState::equilibrium(const PatientParams& p, double glucose) {
    PlantState s;
    const double rate = p.u_ref() / kSamplePeriodMin;
    s.G = glucose;
    s.S1 = rate / p.ka;
    s.S2 = s.S1;
    s.I = p.basal_plasma_insulin();
    s.X = p.basal_action();
    return s;
}

bool PlantState::nonnegative() const {
    return G >= 0 && X >= 0 && I >= 0 && S1 >= 0 && S2 >= 0 && D1 >= 0 && D2 >= 0;
}

namespace {

using Vec7 = std::array<double, 7>;

Vec7 pack(const PlantState& s) { return {s.G, s.X, s.I, s.S1, s.S2, s.D1, s.D2}; }
PlantState unpack(const Vec7& v) { return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]}; }

Vec7 derivative(const Vec7& v, double insulin_rate, double meal_rate, double sensitivity,
                const PatientParams& p) {
    const double G = v[0], X = v[1], I = v[2], S1 = v[3], S2 = v[4], D1 = v[5], D2 = v[6];
    const double VI = p.vi * p.body_weight;
    const double VG = p.vg * p.body_weight;
    const double Ra = p.bioavailability * p.kabs * D2 * 1000.0 / VG;
    return {p.egp0 - (p.gezi + X) * G + Ra,
            p.p2 * (sensitivity * p.si * I - X),
            p.ka * S2 / VI - p.ke * I,
            insulin_rate - p.ka * S1,
            p.ka * (S1 - S2),
            meal_rate - p.kabs * D1,
            p.kabs * (D1 - D2)};
}

}  // namespace

PlantState plant_step(const PlantState& state, const PlantInputs& in, const PatientParams& params,
                      double dt_min, int substeps) {
    if (in.basal < 0.0 || in.bolus < 0.0 || in.meal < 0.0) {
        throw DomainError("plant inputs must be >= 0");
    }
    if (substeps < 1 || !(dt_min > 0.0)) throw DomainError("invalid integration step");
    Vec7 v = pack(state);
    v[3] += in.bolus;
    const double insulin_rate = in.basal / dt_min;
    const double meal_rate = in.meal / dt_min;
    const double h = dt_min / substeps;
    for (int s = 0; s < substeps; ++s) {
        const Vec7 k1 = derivative(v, insulin_rate, meal_rate, in.sensitivity, params);
        Vec7 tmp{};
        for (std::size_t i = 0; i < 7; ++i) tmp[i] = v[i] + 0.5 * h * k1[i];
        const Vec7 k2 = derivative(tmp, insulin_rate, meal_rate, in.sensitivity, params);
        for (std::size_t i = 0; i < 7; ++i) tmp[i] = v[i] + 0.5 * h * k2[i];
        const Vec7 k3 = derivative(tmp, insulin_rate, meal_rate, in.sensitivity, params);
        for (std::size_t i = 0; i < 7; ++i) tmp[i] = v[i] + h * k3[i];
        const Vec7 k4 = derivative(tmp, insulin_rate, meal_rate, in.sensitivity, params);
        for (std::size_t i = 0; i < 7; ++i) {
            v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            v[i] = std::max(v[i], 0.0);
        }
    }
    PlantState out = unpack(v);
    if (!std::isfinite(out.G) || out.G > 1000.0) {
        throw SimulationFault("plant blow-up: BG " + std::to_string(out.G) + " mg/dL");
    }
    return out;
}

CgmSensor::CgmSensor(CgmNoise noise, std::uint64_t seed) : noise_(noise), rng_(seed) {}

double CgmSensor::measure(double bg) {
    double reading = bg;
    if (noise_.enabled) {
        state_ = noise_.ar_coefficient * state_ + noise_.innovation_std * rng_.normal();
        const double s = noise_.transform_scale;
        reading += s * std::sinh(state_ / s);
    }
    return std::clamp(reading, noise_.sensor_min, noise_.sensor_max);
}

InsulinPump::InsulinPump(bool noise, std::uint64_t seed, double stddev)
    : noise_(noise), rng_(seed), stddev_(stddev) {}

double InsulinPump::actuate(double command) {
    if (command < 0.0) throw DomainError("pump command must be >= 0");
    if (command == 0.0 || !noise_) return command;
    return std::max(0.0, command + stddev_ * rng_.normal());
}

double announce_meal(double carbs, RandomStream& rng, bool noise, double relative_std) {
    if (carbs < 0.0) throw DomainError("meal carbohydrates must be >= 0");
    if (!noise || carbs == 0.0) return carbs;
    return std::max(0.0, carbs * (1.0 + relative_std * rng.normal()));
}

double bolus_calculate(double est_carbs, double bg, const PatientParams& params) {
    if (est_carbs < 0.0 || bg < 0.0) throw DomainError("bolus calculator inputs must be >= 0");
    const double units = est_carbs / params.carb_ratio +
                         std::max(0.0, bg - params.target) / params.correction_factor;
    return units * kPmolPerUnit;
}

}  // namespace chokimpc
