#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chokimpc/metrics.hpp"
#include "chokimpc/mpc.hpp"
#include "chokimpc/narx_data.hpp"
#include "chokimpc/patient.hpp"

namespace chokimpc {

struct MealEvent {
    double minute = 0.0;  // minute of day (scenario) or offset into the segment (excitation)
    double grams = 0.0;
    double duration_min = 15.0;
};

struct NoiseToggles {
    bool cgm = true;
    bool pump = true;
    bool meal = true;
};

/// Delay between meal start and the meal bolus.
inline constexpr double kBolusDelayMin = 20.0;

struct Scenario {
    double days = 3.0;
    std::vector<MealEvent> meals;
    std::optional<double> initial_bg;  // defaults to the patient's basal glucose
    NoiseToggles noise;
    std::uint64_t seed = 1;
    bool sensitivity_variation = false;

    /// 40 g at 06:00, 100 g at 12:00, 60 g at 19:00, 15 min each, for three days.
    static Scenario three_meal_days(double days = 3.0);
    [[nodiscard]] int samples() const;
    void validate() const;
};

struct ClosedLoopResult {
    GlucoseTrace trace;
    std::optional<std::string> fault;
    long solves = 0;
    long monotonicity_violations = 0;
};

/// Couples plant, sensor, pump, bolus calculator and controller at 5-min steps.
/// With a null controller the loop holds the patient's u_ref.
ClosedLoopResult run_closed_loop(const PatientParams& patient, MpcController* controller,
                                 const Scenario& scenario);

/// Open-loop excitation campaign. Segment i holds basal_levels[i % n] for
/// segment_hours, starts at initial_bg[i % m] and ingests meal_sets[i % p].
struct Excitation {
    std::vector<double> basal_levels;
    std::vector<double> initial_bg{120.0};
    std::vector<std::vector<MealEvent>> meal_sets{{}};
    double segment_hours = 12.0;
    int repeats = 1;
    NoiseToggles noise;

    [[nodiscard]] int segments() const { return static_cast<int>(basal_levels.size()) * repeats; }
    void validate() const;
    static Excitation standard();
};

SignalLog generate_training_data(const PatientParams& patient, const Excitation& excitation,
                                 std::uint64_t seed);

}  // namespace chokimpc
