#include "chokimpc/scenario.hpp"

#include <cmath>
#include <string>

#include "chokimpc/errors.hpp"
#include "chokimpc/iob.hpp"

namespace chokimpc {

namespace {

constexpr double kMinutesPerDay = 1440.0;

long sample_of(double minute) { return std::lround(minute / kSamplePeriodMin); }

long bolus_delay_samples() { return sample_of(kBolusDelayMin); }

/// Per-sample meal schedule: true grams ingested and the grams announced at each start.
struct MealPlan {
    std::vector<double> ingested;
    std::vector<double> starts;
};

void place_meal(MealPlan& plan, double start_minute, const MealEvent& meal) {
    const long n = static_cast<long>(plan.ingested.size());
    const long s = sample_of(start_minute);
    const long m = std::max(1L, sample_of(meal.duration_min));
    if (s < 0 || s >= n) return;
    plan.starts[static_cast<std::size_t>(s)] += meal.grams;
    for (long i = s; i < std::min(n, s + m); ++i) {
        plan.ingested[static_cast<std::size_t>(i)] += meal.grams / static_cast<double>(m);
    }
}

}  // namespace

Scenario Scenario::three_meal_days(double days) {
    Scenario s;
    s.days = days;
    s.meals = {{6.0 * 60.0, 40.0, 15.0}, {12.0 * 60.0, 100.0, 15.0}, {19.0 * 60.0, 60.0, 15.0}};
    return s;
}

int Scenario::samples() const {
    return static_cast<int>(std::lround(days * kMinutesPerDay / kSamplePeriodMin));
}

void Scenario::validate() const {
    if (samples() < 1) throw ConfigError("scenario: field 'days' must cover at least one sample");
    for (const MealEvent& m : meals) {
        if (m.minute < 0.0 || m.minute >= kMinutesPerDay) {
            throw ConfigError("scenario: field 'meals.time' must lie within the day");
        }
        if (m.grams < 0.0) throw ConfigError("scenario: field 'meals.grams' must be >= 0");
        if (!(m.duration_min > 0.0)) throw ConfigError("scenario: field 'meals.duration_min' must be > 0");
    }
    if (initial_bg && !(*initial_bg > 0.0)) throw ConfigError("scenario: field 'initial_bg' must be > 0");
}

ClosedLoopResult run_closed_loop(const PatientParams& patient, MpcController* controller,
                                 const Scenario& scenario) {
    patient.validate();
    scenario.validate();
    const int n = scenario.samples();

    MealPlan plan{std::vector<double>(static_cast<std::size_t>(n), 0.0),
                  std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    const int days = static_cast<int>(std::ceil(scenario.days));
    for (int d = 0; d < days; ++d) {
        for (const MealEvent& m : scenario.meals) place_meal(plan, d * kMinutesPerDay + m.minute, m);
    }

    CgmNoise cgm_noise;
    cgm_noise.enabled = scenario.noise.cgm;
    CgmSensor sensor(cgm_noise, derive_seed(scenario.seed, 0));
    InsulinPump pump(scenario.noise.pump, derive_seed(scenario.seed, 1));
    RandomStream meal_rng(derive_seed(scenario.seed, 2));

    PlantState state = PlantState::equilibrium(patient, scenario.initial_bg.value_or(patient.basal_glucose));
    ControllerHistory history;
    history.cgm.reserve(static_cast<std::size_t>(n));
    ClosedLoopResult result;
    GlucoseTrace& tr = result.trace;
    tr.reserve(static_cast<std::size_t>(n));
    std::vector<std::pair<long, double>> pending_boluses;  // (sample, announced carbs)
    const double u_ref = patient.u_ref();
    const InsulinActionCurve curve = controller ? controller->config().curve : InsulinActionCurve{};

    for (long k = 0; k < n; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const double cgm = sensor.measure(state.G);
        history.cgm.push_back(cgm);

        double meal_est = 0.0;
        if (plan.starts[ku] > 0.0) {
            meal_est = announce_meal(plan.starts[ku], meal_rng, scenario.noise.meal);
            pending_boluses.emplace_back(k + bolus_delay_samples(), meal_est);
        }
        history.u1.push_back(meal_est);

        double bolus = 0.0;
        for (const auto& [due, carbs] : pending_boluses) {
            if (due == k) bolus += bolus_calculate(carbs, cgm, patient);
        }
        if (bolus > 0.0) history.boluses.push_back({k, bolus});

        double command = u_ref;
        if (controller) {
            try {
                command = controller->control_step(history);
            } catch (const Error& e) {
                result.fault = "controller failure at sample " + std::to_string(k) + ": " + e.what();
                break;
            }
        }
        history.u2.push_back(command);
        const double delivered = pump.actuate(command);
        const double bolus_delivered = pump.actuate(bolus);
        const double minute_of_day = std::fmod(static_cast<double>(k) * kSamplePeriodMin, kMinutesPerDay);
        const double mult = scenario.sensitivity_variation ? patient.profile.at(minute_of_day) : 1.0;

        tr.t_min.push_back(static_cast<double>(k) * kSamplePeriodMin);
        tr.bg.push_back(state.G);
        tr.cgm.push_back(cgm);
        tr.basal_cmd.push_back(command);
        tr.basal_act.push_back(delivered);
        tr.bolus.push_back(bolus);
        tr.meal_true.push_back(plan.ingested[ku]);
        tr.meal_est.push_back(meal_est);
        tr.iob.push_back(estimate_iob(history.boluses, k, curve));

        try {
            state = plant_step(state, {delivered, bolus_delivered, plan.ingested[ku], mult}, patient);
        } catch (const SimulationFault& e) {
            result.fault = "plant fault at sample " + std::to_string(k) + ": " + e.what();
            break;
        }
    }
    if (controller) {
        result.solves = controller->solves();
        result.monotonicity_violations = controller->monotonicity_violations();
    }
    return result;
}

void Excitation::validate() const {
    if (basal_levels.empty() || repeats < 1) throw ConfigError("excitation: field 'basal_levels' is empty");
    for (double b : basal_levels) {
        if (b < 0.0 || b > kBasalLimit) throw ConfigError("excitation: field 'basal_levels' outside [0, 500] pmol");
    }
    if (initial_bg.empty()) throw ConfigError("excitation: field 'initial_bg' is empty");
    for (double g : initial_bg) {
        if (!(g > 0.0)) throw ConfigError("excitation: field 'initial_bg' must be > 0");
    }
    if (meal_sets.empty()) throw ConfigError("excitation: field 'meal_sets' is empty");
    if (!(segment_hours > 0.0)) throw ConfigError("excitation: field 'segment_hours' must be > 0");
}

Excitation Excitation::standard() {
    Excitation e;
    e.basal_levels = {0.0, 60.0, 120.0, 180.0, 250.0, 350.0, 500.0, 90.0, 150.0, 220.0, 30.0, 300.0};
    e.initial_bg = {80.0, 120.0, 160.0, 200.0, 250.0, 140.0, 100.0};
    e.meal_sets = {{{120.0, 60.0, 15.0}, {480.0, 40.0, 15.0}},
                   {{240.0, 100.0, 15.0}},
                   {{60.0, 30.0, 15.0}, {360.0, 80.0, 15.0}},
                   {}};
    e.segment_hours = 12.0;
    e.repeats = 1;
    return e;
}

SignalLog generate_training_data(const PatientParams& patient, const Excitation& ex, std::uint64_t seed) {
    patient.validate();
    ex.validate();
    const long per_segment = sample_of(ex.segment_hours * 60.0);
    SignalLog log;
    for (int s = 0; s < ex.segments(); ++s) {
        const auto su = static_cast<std::size_t>(s);
        const double basal = ex.basal_levels[su % ex.basal_levels.size()];
        const double g0 = ex.initial_bg[su % ex.initial_bg.size()];
        const auto& meals = ex.meal_sets[su % ex.meal_sets.size()];

        MealPlan plan{std::vector<double>(static_cast<std::size_t>(per_segment), 0.0),
                      std::vector<double>(static_cast<std::size_t>(per_segment), 0.0)};
        for (const MealEvent& m : meals) place_meal(plan, m.minute, m);

        CgmNoise cgm_noise;
        cgm_noise.enabled = ex.noise.cgm;
        const std::uint64_t seg_seed = derive_seed(seed, static_cast<std::uint64_t>(s));
        CgmSensor sensor(cgm_noise, derive_seed(seg_seed, 0));
        InsulinPump pump(ex.noise.pump, derive_seed(seg_seed, 1));
        RandomStream meal_rng(derive_seed(seg_seed, 2));

        PlantState state = PlantState::equilibrium(patient, g0);
        SignalLog seg;
        std::vector<std::pair<long, double>> pending;
        for (long k = 0; k < per_segment; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const double cgm = sensor.measure(state.G);
            double est = 0.0;
            if (plan.starts[ku] > 0.0) {
                est = announce_meal(plan.starts[ku], meal_rng, ex.noise.meal);
                pending.emplace_back(k + bolus_delay_samples(), est);
            }
            double bolus = 0.0;
            for (const auto& [due, carbs] : pending) {
                if (due == k) bolus += bolus_calculate(carbs, cgm, patient);
            }
            seg.t_min.push_back(static_cast<double>(k) * kSamplePeriodMin);
            seg.y.push_back(cgm);
            seg.u1.push_back(est);
            seg.u2.push_back(basal);
            state = plant_step(state, {pump.actuate(basal), pump.actuate(bolus), plan.ingested[ku], 1.0},
                               patient);
        }
        log.append_segment(seg);
    }
    return log;
}

}  // namespace chokimpc
