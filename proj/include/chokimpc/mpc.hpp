#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "chokimpc/iob.hpp"
#include "chokimpc/prediction_model.hpp"
#include "chokimpc/terminal.hpp"
#include "chokimpc/tightening.hpp"

namespace chokimpc {

struct MpcWeights {
    double Q = 1.0;
    double R = 10.0;
    double p_hypo = 1e7;
    double p_hyper = 1e6;
    double p_min = 1e7;
    double p_max = 1e6;
    double p_u = 1e7;
    double lambda = 10.0;
};

struct SolverOptions {
    double initial_step = 50.0;  // pmol
    double min_step = 0.25;      // pmol
    int max_evaluations = 400;   // per start
};

struct MpcConfig {
    int Np = 12;
    int Nc = 1;
    Interval zone{70.0, 140.0};
    MpcWeights weights;
    double u_ref = 0.0;
    double u2_lim = kBasalLimit;
    double y_bar = 120.0;  // glucose of the linearisation point
    TightenedSets sets;
    Eigen::MatrixXd K;  // 2 x n_x local gain
    Eigen::MatrixXd P;  // n_x x n_x terminal weight
    bool iob_constraints = true;
    InsulinActionCurve curve;
    SolverOptions solver;

    void validate(const NarxOrders& orders) const;
    [[nodiscard]] LocalLaw local_law(const NarxOrders& orders) const;
    /// Reference state: glucose lags at `y_a`, no meals, insulin lags at u_ref.
    [[nodiscard]] Eigen::VectorXd reference_state(const NarxOrders& orders, double y_a) const;
};

struct SlackValues {
    double hypo = 0.0;
    double hyper = 0.0;
    std::vector<double> min;
    std::vector<double> max;
    std::vector<double> u;
    double cost = 0.0;  // V_s + V_delta + V_u
};

/// Per-step bounds seen by the soft constraints.
struct StepBounds {
    std::vector<double> y_lo;
    std::vector<double> y_hi;
    std::vector<double> u2_max;
};

/// Inner-optimal slacks: each is max(0, violation) of its one-sided constraint.
SlackValues eliminate_slacks(std::span<const double> y_traj, double y_a, std::span<const double> u2,
                             const StepBounds& bounds, const Interval& zone, const MpcWeights& w);

/// Output bounds for j = 0 .. Np-1 (sets[j] before Nc, sets[Nc] after) plus the insulin ceiling.
StepBounds step_bounds(const MpcConfig& cfg, std::span<const double> u2_max);

struct CostBreakdown {
    double V_Nc = 0.0;
    double V_Np = 0.0;
    double V_s = 0.0;
    double V_P = 0.0;  // unweighted terminal cost
    double V_delta = 0.0;
    double V_u = 0.0;
    double total = 0.0;
};

struct Evaluation {
    CostBreakdown cost;
    SlackValues slacks;
    Rollout rollout;
    double y_a = 0.0;
};

/// Full cost at a given (u2_seq, y_a) with inner-optimal slacks.
Evaluation mpc_cost(const PredictionModel& model, const PredictionState& x0,
                    std::span<const double> u2_seq, double y_a, const MpcConfig& cfg,
                    std::span<const double> u2_max);

/// Zone setpoint minimising the cost for a fixed input sequence (closed form).
double optimal_setpoint(std::span<const double> y_traj, const PredictionState& terminal,
                        const MpcConfig& cfg);

/// Cost with the setpoint and slacks eliminated.
Evaluation reduced_cost(const PredictionModel& model, const PredictionState& x0,
                        std::span<const double> u2_seq, const MpcConfig& cfg,
                        std::span<const double> u2_max);

struct ControlSolution {
    std::vector<double> u2_seq;
    double y_a = 0.0;
    SlackValues slacks;
    CostBreakdown cost;
    std::vector<double> y_pred;
    std::vector<double> u2_max;
    double warm_start_cost = 0.0;
    int evaluations = 0;
};

/// Multi-start pattern search over u2_seq in [0, u2_lim]^Nc.
ControlSolution solve(const PredictionModel& model, const PredictionState& x0, const MpcConfig& cfg,
                      std::span<const double> u2_max, std::span<const double> warm_start);

/// Causal record available to the controller at sample k = cgm.size() - 1.
struct ControllerHistory {
    std::vector<double> cgm;  // samples 0..k
    std::vector<double> u1;   // announced meals, samples 0..k-1 (entry k allowed)
    std::vector<double> u2;   // commanded basal, samples 0..k-1
    std::vector<BolusRecord> boluses;
};

/// Receding-horizon controller for one patient.
class MpcController {
public:
    MpcController(PredictionModel model, MpcConfig cfg);

    /// Basal command for the newest sample; u_ref until enough history exists.
    double control_step(const ControllerHistory& history);

    [[nodiscard]] const std::optional<ControlSolution>& last_solution() const { return last_; }
    [[nodiscard]] const MpcConfig& config() const { return cfg_; }
    [[nodiscard]] const PredictionModel& model() const { return model_; }
    [[nodiscard]] long monotonicity_violations() const { return violations_; }
    [[nodiscard]] long solves() const { return solves_; }

    /// Upper insulin bounds over the horizon for the given history.
    [[nodiscard]] std::vector<double> insulin_bounds(const ControllerHistory& history) const;

    void reset();

private:
    PredictionModel model_;
    MpcConfig cfg_;
    std::optional<ControlSolution> last_;
    long violations_ = 0;
    long solves_ = 0;
};

/// x(k) from measured glucose and commanded inputs.
PredictionState state_from_history(const ControllerHistory& history, const NarxOrders& orders);

}  // namespace chokimpc
