#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "chokimpc/holder.hpp"
#include "chokimpc/narx_data.hpp"

namespace chokimpc {

/// Physical limits of the insulin pump, pmol per sample.
inline constexpr double kBasalLimit = 500.0;

/// NARX state x(k): glucose lags, then meal lags, then insulin lags.
struct PredictionState {
    NarxOrders orders;
    std::vector<double> x;

    PredictionState() = default;
    PredictionState(NarxOrders o, std::vector<double> values);

    /// State at equilibrium: constant glucose, no meals, constant insulin.
    static PredictionState equilibrium(const NarxOrders& orders, double glucose, double insulin);

    [[nodiscard]] double glucose() const { return x.front(); }
    [[nodiscard]] std::span<const double> glucose_lags() const;
    [[nodiscard]] std::span<const double> meal_lags() const;
    [[nodiscard]] std::span<const double> insulin_lags() const;
    [[nodiscard]] Eigen::VectorXd as_vector() const;
};

/// Regressor w = (x, u1, u2) laid out in contiguous blocks.
std::vector<double> assemble_regressor(const PredictionState& x, double u1, double u2);
void assemble_regressor(const PredictionState& x, double u1, double u2, std::span<double> out);

/// Shifts the registers: new glucose head, then lags; inputs pushed into their registers.
PredictionState shift_state(const PredictionState& x, double y_next, double u1, double u2);

/// Local law u = K (x_bar - x) + u_bar used beyond the control horizon.
/// K has one row per input (meal, insulin).
struct LocalLaw {
    Eigen::MatrixXd K;
    Eigen::VectorXd x_bar;
    Eigen::Vector2d u_bar{0.0, 0.0};

    /// Insulin component of the law, clamped to [0, limit].
    [[nodiscard]] double insulin(const PredictionState& x, double limit = kBasalLimit) const;
};

/// State-space wrapper over the CHoKI predictor.
class PredictionModel {
public:
    PredictionModel(std::shared_ptr<const RegressorDataset> data, HolderParams params);
    explicit PredictionModel(ChokiPredictor predictor);

    [[nodiscard]] const NarxOrders& orders() const { return predictor_.params().orders; }
    [[nodiscard]] const ChokiPredictor& predictor() const { return predictor_; }

    [[nodiscard]] double predict_next(const PredictionState& x, double u1, double u2) const;
    [[nodiscard]] PredictionState step(const PredictionState& x, double u1, double u2) const;

private:
    ChokiPredictor predictor_;
};

struct Rollout {
    std::vector<double> y;    // y(0|k) .. y(Np-1|k)
    std::vector<double> u2;   // inputs applied at j = 0 .. Np-1
    PredictionState terminal; // x(Np|k)
};

/// Open-loop prediction over `horizon` steps with zero meals.
///
/// `u2_seq` drives the first u2_seq.size() steps; the remaining steps use
/// `law` (required when horizon > u2_seq.size()). When `law_limits` is
/// non-empty the law at step j saturates at law_limits[j] instead of 500.
Rollout rollout(const PredictionModel& model, const PredictionState& x0,
                std::span<const double> u2_seq, int horizon, const LocalLaw* law,
                std::span<const double> law_limits = {});

}  // namespace chokimpc
