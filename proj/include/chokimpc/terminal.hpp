#pragma once

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "chokimpc/narx_data.hpp"
#include "chokimpc/prediction_model.hpp"

namespace chokimpc {

/// Linearisation x+ = A x + B u of the state-space predictor around (x_bar, u_bar).
/// Inputs are ordered (meal, insulin).
struct LinearModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::VectorXd x_bar;
    Eigen::Vector2d u_bar{0.0, 0.0};
    double epsilon = 1.0;
};

/// Scalar one-step map f(w) over a regressor laid out as in RegressorDataset.
using NextOutputFn = std::function<double(std::span<const double>)>;

/// Central differences of f for the first row; the remaining rows are the
/// exact shift-register structure.
LinearModel linearize(const NextOutputFn& f, const NarxOrders& orders, const PredictionState& x_bar,
                      const Eigen::Vector2d& u_bar, double epsilon);
LinearModel linearize(const PredictionModel& model, const PredictionState& x_bar,
                      const Eigen::Vector2d& u_bar, double epsilon);

struct TerminalPair {
    Eigen::MatrixXd K;  // n_u x n_x
    Eigen::MatrixXd P;  // n_x x n_x
    double residual = 0.0;
    int iterations = 0;
};

struct DlqrOptions {
    int max_iterations = 1'000'000;
    double tolerance = 1e-8;
};

/// Solves the discrete algebraic Riccati equation by fixed-point iteration.
/// Throws NumericError when the residual does not reach the tolerance.
TerminalPair solve_dlqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, const DlqrOptions& options = {});

/// Frobenius norm of P - (A'PA - A'PB (R + B'PB)^-1 B'PA + Q).
double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

double spectral_radius(const Eigen::MatrixXd& M);

struct LqrWeights {
    Eigen::MatrixXd Q;
    Eigen::MatrixXd R;
};

/// Output weight on the glucose head plus a small ridge; heavy meal-channel weight.
LqrWeights default_lqr_weights(const NarxOrders& orders, double output_weight, double input_weight,
                               double meal_weight = 1e6, double ridge = 1e-6);

}  // namespace chokimpc
