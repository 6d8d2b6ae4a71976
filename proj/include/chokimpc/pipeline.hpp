#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "chokimpc/fit.hpp"
#include "chokimpc/holder.hpp"
#include "chokimpc/io.hpp"
#include "chokimpc/mpc.hpp"
#include "chokimpc/narx_data.hpp"
#include "chokimpc/terminal.hpp"

namespace chokimpc {

struct FitConfig {
    NarxOrders orders{5, 9, 3};
    double train_fraction = 0.8;
    double quantile = 0.9;
    std::uint64_t seed = 1;
    FitBounds bounds;
    FitOptions options;
};

struct FitOutcome {
    HolderParams params;  // fitted constants with mu set
    FitResult fit;
    LackiEstimate lacki;
    std::shared_ptr<const RegressorDataset> train;
    std::shared_ptr<const RegressorDataset> test;
};

/// Regressors, split, LACKI initial guess, constrained fit, then mu from the test residuals.
FitOutcome fit_pipeline(const SignalLog& log, const FitConfig& config);

struct ControllerDesign {
    Interval base{55.0, 300.0};
    int Np = 12;
    double min_width = 150.0;
    double y_bar = 120.0;
    /// Finite-difference steps tried in order; the first giving a converged, stabilising pair wins.
    std::vector<double> epsilons{1.0, 5.0, 10.0, 20.0};
    double lqr_output_weight = 1.0;
    double lqr_input_weight = 10.0;
    bool iob_constraints = true;
    MpcWeights weights;
    SolverOptions solver;
};

struct ControllerDesignReport {
    MpcConfig config;
    LinearModel linear;
    TerminalPair terminal;
    double spectral_radius = 0.0;
};

/// Tightened sets, control horizon, linearisation at (y_bar, u_ref) and the LQR terminal pair.
ControllerDesignReport design_controller(const PredictionModel& model, double u_ref,
                                         const ControllerDesign& design);

}  // namespace chokimpc
