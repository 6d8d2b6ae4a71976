#pragma once

#include <array>
#include <cstddef>

#include "chokimpc/holder.hpp"
#include "chokimpc/narx_data.hpp"

namespace chokimpc {

/// Box on the block constants (La, Lb, Lc).
struct FitBounds {
    std::array<double, 3> lower{0.0, 0.9, 0.09};
    std::array<double, 3> upper{10.0, 10.0, 10.0};

    void validate() const;
    [[nodiscard]] std::array<double, 3> project(const std::array<double, 3>& x) const;
};

struct FitOptions {
    int max_sweeps = 12;
    int grid_points = 17;
    int golden_iterations = 24;
};

struct FitResult {
    HolderParams params;        // mu is left at 0; see validation_radius
    double mse = 0.0;           // validation MSE at the returned point
    double init_mse = 0.0;      // validation MSE at the projected (and lifted) initializer
    std::array<double, 3> init_point{};
    bool consistent = true;     // false when the consistency constraints had to be relaxed
    double relaxation = 0.0;    // smallest attainable max violation (0 when consistent)
    std::size_t binding_pairs = 0;
    std::size_t evaluations = 0;
};

/// Validation MSE of the CHoKI predictor built on `train`, scored on `test`.
double validation_mse(const HolderParams& params, const RegressorDataset& train,
                      const RegressorDataset& test);

/// Minimises validation MSE over the block constants, with the exponents
/// fixed to 1, subject to |y_i - y_j| <= d(|w_i - w_j|) on every training pair.
///
/// When no point of the box is consistent, the largest violation is
/// minimised first (it is smallest at the upper corner) and the MSE is
/// then minimised among points within that violation; `consistent` is
/// cleared in that case.
FitResult fit_hyperparams(const RegressorDataset& train, const RegressorDataset& test,
                          const FitBounds& bounds, const HolderParams& init,
                          const FitOptions& options = {});

}  // namespace chokimpc
