#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "chokimpc/narx_data.hpp"

namespace chokimpc {

/// Componentwise Hölder constants and exponents for a single-output model.
///
/// The block constants (La, Lb, Lc) are the fitted quantities; `L` holds
/// them expanded to one entry per regressor component following the
/// block map. `P` is expanded the same way.
struct HolderParams {
    NarxOrders orders;
    std::array<double, 3> block_L{0.0, 0.0, 0.0};
    std::vector<double> L;
    std::vector<double> P;
    double mu = 0.0;

    /// Expands block constants over the regressor; `exponent` is shared by every component.
    static HolderParams from_blocks(const NarxOrders& orders, double La, double Lb, double Lc,
                                    double exponent = 1.0, double mu = 0.0);

    /// Re-expands `L` after `block_L` changed.
    void set_blocks(const std::array<double, 3>& blocks);

    [[nodiscard]] bool unit_exponents() const;
    [[nodiscard]] int width() const { return static_cast<int>(L.size()); }

    /// Throws DomainError when an invariant is broken.
    void validate() const;
};

/// Sum_j L_j * d_j^P_j. Throws DomainError on a negative component.
double holder_distance(std::span<const double> d_abs, std::span<const double> L,
                       std::span<const double> P);
double holder_distance(std::span<const double> d_abs, const HolderParams& params);

/// CHoKI predictor over an immutable dataset.
///
/// Prediction is the midpoint between the lowest ceiling and the highest
/// floor of the Hölder cones centred on the samples. Thread-safe for
/// concurrent queries.
class ChokiPredictor {
public:
    ChokiPredictor(std::shared_ptr<const RegressorDataset> data, HolderParams params);

    [[nodiscard]] double operator()(std::span<const double> q) const;

    /// Ceiling (min over cones) and floor (max over cones) at `q`.
    struct Envelope {
        double ceiling;
        double floor;
    };
    [[nodiscard]] Envelope envelope(std::span<const double> q) const;

    [[nodiscard]] const HolderParams& params() const { return params_; }
    [[nodiscard]] const RegressorDataset& data() const { return *data_; }
    [[nodiscard]] std::shared_ptr<const RegressorDataset> data_ptr() const { return data_; }

private:
    std::shared_ptr<const RegressorDataset> data_;
    HolderParams params_;
    bool unit_exponents_ = true;
};

/// One-shot convenience wrapper over ChokiPredictor.
double predict(std::span<const double> q, const HolderParams& params, const RegressorDataset& ds);

struct LackiEstimate {
    double L = 0.0;
    std::size_t skipped_pairs = 0;  // coincident inputs with differing outputs
};

/// Largest pairwise slope |dy| / ||dw||_inf. Throws DomainError when every input coincides.
LackiEstimate lacki_estimate(const RegressorDataset& ds);

/// Lower empirical quantile of |predict(w_i) - y_i| over `val`.
double validation_radius(const HolderParams& params, const RegressorDataset& train,
                         const RegressorDataset& val, double quantile);

/// Lower empirical quantile (floor-index convention) of arbitrary values.
double lower_quantile(std::vector<double> values, double quantile);

}  // namespace chokimpc
