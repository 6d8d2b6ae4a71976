#pragma once

#include <vector>

#include "chokimpc/holder.hpp"
#include "chokimpc/narx_data.hpp"

namespace chokimpc {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool empty() const { return lo > hi; }
    [[nodiscard]] double width() const { return empty() ? 0.0 : hi - lo; }
    [[nodiscard]] bool contains(const Interval& other) const {
        return other.empty() || (!empty() && lo <= other.lo && other.hi <= hi);
    }
};

/// Output constraint sets shrunk along the horizon.
///
/// `sets[0]` is the base set; `sets[j]` for j >= 1 uses `radii[j-1]` = c_j.
struct TightenedSets {
    Interval base{55.0, 300.0};
    std::vector<double> radii;
    std::vector<Interval> sets;

    [[nodiscard]] int horizon() const { return static_cast<int>(radii.size()); }
    /// Set for prediction step j; steps past the last set reuse it.
    [[nodiscard]] const Interval& at(int j) const;
};

/// Radii c_1..c_N: c_1 = mu, c_j = d(d_{j-1}) with d_{j-1} stacking
/// c_{j-1}, ..., c_{max(1, j-1-na)} into the glucose block.
std::vector<double> reachability_radii(const HolderParams& params, int N);

TightenedSets tightened_sets(const Interval& base, const std::vector<double>& radii);

/// Largest j whose set is at least `min_width` wide. Throws ConfigError if even j = 1 fails.
int select_control_horizon(const TightenedSets& sets, double min_width);

}  // namespace chokimpc
