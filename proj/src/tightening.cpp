#include "chokimpc/tightening.hpp"

#include <algorithm>
#include <string>

#include "chokimpc/errors.hpp"

namespace chokimpc {

const Interval& TightenedSets::at(int j) const {
    if (sets.empty()) throw DomainError("tightened sets are empty");
    const int last = static_cast<int>(sets.size()) - 1;
    return sets[static_cast<std::size_t>(std::clamp(j, 0, last))];
}

std::vector<double> reachability_radii(const HolderParams& params, int N) {
    params.validate();
    if (N < 1) throw DomainError("reachability horizon must be >= 1");
    const NarxOrders& o = params.orders;
    const auto nw = static_cast<std::size_t>(o.regressor_len());

    std::vector<double> c;
    c.reserve(static_cast<std::size_t>(N));
    c.push_back(params.mu);
    std::vector<double> d(nw, 0.0);
    for (int j = 2; j <= N; ++j) {
        // d_{j-1} = (c_{j-1}, ..., c_{sigma(j-1)}, 0, ..., 0), sigma(i) = max(1, i - na)
        std::fill(d.begin(), d.end(), 0.0);
        const int i = j - 1;
        const int sigma = std::max(1, i - o.na);
        std::size_t slot = 0;
        for (int m = i; m >= sigma; --m) d[slot++] = c[static_cast<std::size_t>(m - 1)];
        c.push_back(holder_distance(d, params));
    }
    return c;
}

TightenedSets tightened_sets(const Interval& base, const std::vector<double>& radii) {
    if (base.empty()) throw DomainError("base output set is empty");
    TightenedSets ts;
    ts.base = base;
    ts.radii = radii;
    ts.sets.reserve(radii.size() + 1);
    ts.sets.push_back(base);
    for (double c : radii) {
        if (c < 0.0) throw DomainError("reachability radius must be >= 0");
        const Interval& prev = ts.sets.back();
        ts.sets.push_back({prev.lo + c, prev.hi - c});
    }
    return ts;
}

int select_control_horizon(const TightenedSets& sets, double min_width) {
    if (min_width < 0.0) throw DomainError("minimum width must be >= 0");
    int best = 0;
    for (int j = 1; j <= sets.horizon(); ++j) {
        const Interval& s = sets.sets[static_cast<std::size_t>(j)];
        if (!s.empty() && s.width() >= min_width) best = j;
    }
    if (best == 0) {
        throw ConfigError("first tightened set is narrower than the minimum width " +
                          std::to_string(min_width) + " mg/dL");
    }
    return best;
}

}  // namespace chokimpc
