#pragma once

#include <span>
#include <vector>

namespace chokimpc {

/// Linear insulin action curve a(t) = (DIA - t) / DIA on the sample grid.
struct InsulinActionCurve {
    double dia_hours = 6.0;

    [[nodiscard]] int samples() const;                  // n_IOB (72 for 6 h)
    [[nodiscard]] double weight(long elapsed_samples) const;  // 0 at and beyond DIA
};

struct BolusRecord {
    long time = 0;      // sample index
    double dose = 0.0;  // pmol
};

/// Insulin on board at sample k; boluses after k are ignored.
double estimate_iob(std::span<const BolusRecord> history, long k, const InsulinActionCurve& curve = {});

/// IOB(k, j) for j = 0 .. horizon-1 with the history frozen at k.
std::vector<double> iob_horizon(std::span<const BolusRecord> history, long k, int horizon,
                                const InsulinActionCurve& curve = {});

/// u2_lim - IOB when the limit exceeds IOB, otherwise u_ref.
double basal_upper_bound(double iob, double u_ref, double u2_lim = 500.0);

}  // namespace chokimpc
