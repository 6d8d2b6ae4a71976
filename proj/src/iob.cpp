#include "chokimpc/iob.hpp"

#include <cmath>

#include "chokimpc/errors.hpp"
#include "chokimpc/narx_data.hpp"

namespace chokimpc {

int InsulinActionCurve::samples() const {
    return static_cast<int>(std::lround(dia_hours * 60.0 / kSamplePeriodMin));
}

double InsulinActionCurve::weight(long elapsed_samples) const {
    if (elapsed_samples < 0) return 0.0;
    const double dia_min = dia_hours * 60.0;
    const double t = kSamplePeriodMin * static_cast<double>(elapsed_samples);
    return t >= dia_min ? 0.0 : (dia_min - t) / dia_min;
}

double estimate_iob(std::span<const BolusRecord> history, long k, const InsulinActionCurve& curve) {
    if (!(curve.dia_hours > 0.0)) throw DomainError("duration of insulin action must be > 0");
    double iob = 0.0;
    for (const BolusRecord& b : history) {
        if (b.dose < 0.0) throw DomainError("bolus dose must be >= 0");
        if (b.time > k) continue;
        iob += curve.weight(k - b.time) * b.dose;
    }
    return iob;
}

std::vector<double> iob_horizon(std::span<const BolusRecord> history, long k, int horizon,
                                const InsulinActionCurve& curve) {
    if (horizon < 0) throw DomainError("IOB horizon must be >= 0");
    std::vector<BolusRecord> frozen;
    for (const BolusRecord& b : history) {
        if (b.time <= k) frozen.push_back(b);
    }
    std::vector<double> out(static_cast<std::size_t>(horizon));
    for (int j = 0; j < horizon; ++j) out[static_cast<std::size_t>(j)] = estimate_iob(frozen, k + j, curve);
    return out;
}

double basal_upper_bound(double iob, double u_ref, double u2_lim) {
    if (iob < 0.0 || u_ref < 0.0 || u2_lim < 0.0) throw DomainError("IOB bound inputs must be >= 0");
    return u2_lim > iob ? u2_lim - iob : u_ref;
}

}  // namespace chokimpc
