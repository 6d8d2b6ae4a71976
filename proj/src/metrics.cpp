#include "chokimpc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "chokimpc/errors.hpp"
#include "chokimpc/narx_data.hpp"

namespace chokimpc {

void GlucoseTrace::validate() const {
    const std::size_t n = bg.size();
    for (const auto* col : {&t_min, &cgm, &basal_cmd, &basal_act, &bolus, &meal_true, &meal_est, &iob}) {
        if (col->size() != n) throw FormatError("trace columns have different lengths");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(t_min[i] - t_min[i - 1] - kSamplePeriodMin) > 1e-6) {
            throw FormatError("trace timestamps are not on a 5-min grid");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (basal_cmd[i] < 0 || basal_act[i] < 0 || bolus[i] < 0 || meal_true[i] < 0 || meal_est[i] < 0) {
            throw FormatError("trace holds a negative dose at sample " + std::to_string(i));
        }
    }
}

void GlucoseTrace::reserve(std::size_t n) {
    for (auto* col : {&t_min, &bg, &cgm, &basal_cmd, &basal_act, &bolus, &meal_true, &meal_est, &iob}) {
        col->reserve(n);
    }
}

TirReport tir(std::span<const double> bg) {
    if (bg.empty()) throw LengthError("time in range of an empty trace");
    std::size_t counts[5] = {0, 0, 0, 0, 0};
    for (double g : bg) {
        if (g < 54.0) {
            ++counts[0];
        } else if (g < 70.0) {
            ++counts[1];
        } else if (g <= 180.0) {
            ++counts[2];
        } else if (g <= 250.0) {
            ++counts[3];
        } else {
            ++counts[4];
        }
    }
    const double n = static_cast<double>(bg.size());
    return {100.0 * static_cast<double>(counts[0]) / n, 100.0 * static_cast<double>(counts[1]) / n,
            100.0 * static_cast<double>(counts[2]) / n, 100.0 * static_cast<double>(counts[3]) / n,
            100.0 * static_cast<double>(counts[4]) / n};
}

TirReport tir(const GlucoseTrace& trace) { return tir(trace.bg); }

double gri(const TirReport& r) {
    const double hypo = 3.0 * (r.below_54 + 0.8 * r.from_54_to_70);
    const double hyper = 1.6 * (r.above_250 + 0.5 * r.from_180_to_250);
    return std::min(100.0, hypo + hyper);
}

std::string to_string(CvgaZone zone) {
    switch (zone) {
        case CvgaZone::A: return "A";
        case CvgaZone::LowerB: return "Lower B";
        case CvgaZone::UpperB: return "Upper B";
        case CvgaZone::B: return "B";
        case CvgaZone::LowerC: return "Lower C";
        case CvgaZone::UpperC: return "Upper C";
        case CvgaZone::LowerD: return "Lower D";
        case CvgaZone::UpperD: return "Upper D";
        case CvgaZone::E: return "E";
    }
    return "?";
}

int severity(CvgaZone zone) {
    switch (zone) {
        case CvgaZone::A: return 0;
        case CvgaZone::LowerB:
        case CvgaZone::UpperB:
        case CvgaZone::B: return 1;
        case CvgaZone::LowerC:
        case CvgaZone::UpperC: return 2;
        case CvgaZone::LowerD:
        case CvgaZone::UpperD: return 3;
        case CvgaZone::E: return 4;
    }
    return 4;
}

CvgaPoint cvga(double min_bg, double max_bg) {
    CvgaPoint p;
    p.x = std::clamp(min_bg, 50.0, 110.0);
    p.y = std::clamp(max_bg, 110.0, 400.0);
    const int col = p.x >= 90.0 ? 0 : (p.x >= 70.0 ? 1 : 2);
    const int row = p.y <= 180.0 ? 0 : (p.y <= 300.0 ? 1 : 2);
    static constexpr CvgaZone grid[3][3] = {
        {CvgaZone::A, CvgaZone::LowerB, CvgaZone::LowerC},
        {CvgaZone::UpperB, CvgaZone::B, CvgaZone::LowerD},
        {CvgaZone::UpperC, CvgaZone::UpperD, CvgaZone::E},
    };
    p.zone = grid[row][col];
    return p;
}

CvgaPoint cvga(const GlucoseTrace& trace) {
    if (trace.empty()) throw LengthError("CVGA of an empty trace");
    const auto [lo, hi] = std::minmax_element(trace.bg.begin(), trace.bg.end());
    return cvga(*lo, *hi);
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) throw LengthError("statistics of an empty series");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n)};
}

Summary summary(const GlucoseTrace& trace) {
    if (trace.empty()) throw LengthError("summary of an empty trace");
    return {mean_std(trace.bg), mean_std(trace.basal_cmd)};
}

MetricsReport compute_metrics(const GlucoseTrace& trace) {
    MetricsReport r;
    r.tir = tir(trace);
    r.gri = gri(r.tir);
    r.cvga = cvga(trace);
    r.summary = summary(trace);
    r.min_bg = *std::min_element(trace.bg.begin(), trace.bg.end());
    return r;
}

}  // namespace chokimpc
