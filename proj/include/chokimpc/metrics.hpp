#pragma once

#include <span>
#include <string>
#include <vector>

namespace chokimpc {

/// Closed-loop log on the 5-min grid.
struct GlucoseTrace {
    std::vector<double> t_min;
    std::vector<double> bg;
    std::vector<double> cgm;
    std::vector<double> basal_cmd;
    std::vector<double> basal_act;
    std::vector<double> bolus;
    std::vector<double> meal_true;
    std::vector<double> meal_est;
    std::vector<double> iob;

    [[nodiscard]] std::size_t size() const { return bg.size(); }
    [[nodiscard]] bool empty() const { return bg.empty(); }
    void validate() const;
    void reserve(std::size_t n);
};

/// Percentage of samples per band: <54, [54,70), [70,180], (180,250], >250.
struct TirReport {
    double below_54 = 0.0;
    double from_54_to_70 = 0.0;
    double in_range = 0.0;
    double from_180_to_250 = 0.0;
    double above_250 = 0.0;

    [[nodiscard]] double below_70() const { return below_54 + from_54_to_70; }
    [[nodiscard]] double total() const {
        return below_54 + from_54_to_70 + in_range + from_180_to_250 + above_250;
    }
};

TirReport tir(std::span<const double> bg);
TirReport tir(const GlucoseTrace& trace);

/// 3.0 (p1 + 0.8 p2) + 1.6 (p4 + 0.5 p3), capped at 100.
double gri(const TirReport& report);

enum class CvgaZone { A, LowerB, UpperB, B, LowerC, UpperC, LowerD, UpperD, E };

std::string to_string(CvgaZone zone);
/// 0 for A, 1 for the B family, 2 for C, 3 for D, 4 for E.
int severity(CvgaZone zone);

struct CvgaPoint {
    double x = 0.0;  // clamped minimum BG
    double y = 0.0;  // clamped maximum BG
    CvgaZone zone = CvgaZone::A;
};

CvgaPoint cvga(double min_bg, double max_bg);
CvgaPoint cvga(const GlucoseTrace& trace);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population (denominator N)
};

MeanStd mean_std(std::span<const double> values);

struct Summary {
    MeanStd bg;
    MeanStd u2;
};

/// BG and commanded-basal statistics.
Summary summary(const GlucoseTrace& trace);

struct MetricsReport {
    TirReport tir;
    double gri = 0.0;
    CvgaPoint cvga;
    Summary summary;
    double min_bg = 0.0;
};

MetricsReport compute_metrics(const GlucoseTrace& trace);

}  // namespace chokimpc
