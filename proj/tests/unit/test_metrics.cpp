#include <doctest.h>

#include "chokimpc/errors.hpp"
#include "chokimpc/metrics.hpp"
#include "support.hpp"

using namespace chokimpc;

TEST_CASE("TIR bands") {
    const TirReport a = tir(std::vector<double>(10, 120.0));
    CHECK(a.in_range == 100.0);
    std::vector<double> half(10, 100.0);
    std::fill(half.begin() + 5, half.end(), 200.0);
    const TirReport b = tir(half);
    CHECK(b.in_range == 50.0);
    CHECK(b.from_180_to_250 == 50.0);
    const TirReport c = tir(std::vector<double>(4, 54.0));
    CHECK(c.below_54 == 0.0);
    CHECK(c.from_54_to_70 == 100.0);
    CHECK(tir(std::vector<double>{70, 180}).in_range == 100.0);
    CHECK(tir(std::vector<double>{250}).from_180_to_250 == 100.0);
    CHECK_THROWS(tir(std::vector<double>{}));

    RandomStream rng(71);
    for (int t = 0; t < 200; ++t) {
        const auto bg = testsupport::random_vector(rng, 1 + rng.index(900), 30, 420);
        CHECK(std::abs(tir(bg).total() - 100.0) <= 1e-9);
    }
}

TEST_CASE("GRI") {
    CHECK(gri(TirReport{1, 2, 84, 10, 3}) == 20.6);
    CHECK(gri(TirReport{0, 0, 100, 0, 0}) == 0.0);
    CHECK(gri(TirReport{0, 0, 70, 20, 10}) == 1.6 * (10 + 0.5 * 20));
    CHECK(gri(TirReport{40, 0, 60, 0, 0}) == 100.0);
    CHECK(gri(TirReport{0, 0, 99, 1, 0}) > 0.0);
}

TEST_CASE("CVGA zones") {
    CHECK(cvga(100, 150).zone == CvgaZone::A);
    CHECK(cvga(60, 350).zone == CvgaZone::E);
    CHECK(cvga(110, 110).zone == CvgaZone::A);
    CHECK(cvga(80, 150).zone == CvgaZone::LowerB);
    CHECK(cvga(100, 200).zone == CvgaZone::UpperB);
    CHECK(cvga(80, 200).zone == CvgaZone::B);
    CHECK(cvga(60, 150).zone == CvgaZone::LowerC);
    CHECK(cvga(100, 350).zone == CvgaZone::UpperC);
    CHECK(cvga(60, 200).zone == CvgaZone::LowerD);
    CHECK(cvga(80, 350).zone == CvgaZone::UpperD);
    const CvgaPoint c = cvga(20, 600);
    CHECK(c.x == 50.0);
    CHECK(c.y == 400.0);

    // decreasing min or increasing max never improves the severity
    RandomStream rng(72);
    for (int t = 0; t < 500; ++t) {
        const double lo = 40 + 80 * rng.uniform();
        const double hi = 100 + 350 * rng.uniform();
        const int base = severity(cvga(lo, hi).zone);
        CHECK(severity(cvga(lo - 15 * rng.uniform(), hi).zone) >= base);
        CHECK(severity(cvga(lo, hi + 80 * rng.uniform()).zone) >= base);
    }
}

TEST_CASE("summary statistics against a brute-force oracle") {
    GlucoseTrace t;
    t.bg = {100, 140};
    t.basal_cmd = {5, 5};
    const Summary s = summary(t);
    CHECK(s.bg.mean == 120.0);
    CHECK(s.bg.std == 20.0);
    CHECK(s.u2.std == 0.0);

    RandomStream rng(73);
    for (int r = 0; r < 50; ++r) {
        const auto v = testsupport::random_vector(rng, 1 + rng.index(500), 40, 400);
        long double m = 0;
        for (double x : v) m += x;
        m /= v.size();
        long double var = 0;
        for (double x : v) var += (x - m) * (x - m);
        var /= v.size();
        const MeanStd ms = mean_std(v);
        CHECK(std::abs(ms.mean - static_cast<double>(m)) <= 1e-12 * 400);
        CHECK(std::abs(ms.std - std::sqrt(static_cast<double>(var))) <= 1e-12 * 400);
    }
    CHECK_THROWS(mean_std(std::vector<double>{}));
}
