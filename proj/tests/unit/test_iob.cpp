#include <doctest.h>

#include "chokimpc/iob.hpp"
#include "support.hpp"

using namespace chokimpc;

TEST_CASE("single bolus and boundaries") {
    const std::vector<BolusRecord> h{{0, 1200.0}};
    CHECK(estimate_iob(h, 18) == 900.0);
    CHECK(estimate_iob({}, 10) == 0.0);
    CHECK(estimate_iob(h, 72) == 0.0);
    CHECK(estimate_iob(h, 0) == 1200.0);
    CHECK(estimate_iob(std::vector<BolusRecord>{{5, 100.0}}, 4) == 0.0);
    CHECK(InsulinActionCurve{}.samples() == 72);
}

TEST_CASE("horizon decays linearly and superposes") {
    const std::vector<BolusRecord> one{{0, 720.0}};
    const auto seq = iob_horizon(one, 0, 80);
    for (std::size_t j = 0; j < seq.size(); ++j) CHECK(seq[j] == doctest::Approx(std::max(0.0, 720.0 * (72.0 - j) / 72.0)));
    CHECK(iob_horizon({}, 5, 12) == std::vector<double>(12, 0.0));

    const std::vector<BolusRecord> two{{0, 500.0}, {12, 500.0}};
    const auto both = iob_horizon(two, 12, 40);
    const auto a = iob_horizon(std::vector<BolusRecord>{{0, 500.0}}, 12, 40);
    const auto b = iob_horizon(std::vector<BolusRecord>{{12, 500.0}}, 12, 40);
    for (std::size_t j = 0; j < both.size(); ++j) CHECK(std::abs(both[j] - a[j] - b[j]) <= 1e-12 * std::max(1.0, both[j]));
}

TEST_CASE("random histories: nonincreasing horizon, superposition, bolus jump") {
    RandomStream rng(51);
    for (int t = 0; t < 100; ++t) {
        std::vector<BolusRecord> h1, h2;
        for (int i = 0; i < 6; ++i) {
            (i % 2 ? h1 : h2).push_back({static_cast<long>(rng.index(200)), 5000.0 * rng.uniform()});
        }
        std::vector<BolusRecord> all = h1;
        all.insert(all.end(), h2.begin(), h2.end());
        const long k = 100 + static_cast<long>(rng.index(100));
        const auto seq = iob_horizon(all, k, 12);
        for (std::size_t j = 1; j < seq.size(); ++j) CHECK(seq[j] <= seq[j - 1]);
        for (double v : seq) CHECK(v >= 0.0);
        CHECK(std::abs(estimate_iob(all, k) - estimate_iob(h1, k) - estimate_iob(h2, k)) <= 1e-12 * std::max(1.0, estimate_iob(all, k)));
        std::vector<BolusRecord> plus = all;
        plus.push_back({k, 333.0});
        CHECK(std::abs(estimate_iob(plus, k) - estimate_iob(all, k) - 333.0) <= 1e-9);
        const double bound = basal_upper_bound(seq[0], 120.0);
        CHECK(bound > 0.0);
        CHECK(bound <= 500.0);
    }
}

TEST_CASE("insulin upper bound") {
    CHECK(basal_upper_bound(300, 120) == 200.0);
    CHECK(basal_upper_bound(600, 122.38) == 122.38);
    CHECK(basal_upper_bound(500, 122.38) == 122.38);
    CHECK(basal_upper_bound(0, 120) == 500.0);
}
