#include <doctest.h>

#include <set>

#include "chokimpc/errors.hpp"
#include "chokimpc/narx_data.hpp"
#include "support.hpp"

using namespace chokimpc;

namespace {

SignalLog ramp_log(std::size_t n, std::vector<int> segment = {}) {
    SignalLog log;
    for (std::size_t k = 0; k < n; ++k) {
        log.t_min.push_back(5.0 * static_cast<double>(k));
        log.y.push_back(100.0 + static_cast<double>(k));
        log.u1.push_back(static_cast<double>(k % 7));
        log.u2.push_back(1000.0 + static_cast<double>(k));
    }
    log.segment = std::move(segment);
    return log;
}

}  // namespace

TEST_CASE("regressor assembly by hand") {
    SignalLog log;
    log.t_min = {0, 5, 10};
    log.y = {1, 2, 3};
    log.u1 = {0, 0, 0};
    log.u2 = {5, 5, 5};
    const RegressorDataset ds = build_regressors(log, {0, 1, 1});
    REQUIRE(ds.size() == 1);
    const std::vector<double> expected{2, 0, 0, 5, 5};
    const auto row = ds.row(0);
    CHECK(std::vector<double>(row.begin(), row.end()) == expected);
    CHECK(ds.output(0) == 3.0);
}

TEST_CASE("regressor length and block map") {
    const NarxOrders o{5, 9, 3};
    CHECK(o.regressor_len() == 20);
    CHECK(o.state_len() == 18);
    const BlockMap m = BlockMap::for_orders(o);
    CHECK(m.glucose.offset == 0);
    CHECK(m.meal.offset == 6);
    CHECK(m.insulin.offset == 16);
    CHECK(m.block_of(5) == 0);
    CHECK(m.block_of(6) == 1);
    CHECK(m.block_of(19) == 2);
}

TEST_CASE("degenerate logs and orders") {
    CHECK_THROWS_AS(build_regressors(SignalLog{}, {5, 9, 3}), LengthError);
    CHECK_THROWS_AS(build_regressors(ramp_log(10), {5, 9, 3}), LengthError);
    CHECK_THROWS_AS(build_regressors(ramp_log(30), {0, 0, 1}), DomainError);
    SignalLog bad = ramp_log(30);
    bad.t_min[3] = 16.0;
    CHECK_THROWS_AS(build_regressors(bad, {1, 1, 1}), FormatError);
}

TEST_CASE("rows reproduce the lagged signals") {
    const NarxOrders o{3, 4, 2};
    const SignalLog log = ramp_log(60);
    const RegressorDataset ds = build_regressors(log, o);
    const auto lag = static_cast<std::size_t>(o.max_lag());
    REQUIRE(ds.size() == log.size() - lag - 1);
    const BlockMap m = BlockMap::for_orders(o);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const std::size_t k = r + lag;
        const auto w = ds.row(r);
        for (int i = 0; i < m.glucose.length; ++i) CHECK(w[static_cast<std::size_t>(m.glucose.offset + i)] == log.y[k - static_cast<std::size_t>(i)]);
        for (int i = 0; i < m.meal.length; ++i) CHECK(w[static_cast<std::size_t>(m.meal.offset + i)] == log.u1[k - static_cast<std::size_t>(i)]);
        for (int i = 0; i < m.insulin.length; ++i) CHECK(w[static_cast<std::size_t>(m.insulin.offset + i)] == log.u2[k - static_cast<std::size_t>(i)]);
        CHECK(ds.output(r) == log.y[k + 1]);
    }
}

TEST_CASE("no regressor straddles a segment boundary") {
    std::vector<int> seg(40, 0);
    std::fill(seg.begin() + 20, seg.end(), 1);
    const SignalLog log = ramp_log(40, seg);
    const NarxOrders o{2, 1, 1};
    const RegressorDataset ds = build_regressors(log, o);
    CHECK(ds.size() == 2 * (20 - 2 - 1));
    for (std::size_t r = 0; r < ds.size(); ++r) {
        // y is 100 + k, so the glucose lags and the output are consecutive within a segment
        const auto w = ds.row(r);
        CHECK(ds.output(r) - w[0] == 1.0);
        CHECK(w[0] - w[2] == 2.0);
    }
}

TEST_CASE("train/test split is a seeded partition") {
    RegressorDataset ds(NarxOrders{0, 1, 1});
    for (int i = 0; i < 100; ++i) ds.add_row(std::vector<double>{double(i), 0, 0, 0, 0}, i);
    for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
        auto [a, b] = split_train_test(ds, 0.8, seed);
        CHECK(a.size() == 80);
        CHECK(b.size() == 20);
        std::set<double> seen;
        for (std::size_t i = 0; i < a.size(); ++i) seen.insert(a.output(i));
        for (std::size_t i = 0; i < b.size(); ++i) seen.insert(b.output(i));
        CHECK(seen.size() == 100);
        auto [a2, b2] = split_train_test(ds, 0.8, seed);
        CHECK(a2.outputs() == a.outputs());
        CHECK(b2.outputs() == b.outputs());
    }
    CHECK_THROWS(split_train_test(ds, 1.0, 1));
    CHECK_THROWS(split_train_test(ds, 0.0, 1));
}

TEST_CASE("order selection matches an independent MSE table") {
    RandomStream rng(11);
    auto make = [&](std::size_t n) {
        SignalLog log;
        double y1 = 120.0;
        double y0 = 121.0;
        for (std::size_t k = 0; k < n; ++k) {
            log.t_min.push_back(5.0 * static_cast<double>(k));
            log.y.push_back(y0);
            log.u1.push_back(0.0);
            log.u2.push_back(100.0);
            const double next = 30.0 + 1.2 * y0 - 0.45 * y1 + rng.normal(0.0, 1.0);
            y1 = y0;
            y0 = next;
        }
        return log;
    };
    const SignalLog fit_log = make(2000);
    const SignalLog held = make(1000);
    const std::vector<NarxOrders> cands{{0, 1, 1}, {1, 1, 1}, {3, 1, 1}};
    const OrderSelection sel = select_orders(fit_log, held, cands, testsupport::least_squares_fitter);
    CHECK(sel.best == NarxOrders{1, 1, 1});

    double best_mse = 1e300;
    NarxOrders best{};
    for (const NarxOrders& o : cands) {
        const RegressorDataset tr = build_regressors(fit_log, o);
        const RegressorDataset te = build_regressors(held, o);
        const auto f = testsupport::least_squares_fitter(tr);
        double s = 0.0;
        for (std::size_t i = 0; i < te.size(); ++i) s += std::pow(f(te.row(i)) - te.output(i), 2);
        s /= static_cast<double>(te.size());
        if (s < best_mse) {
            best_mse = s;
            best = o;
        }
    }
    CHECK(sel.best == best);

    const std::vector<NarxOrders> one{{3, 1, 1}};
    CHECK(select_orders(fit_log, held, one, testsupport::least_squares_fitter).best == NarxOrders{3, 1, 1});
    CHECK_THROWS_AS(select_orders(fit_log, held, std::vector<NarxOrders>{}, testsupport::least_squares_fitter), DomainError);
}
