#include <doctest.h>

#include "chokimpc/errors.hpp"
#include "chokimpc/prediction_model.hpp"
#include "chokimpc/terminal.hpp"
#include "support.hpp"

using namespace chokimpc;
using doctest::Approx;

namespace {

PredictionModel constant_model(const NarxOrders& o, double value) {
    auto ds = std::make_shared<RegressorDataset>(o);
    ds->add_row(std::vector<double>(static_cast<std::size_t>(o.regressor_len()), 0.0), value);
    return PredictionModel(ds, HolderParams::from_blocks(o, 1, 1, 1));
}

}  // namespace

TEST_CASE("register shift") {
    const NarxOrders o{1, 2, 1};
    const PredictionState x(o, {10, 9, 1, 2, 7});
    const PredictionState n = shift_state(x, 11, 3, 8);
    CHECK(n.x == std::vector<double>{11, 10, 3, 1, 8});
    CHECK(assemble_regressor(x, 5, 6) == std::vector<double>{10, 9, 5, 1, 2, 6, 7});
}

TEST_CASE("constant predictor gives a flat trajectory") {
    const NarxOrders o{5, 9, 3};
    const PredictionModel m = constant_model(o, 120);
    const PredictionState x0 = PredictionState::equilibrium(o, 150, 100);
    CHECK(m.step(x0, 10, 50).glucose() == 120.0);
    const std::vector<double> u(12, 80.0);
    const Rollout r = rollout(m, x0, u, 12, nullptr);
    CHECK(r.y.size() == 12);
    CHECK(r.y[0] == 150.0);
    for (std::size_t j = 1; j < r.y.size(); ++j) CHECK(r.y[j] == 120.0);
    CHECK(r.u2 == u);
}

TEST_CASE("rollout equals chained steps and needs a law past the sequence") {
    RandomStream rng(41);
    const NarxOrders o{2, 1, 2};
    auto cd = testsupport::consistent_dataset(rng, o, 50, {0.3, 0.2, 0.01});
    const PredictionModel m(cd.data, cd.params);
    const PredictionState x0(o, testsupport::random_vector(rng, static_cast<std::size_t>(o.state_len()), -3, 3));
    const std::vector<double> u{1, 2, 3, 4, 5};
    const Rollout r = rollout(m, x0, u, 5, nullptr);
    PredictionState x = x0;
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(r.y[j] == x.glucose());
        x = m.step(x, 0.0, u[j]);
    }
    CHECK(r.terminal.x == x.x);
    const Rollout again = rollout(m, x0, u, 5, nullptr);
    CHECK(again.y == r.y);
    CHECK_THROWS(rollout(m, x0, std::vector<double>{1, 2}, 5, nullptr));
}

TEST_CASE("local law is clamped to the pump range and to the supplied limits") {
    const NarxOrders o{0, 1, 1};
    LocalLaw law;
    law.K = Eigen::MatrixXd::Zero(2, 3);
    law.K(1, 0) = 10.0;
    law.x_bar = Eigen::Vector3d(120, 0, 100);
    law.u_bar = Eigen::Vector2d(0, 100);
    CHECK(law.insulin(PredictionState(o, {120, 0, 100})) == 100.0);
    CHECK(law.insulin(PredictionState(o, {200, 0, 100})) == 0.0);
    CHECK(law.insulin(PredictionState(o, {50, 0, 100})) == 500.0);
    CHECK(law.insulin(PredictionState(o, {50, 0, 100}), 240.0) == 240.0);

    const PredictionModel m = constant_model(o, 50);
    const std::vector<double> limits{500, 500, 300, 10};
    const Rollout r = rollout(m, PredictionState(o, {50, 0, 100}), std::vector<double>{70}, 4, &law, limits);
    CHECK(r.u2 == std::vector<double>{70, 500, 300, 10});
}

TEST_CASE("linearisation of surrogates") {
    const NarxOrders o{1, 1, 1};
    const PredictionState xb(o, {2, 1, 0, 0});
    const NextOutputFn lin = [](std::span<const double> w) { return 0.9 * w[0] + 0.1 * w[4]; };
    for (double eps : {1e-3, 0.1, 1.0, 10.0}) {
        const LinearModel L = linearize(lin, o, xb, Eigen::Vector2d(0, 0), eps);
        CHECK(std::abs(L.A(0, 0) - (0.9)) <= 1e-12);
        CHECK(std::abs(L.B(0, 1) - (0.1)) <= 1e-12);
    }
    const NextOutputFn quad = [](std::span<const double> w) { return w[0] * w[0]; };
    const LinearModel Q = linearize(quad, o, xb, Eigen::Vector2d(0, 0), 0.1);
    CHECK(std::abs(Q.A(0, 0) - 4.0) <= 1e-10);
    CHECK(Q.A(1, 0) == 1.0);
    for (int j = 1; j < Q.A.cols(); ++j) CHECK(Q.A(1, j) == 0.0);
    CHECK(Q.B(2, 0) == 1.0);  // meal register
    CHECK(Q.B(3, 1) == 1.0);  // insulin register

    const NextOutputFn smooth = [](std::span<const double> w) { return std::sin(w[0]) * std::exp(0.1 * w[4]) + w[1] * w[5]; };
    const PredictionState xs(o, {0.4, -0.3, 0.2, 1.5});
    const LinearModel a = linearize(smooth, o, xs, Eigen::Vector2d(0.1, 0.7), 0.01);
    const LinearModel b = linearize(smooth, o, xs, Eigen::Vector2d(0.1, 0.7), 0.005);
    for (int j = 0; j < a.A.cols(); ++j) CHECK(std::abs(a.A(0, j) - b.A(0, j)) <= std::max(1e-3, 0.01 * std::abs(b.A(0, j))));
    for (int j = 0; j < a.B.cols(); ++j) CHECK(std::abs(a.B(0, j) - b.B(0, j)) <= std::max(1e-3, 0.01 * std::abs(b.B(0, j))));
}

TEST_CASE("scalar Riccati fixtures") {
    using M = Eigen::MatrixXd;
    const M one = M::Ones(1, 1);
    const TerminalPair t = solve_dlqr(0.5 * one, one, one, one);
    const double p = (0.25 + std::sqrt(4.0625)) / 2.0;
    CHECK(t.P(0, 0) == Approx(p).epsilon(1e-9));
    CHECK(std::abs(t.P(0, 0) - (1.1328)) <= 1e-3);
    CHECK(std::abs(t.K(0, 0) - (0.2656)) <= 1e-3);
    CHECK(t.residual <= 1e-8);

    const TerminalPair lyap = solve_dlqr(0.6 * one, M::Zero(1, 1), one, one);
    CHECK(lyap.K(0, 0) == 0.0);
    CHECK(lyap.P(0, 0) == Approx(1.0 / (1.0 - 0.36)).epsilon(1e-9));

    const TerminalPair dead = solve_dlqr(M::Zero(2, 2), M::Ones(2, 1), 3.0 * M::Identity(2, 2), one);
    CHECK(dead.P.isApprox(3.0 * M::Identity(2, 2)));
    CHECK(dead.K.norm() == 0.0);

    CHECK_THROWS_AS(solve_dlqr(2.0 * one, M::Zero(1, 1), one, one), NumericError);
}

TEST_CASE("Riccati on random stabilisable systems") {
    RandomStream rng(42);
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd A(3, 3), B(3, 2);
        for (int i = 0; i < 9; ++i) A.data()[i] = 1.2 * (2 * rng.uniform() - 1);
        for (int i = 0; i < 6; ++i) B.data()[i] = 2 * rng.uniform() - 1;
        const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(3, 3);
        const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2, 2);
        const TerminalPair tp = solve_dlqr(A, B, Q, R);
        CHECK(riccati_residual(A, B, Q, R, tp.P) <= 1e-8);
        CHECK(spectral_radius(A - B * tp.K) < 1.0);
        const Eigen::MatrixXd K = (R + B.transpose() * tp.P * B).ldlt().solve(B.transpose() * tp.P * A);
        CHECK((K - tp.K).norm() <= 1e-8);
    }
}
