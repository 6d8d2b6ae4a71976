#include "chokimpc/terminal.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "chokimpc/errors.hpp"

namespace chokimpc {

LinearModel linearize(const NextOutputFn& f, const NarxOrders& orders, const PredictionState& x_bar,
                      const Eigen::Vector2d& u_bar, double epsilon) {
    if (!(epsilon > 0.0)) throw DomainError("finite-difference step must be > 0");
    if (x_bar.orders != orders) throw DomainError("equilibrium state orders differ");
    const int nx = orders.state_len();

    LinearModel lin;
    lin.A = Eigen::MatrixXd::Zero(nx, nx);
    lin.B = Eigen::MatrixXd::Zero(nx, 2);
    lin.x_bar = x_bar.as_vector();
    lin.u_bar = u_bar;
    lin.epsilon = epsilon;

    const std::vector<double> w0 = assemble_regressor(x_bar, u_bar[0], u_bar[1]);
    const BlockMap map = BlockMap::for_orders(orders);

    // Regressor index of each state component and of the two inputs.
    std::vector<int> state_to_w(static_cast<std::size_t>(nx));
    {
        int s = 0;
        for (int i = 0; i < orders.glucose_len(); ++i) state_to_w[static_cast<std::size_t>(s++)] = map.glucose.offset + i;
        for (int i = 0; i < orders.nb; ++i) state_to_w[static_cast<std::size_t>(s++)] = map.meal.offset + 1 + i;
        for (int i = 0; i < orders.nc; ++i) state_to_w[static_cast<std::size_t>(s++)] = map.insulin.offset + 1 + i;
    }
    auto central = [&](int w_index) {
        std::vector<double> wp = w0;
        std::vector<double> wm = w0;
        wp[static_cast<std::size_t>(w_index)] += epsilon;
        wm[static_cast<std::size_t>(w_index)] -= epsilon;
        return (f(wp) - f(wm)) / (2.0 * epsilon);
    };
    for (int i = 0; i < nx; ++i) lin.A(0, i) = central(state_to_w[static_cast<std::size_t>(i)]);
    lin.B(0, 0) = central(map.meal.offset);
    lin.B(0, 1) = central(map.insulin.offset);

    // Shift registers.
    for (int i = 1; i < orders.glucose_len(); ++i) lin.A(i, i - 1) = 1.0;
    const int meal0 = orders.glucose_len();
    lin.B(meal0, 0) = 1.0;
    for (int i = 1; i < orders.nb; ++i) lin.A(meal0 + i, meal0 + i - 1) = 1.0;
    const int ins0 = meal0 + orders.nb;
    lin.B(ins0, 1) = 1.0;
    for (int i = 1; i < orders.nc; ++i) lin.A(ins0 + i, ins0 + i - 1) = 1.0;
    return lin;
}

LinearModel linearize(const PredictionModel& model, const PredictionState& x_bar,
                      const Eigen::Vector2d& u_bar, double epsilon) {
    const ChokiPredictor& p = model.predictor();
    return linearize([&p](std::span<const double> w) { return p(w); }, model.orders(), x_bar, u_bar,
                     epsilon);
}

namespace {

Eigen::MatrixXd riccati_map(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                            const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd BtP = B.transpose() * P;
    const Eigen::MatrixXd S = R + BtP * B;
    const Eigen::MatrixXd G = S.ldlt().solve(BtP * A);
    Eigen::MatrixXd next = A.transpose() * P * A - (BtP * A).transpose() * G + Q;
    return 0.5 * (next + next.transpose());
}

}  // namespace

double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
    return (P - riccati_map(A, B, Q, R, P)).norm();
}

TerminalPair solve_dlqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, const DlqrOptions& options) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
        R.cols() != B.cols()) {
        throw DomainError("dlqr: inconsistent matrix dimensions");
    }
    Eigen::MatrixXd P = Q;
    TerminalPair out;
    for (int it = 1; it <= options.max_iterations; ++it) {
        Eigen::MatrixXd next = riccati_map(A, B, Q, R, P);
        if (!next.allFinite() || next.norm() > 1e30) throw NumericError("dlqr: Riccati iteration diverged");
        const double step = (next - P).norm();
        P = std::move(next);
        out.iterations = it;
        if (step <= options.tolerance * 1e-2) {
            const double res = riccati_residual(A, B, Q, R, P);
            if (res <= options.tolerance) {
                out.residual = res;
                break;
            }
        }
        if (it == options.max_iterations) {
            throw NumericError("dlqr: no convergence after " + std::to_string(it) +
                               " iterations (residual " + std::to_string(riccati_residual(A, B, Q, R, P)) + ")");
        }
    }
    const Eigen::MatrixXd BtP = B.transpose() * P;
    out.K = (R + BtP * B).ldlt().solve(BtP * A);
    out.P = std::move(P);
    return out;
}

double spectral_radius(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    const Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

LqrWeights default_lqr_weights(const NarxOrders& orders, double output_weight, double input_weight,
                               double meal_weight, double ridge) {
    const int nx = orders.state_len();
    LqrWeights w;
    w.Q = ridge * Eigen::MatrixXd::Identity(nx, nx);
    w.Q(0, 0) += output_weight;
    w.R = Eigen::MatrixXd::Zero(2, 2);
    w.R(0, 0) = meal_weight;
    w.R(1, 1) = input_weight;
    return w;
}

}  // namespace chokimpc
