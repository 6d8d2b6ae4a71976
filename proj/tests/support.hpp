#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "chokimpc/holder.hpp"
#include "chokimpc/narx_data.hpp"
#include "chokimpc/random.hpp"

namespace testsupport {

using namespace chokimpc;

inline std::vector<double> random_vector(RandomStream& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = lo + (hi - lo) * rng.uniform();
    return v;
}

/// y = c + sum_j a_j sin(w_j) with |a_j| <= L_j, so every pair satisfies the cone constraint.
struct ConsistentData {
    std::shared_ptr<RegressorDataset> data;
    HolderParams params;
};

inline ConsistentData consistent_dataset(RandomStream& rng, const NarxOrders& orders, std::size_t rows,
                                         const std::array<double, 3>& blocks) {
    ConsistentData out;
    out.params = HolderParams::from_blocks(orders, blocks[0], blocks[1], blocks[2]);
    const auto n = static_cast<std::size_t>(orders.regressor_len());
    std::vector<double> a(n);
    for (std::size_t j = 0; j < n; ++j) a[j] = out.params.L[j] * (2.0 * rng.uniform() - 1.0);
    const double c = 100.0 * rng.uniform();
    out.data = std::make_shared<RegressorDataset>(orders);
    for (std::size_t i = 0; i < rows; ++i) {
        const std::vector<double> w = random_vector(rng, n, -3.0, 3.0);
        double y = c;
        for (std::size_t j = 0; j < n; ++j) y += a[j] * std::sin(w[j]);
        out.data->add_row(w, y);
    }
    return out;
}

/// Ordinary least squares with intercept.
inline OneStepPredictor least_squares_fitter(const RegressorDataset& ds) {
    const auto n = static_cast<Eigen::Index>(ds.size());
    const Eigen::Index m = ds.width() + 1;
    Eigen::MatrixXd X(n, m);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = ds.row(static_cast<std::size_t>(i));
        X(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < m; ++j) X(i, j) = r[static_cast<std::size_t>(j - 1)];
        y(i) = ds.output(static_cast<std::size_t>(i));
    }
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    return [beta](std::span<const double> w) {
        double v = beta(0);
        for (std::size_t j = 0; j < w.size(); ++j) v += beta(static_cast<Eigen::Index>(j + 1)) * w[j];
        return v;
    };
}

/// min 0.5 x'Hx + f'x  s.t.  G x <= h, by Hildreth's dual coordinate ascent.
inline Eigen::VectorXd hildreth_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& f, const Eigen::MatrixXd& G,
                                   const Eigen::VectorXd& h, int sweeps = 20000) {
    const Eigen::MatrixXd Hinv = H.inverse();
    const Eigen::MatrixXd D = G * Hinv * G.transpose();
    const Eigen::VectorXd d = h + G * Hinv * f;
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(G.rows());
    for (int s = 0; s < sweeps; ++s) {
        double change = 0.0;
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            const double w = -(d(i) + D.row(i).dot(lam) - D(i, i) * lam(i)) / D(i, i);
            const double next = std::max(0.0, w);
            change = std::max(change, std::abs(next - lam(i)));
            lam(i) = next;
        }
        if (change < 1e-14) break;
    }
    return -Hinv * (f + G.transpose() * lam);
}

}  // namespace testsupport
