#include "chokimpc/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "chokimpc/errors.hpp"

namespace chokimpc {

void FitBounds::validate() const {
    for (std::size_t c = 0; c < 3; ++c) {
        if (!(lower[c] >= 0.0) || !(upper[c] >= lower[c]) || !std::isfinite(upper[c])) {
            throw DomainError("fit bounds must satisfy 0 <= lower <= upper < inf");
        }
    }
}

std::array<double, 3> FitBounds::project(const std::array<double, 3>& x) const {
    std::array<double, 3> p{};
    for (std::size_t c = 0; c < 3; ++c) p[c] = std::clamp(x[c], lower[c], upper[c]);
    return p;
}

double validation_mse(const HolderParams& params, const RegressorDataset& train,
                      const RegressorDataset& test) {
    if (test.empty()) throw LengthError("validation set is empty");
    const ChokiPredictor predictor(std::make_shared<const RegressorDataset>(train), params);
    double sse = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double e = predictor(test.row(i)) - test.output(i);
        sse += e * e;
    }
    return sse / static_cast<double>(test.size());
}

namespace {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 block_distances(std::span<const double> a, std::span<const double> b, const BlockMap& map) {
    Vec3 d{0.0, 0.0, 0.0};
    const BlockRange ranges[3] = {map.glucose, map.meal, map.insulin};
    for (std::size_t k = 0; k < 3; ++k) {
        for (int j = ranges[k].offset; j < ranges[k].offset + ranges[k].length; ++j) {
            const auto u = static_cast<std::size_t>(j);
            d[k] += std::abs(a[u] - b[u]);
        }
    }
    return d;
}

/// Consistency constraint a . L >= b for one training pair.
struct PairConstraint {
    Vec3 a;
    double b;
};

class Problem {
public:
    Problem(const RegressorDataset& train, const RegressorDataset& test, const FitBounds& bounds)
        : bounds_(bounds), n_train_(train.size()), n_test_(test.size()) {
        const BlockMap& map = train.blocks();
        for (std::size_t i = 0; i < n_train_; ++i) {
            for (std::size_t j = i + 1; j < n_train_; ++j) {
                const double b = std::abs(train.output(i) - train.output(j));
                const Vec3 a = block_distances(train.row(i), train.row(j), map);
                // Pairs satisfied at the lower corner can never bind.
                if (b > dot(a, bounds.lower)) pairs_.push_back({a, b});
            }
        }
        for (const auto& p : pairs_) {
            relaxation_ = std::max(relaxation_, p.b - dot(p.a, bounds.upper));
        }
        relaxation_ = std::max(relaxation_, 0.0);

        cross_.resize(n_test_ * n_train_);
        for (std::size_t t = 0; t < n_test_; ++t) {
            for (std::size_t i = 0; i < n_train_; ++i) {
                cross_[t * n_train_ + i] = block_distances(test.row(t), train.row(i), map);
            }
        }
        y_train_ = train.outputs();
        y_test_ = test.outputs();
    }

    [[nodiscard]] double relaxation() const { return relaxation_; }
    [[nodiscard]] std::size_t binding_pairs() const { return pairs_.size(); }
    [[nodiscard]] std::size_t evaluations() const { return evaluations_; }

    [[nodiscard]] double rhs(const PairConstraint& p) const { return p.b - relaxation_; }
    [[nodiscard]] double slack_tol(double b) const { return 1e-12 * std::max(1.0, std::abs(b)); }

    [[nodiscard]] bool feasible(const Vec3& L) const {
        return std::all_of(pairs_.begin(), pairs_.end(), [&](const PairConstraint& p) {
            return dot(p.a, L) >= rhs(p) - slack_tol(p.b);
        });
    }

    /// Smallest t in [0, 1] such that s + t (upper - s) is feasible.
    [[nodiscard]] Vec3 lift(const Vec3& s) const {
        Vec3 dir{};
        for (std::size_t c = 0; c < 3; ++c) dir[c] = bounds_.upper[c] - s[c];
        double t = 0.0;
        for (const auto& p : pairs_) {
            const double deficit = rhs(p) - dot(p.a, s);
            if (deficit <= 0.0) continue;
            const double gain = dot(p.a, dir);
            t = std::max(t, gain > 0.0 ? deficit / gain : 1.0);
        }
        t = std::min(1.0, t * (1.0 + 1e-12));
        Vec3 out{};
        for (std::size_t c = 0; c < 3; ++c) out[c] = t >= 1.0 ? bounds_.upper[c] : s[c] + t * dir[c];
        return out;
    }

    /// Smallest feasible value of coordinate c with the others held fixed.
    [[nodiscard]] double coordinate_floor(const Vec3& L, std::size_t c) const {
        double lo = bounds_.lower[c];
        for (const auto& p : pairs_) {
            if (p.a[c] <= 0.0) continue;
            const double others = dot(p.a, L) - p.a[c] * L[c];
            lo = std::max(lo, (rhs(p) - others) / p.a[c]);
        }
        return std::min(lo, bounds_.upper[c]);
    }

    double mse(const Vec3& L) {
        ++evaluations_;
        double sse = 0.0;
        const Vec3* row = cross_.data();
        for (std::size_t t = 0; t < n_test_; ++t, row += n_train_) {
            double ceiling = std::numeric_limits<double>::infinity();
            double floor = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n_train_; ++i) {
                const double d = row[i][0] * L[0] + row[i][1] * L[1] + row[i][2] * L[2];
                ceiling = std::min(ceiling, y_train_[i] + d);
                floor = std::max(floor, y_train_[i] - d);
            }
            const double e = 0.5 * ceiling + 0.5 * floor - y_test_[t];
            sse += e * e;
        }
        return sse / static_cast<double>(n_test_);
    }

private:
    FitBounds bounds_;
    std::size_t n_train_;
    std::size_t n_test_;
    std::vector<PairConstraint> pairs_;
    double relaxation_ = 0.0;
    std::vector<Vec3> cross_;
    std::vector<double> y_train_;
    std::vector<double> y_test_;
    std::size_t evaluations_ = 0;
};

struct Point {
    Vec3 L;
    double mse;
};

/// Grid scan then golden-section refinement of coordinate c on [lo, hi].
Point line_search(Problem& problem, Point current, std::size_t c, double lo, double hi,
                  const FitOptions& opt) {
    if (hi - lo <= 0.0) return current;
    Point best = current;
    auto eval = [&](double v) {
        Vec3 L = current.L;
        L[c] = v;
        const double f = problem.mse(L);
        if (f < best.mse) best = {L, f};
        return f;
    };

    const int n = std::max(3, opt.grid_points);
    std::vector<double> xs(static_cast<std::size_t>(n));
    std::vector<double> fs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const auto u = static_cast<std::size_t>(k);
        xs[u] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        fs[u] = eval(xs[u]);
    }
    const auto kmin = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
    double a = xs[kmin == 0 ? 0 : kmin - 1];
    double b = xs[std::min(kmin + 1, xs.size() - 1)];

    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = eval(x1);
    double f2 = eval(x2);
    for (int it = 0; it < opt.golden_iterations; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = eval(x2);
        }
    }
    return best;
}

Point coordinate_descent(Problem& problem, Point start, const FitBounds& bounds,
                         const FitOptions& opt) {
    Point cur = start;
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        const double before = cur.mse;
        for (std::size_t c = 0; c < 3; ++c) {
            const double lo = problem.coordinate_floor(cur.L, c);
            cur = line_search(problem, cur, c, lo, bounds.upper[c], opt);
        }
        if (!(cur.mse < before - 1e-12 * std::max(1.0, before))) break;
    }
    return cur;
}

}  // namespace

FitResult fit_hyperparams(const RegressorDataset& train, const RegressorDataset& test,
                          const FitBounds& bounds, const HolderParams& init,
                          const FitOptions& options) {
    bounds.validate();
    if (train.empty() || test.empty()) throw LengthError("fitting needs nonempty train and test sets");
    if (train.orders() != test.orders() || init.orders != train.orders()) {
        throw DomainError("train, test and initial parameters use different orders");
    }

    Problem problem(train, test, bounds);

    const Vec3 init_point = problem.lift(bounds.project(init.block_L));
    Point best{init_point, problem.mse(init_point)};
    const double init_mse = best.mse;

    Vec3 center{};
    for (std::size_t c = 0; c < 3; ++c) center[c] = 0.5 * (bounds.lower[c] + bounds.upper[c]);
    const Vec3 starts[3] = {init_point, problem.lift(center), problem.lift(bounds.lower)};
    for (const Vec3& s : starts) {
        const Point p = coordinate_descent(problem, {s, problem.mse(s)}, bounds, options);
        if (p.mse < best.mse) best = p;
    }

    FitResult result;
    result.params = HolderParams::from_blocks(train.orders(), best.L[0], best.L[1], best.L[2]);
    result.mse = best.mse;
    result.init_mse = init_mse;
    result.init_point = init_point;
    result.relaxation = problem.relaxation();
    result.consistent = problem.relaxation() == 0.0;
    result.binding_pairs = problem.binding_pairs();
    result.evaluations = problem.evaluations();
    return result;
}

}  // namespace chokimpc
