#include "chokimpc/narx_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "chokimpc/errors.hpp"
#include "chokimpc/random.hpp"

namespace chokimpc {

void SignalLog::validate() const {
    const std::size_t n = y.size();
    if (t_min.size() != n || u1.size() != n || u2.size() != n) {
        throw FormatError("signal log: series lengths differ (t=" + std::to_string(t_min.size()) +
                          ", y=" + std::to_string(n) + ", u1=" + std::to_string(u1.size()) +
                          ", u2=" + std::to_string(u2.size()) + ")");
    }
    if (!segment.empty() && segment.size() != n) {
        throw FormatError("signal log: segment column length differs from the signals");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(t_min[i] - t_min[i - 1] - kSamplePeriodMin) > 1e-6) {
            throw FormatError("signal log: non-uniform timestamps at sample " + std::to_string(i) +
                              " (expected a 5-min grid)");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(u1[i] >= 0.0) || !(u2[i] >= 0.0)) {
            throw FormatError("signal log: negative or non-finite input at sample " + std::to_string(i));
        }
        if (!std::isfinite(y[i])) {
            throw FormatError("signal log: non-finite glucose at sample " + std::to_string(i));
        }
    }
}

void SignalLog::append_segment(const SignalLog& other) {
    const int next_label = segment.empty() ? (empty() ? 0 : 1)
                                           : *std::max_element(segment.begin(), segment.end()) + 1;
    if (segment.empty() && !empty()) {
        segment.assign(size(), 0);
    }
    const double t0 = empty() ? (other.empty() ? 0.0 : other.t_min.front())
                              : t_min.back() + kSamplePeriodMin;
    for (std::size_t i = 0; i < other.size(); ++i) {
        t_min.push_back(t0 + kSamplePeriodMin * static_cast<double>(i));
        y.push_back(other.y[i]);
        u1.push_back(other.u1[i]);
        u2.push_back(other.u2[i]);
        segment.push_back(next_label);
    }
}

int NarxOrders::max_lag() const { return std::max({na, nb, nc}); }

void NarxOrders::validate() const {
    if (na < 0 || nb < 1 || nc < 1) {
        throw DomainError("orders must satisfy na >= 0, nb >= 1, nc >= 1 (got " + std::to_string(na) +
                          "," + std::to_string(nb) + "," + std::to_string(nc) + ")");
    }
}

BlockMap BlockMap::for_orders(const NarxOrders& orders) {
    BlockMap map;
    map.glucose = {0, orders.glucose_len()};
    map.meal = {map.glucose.length, orders.meal_len()};
    map.insulin = {map.meal.offset + map.meal.length, orders.insulin_len()};
    return map;
}

int BlockMap::block_of(int index) const {
    if (index >= glucose.offset && index < glucose.offset + glucose.length) return 0;
    if (index >= meal.offset && index < meal.offset + meal.length) return 1;
    if (index >= insulin.offset && index < insulin.offset + insulin.length) return 2;
    throw DomainError("regressor index " + std::to_string(index) + " outside the block map");
}

RegressorDataset::RegressorDataset(NarxOrders orders)
    : orders_(orders), blocks_(BlockMap::for_orders(orders)), width_(orders.regressor_len()) {
    orders_.validate();
}

void RegressorDataset::add_row(std::span<const double> w, double y_next) {
    if (static_cast<int>(w.size()) != width_) {
        throw FormatError("regressor row has length " + std::to_string(w.size()) + ", expected " +
                          std::to_string(width_));
    }
    w_.insert(w_.end(), w.begin(), w.end());
    y_next_.push_back(y_next);
}

void RegressorDataset::reserve(std::size_t rows) {
    w_.reserve(rows * static_cast<std::size_t>(width_));
    y_next_.reserve(rows);
}

RegressorDataset RegressorDataset::subset(std::span<const std::size_t> rows) const {
    RegressorDataset out(orders_);
    out.reserve(rows.size());
    for (std::size_t r : rows) {
        out.add_row(row(r), output(r));
    }
    return out;
}

RegressorDataset build_regressors(const SignalLog& log, const NarxOrders& orders) {
    orders.validate();
    if (log.empty()) {
        throw LengthError("signal log is empty");
    }
    log.validate();
    const auto lag = static_cast<std::size_t>(orders.max_lag());
    if (log.size() <= lag + 1) {
        throw LengthError("signal log has " + std::to_string(log.size()) +
                          " samples; at least " + std::to_string(lag + 2) + " are required");
    }

    RegressorDataset ds(orders);
    ds.reserve(log.size());
    std::vector<double> w(static_cast<std::size_t>(orders.regressor_len()));

    // Rows are built per segment so no regressor straddles a boundary.
    std::size_t begin = 0;
    while (begin < log.size()) {
        std::size_t end = begin + 1;
        if (!log.segment.empty()) {
            while (end < log.size() && log.segment[end] == log.segment[begin]) ++end;
        } else {
            end = log.size();
        }
        for (std::size_t k = begin + lag; k + 1 < end; ++k) {
            std::size_t c = 0;
            for (int i = 0; i <= orders.na; ++i) w[c++] = log.y[k - static_cast<std::size_t>(i)];
            for (int i = 0; i <= orders.nb; ++i) w[c++] = log.u1[k - static_cast<std::size_t>(i)];
            for (int i = 0; i <= orders.nc; ++i) w[c++] = log.u2[k - static_cast<std::size_t>(i)];
            ds.add_row(w, log.y[k + 1]);
        }
        begin = end;
    }
    if (ds.empty()) {
        throw LengthError("no segment of the signal log is long enough for the requested orders");
    }
    return ds;
}

std::pair<RegressorDataset, RegressorDataset> split_train_test(const RegressorDataset& ds,
                                                              double train_fraction,
                                                              std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DomainError("train fraction must lie in (0, 1)");
    }
    if (ds.size() < 4) {
        throw LengthError("splitting needs at least 4 rows");
    }
    const std::size_t n = ds.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    RandomStream rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.index(i + 1)]);
    }
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

    std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {ds.subset(train), ds.subset(test)};
}

OrderSelection select_orders(const SignalLog& fit_log, const SignalLog& heldout_log,
                             std::span<const NarxOrders> candidates, const PredictorFitter& fitter) {
    if (candidates.empty()) {
        throw DomainError("order selection needs at least one candidate");
    }
    OrderSelection sel;
    for (const NarxOrders& orders : candidates) {
        const RegressorDataset train = build_regressors(fit_log, orders);
        const RegressorDataset held = build_regressors(heldout_log, orders);
        const OneStepPredictor predict = fitter(train);
        double sse = 0.0;
        for (std::size_t i = 0; i < held.size(); ++i) {
            const double e = predict(held.row(i)) - held.output(i);
            sse += e * e;
        }
        sel.table.push_back({orders, sse / static_cast<double>(held.size())});
    }

    auto better = [](const OrderScore& a, const OrderScore& b) {
        const double tol = 1e-9 * std::max(std::abs(a.mse), std::abs(b.mse)) + 1e-300;
        if (std::abs(a.mse - b.mse) > tol) return a.mse < b.mse;
        if (a.orders.regressor_len() != b.orders.regressor_len()) {
            return a.orders.regressor_len() < b.orders.regressor_len();
        }
        return a.orders < b.orders;
    };
    sel.best = std::min_element(sel.table.begin(), sel.table.end(), better)->orders;
    return sel;
}

}  // namespace chokimpc
