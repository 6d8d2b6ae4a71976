#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace chokimpc {

/// Sampling period of every signal in the toolkit, in minutes.
inline constexpr double kSamplePeriodMin = 5.0;

/// Raw closed- or open-loop log on a uniform 5-min grid.
///
/// `segment` is optional. When present it labels contiguous experiment
/// segments; regressors are never assembled across a label change.
struct SignalLog {
    std::vector<double> t_min;
    std::vector<double> y;   // glucose, mg/dL
    std::vector<double> u1;  // meal, g CHO per sample
    std::vector<double> u2;  // basal insulin, pmol per sample
    std::vector<int> segment;

    [[nodiscard]] std::size_t size() const { return y.size(); }
    [[nodiscard]] bool empty() const { return y.empty(); }

    /// Throws FormatError on unequal lengths, a non-uniform grid or negative inputs.
    void validate() const;

    /// Appends another log, continuing its timestamps and relabelling its segments.
    void append_segment(const SignalLog& other);
};

struct NarxOrders {
    int na = 0;  // glucose memory
    int nb = 1;  // meal memory
    int nc = 1;  // insulin memory

    [[nodiscard]] int glucose_len() const { return na + 1; }
    [[nodiscard]] int meal_len() const { return nb + 1; }
    [[nodiscard]] int insulin_len() const { return nc + 1; }
    /// Regressor length n_w, current inputs included.
    [[nodiscard]] int regressor_len() const { return glucose_len() + meal_len() + insulin_len(); }
    /// State length n_x = n_w - 2 (the current meal and insulin inputs are not state).
    [[nodiscard]] int state_len() const { return regressor_len() - 2; }
    [[nodiscard]] int max_lag() const;

    void validate() const;

    auto operator<=>(const NarxOrders&) const = default;
};

struct BlockRange {
    int offset = 0;
    int length = 0;
    auto operator<=>(const BlockRange&) const = default;
};

/// Contiguous index ranges of the three regressor blocks.
struct BlockMap {
    BlockRange glucose;
    BlockRange meal;
    BlockRange insulin;

    static BlockMap for_orders(const NarxOrders& orders);
    [[nodiscard]] int total() const { return glucose.length + meal.length + insulin.length; }
    /// 0 = glucose, 1 = meal, 2 = insulin.
    [[nodiscard]] int block_of(int index) const;
    auto operator<=>(const BlockMap&) const = default;
};

/// NARX input/output pairs, row-major regressors.
///
/// Regressor layout: glucose block (y(k) .. y(k-na)), meal block
/// (u1(k) .. u1(k-nb)), insulin block (u2(k) .. u2(k-nc)).
class RegressorDataset {
public:
    RegressorDataset() = default;
    explicit RegressorDataset(NarxOrders orders);

    void add_row(std::span<const double> w, double y_next);
    void reserve(std::size_t rows);

    [[nodiscard]] std::size_t size() const { return y_next_.size(); }
    [[nodiscard]] bool empty() const { return y_next_.empty(); }
    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] const NarxOrders& orders() const { return orders_; }
    [[nodiscard]] const BlockMap& blocks() const { return blocks_; }

    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {w_.data() + i * static_cast<std::size_t>(width_), static_cast<std::size_t>(width_)};
    }
    [[nodiscard]] double output(std::size_t i) const { return y_next_[i]; }
    [[nodiscard]] const std::vector<double>& regressors() const { return w_; }
    [[nodiscard]] const std::vector<double>& outputs() const { return y_next_; }

    [[nodiscard]] RegressorDataset subset(std::span<const std::size_t> rows) const;

private:
    NarxOrders orders_{};
    BlockMap blocks_{};
    int width_ = 0;
    std::vector<double> w_;
    std::vector<double> y_next_;
};

RegressorDataset build_regressors(const SignalLog& log, const NarxOrders& orders);

/// Random row split with a fixed seed; rows keep their original order within each part.
std::pair<RegressorDataset, RegressorDataset> split_train_test(const RegressorDataset& ds,
                                                              double train_fraction,
                                                              std::uint64_t seed);

/// One-step predictor produced by a fitter for a given training set.
using OneStepPredictor = std::function<double(std::span<const double>)>;
using PredictorFitter = std::function<OneStepPredictor(const RegressorDataset&)>;

struct OrderScore {
    NarxOrders orders;
    double mse = 0.0;
};

struct OrderSelection {
    NarxOrders best;
    std::vector<OrderScore> table;
};

/// Fits every candidate on `fit_log` and scores 1-step MSE on `heldout_log`.
/// Ties (relative 1e-9) go to the smallest n_w, then lexicographic order.
OrderSelection select_orders(const SignalLog& fit_log, const SignalLog& heldout_log,
                             std::span<const NarxOrders> candidates, const PredictorFitter& fitter);

}  // namespace chokimpc
