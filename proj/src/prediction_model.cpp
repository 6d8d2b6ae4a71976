#include "chokimpc/prediction_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chokimpc/errors.hpp"

namespace chokimpc {

PredictionState::PredictionState(NarxOrders o, std::vector<double> values)
    : orders(o), x(std::move(values)) {
    if (static_cast<int>(x.size()) != orders.state_len()) {
        throw DomainError("state length " + std::to_string(x.size()) + " does not match orders (" +
                          std::to_string(orders.state_len()) + ")");
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw DomainError("state contains a non-finite entry");
    }
}

PredictionState PredictionState::equilibrium(const NarxOrders& orders, double glucose, double insulin) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(orders.state_len()));
    v.insert(v.end(), static_cast<std::size_t>(orders.glucose_len()), glucose);
    v.insert(v.end(), static_cast<std::size_t>(orders.nb), 0.0);
    v.insert(v.end(), static_cast<std::size_t>(orders.nc), insulin);
    return {orders, std::move(v)};
}

std::span<const double> PredictionState::glucose_lags() const {
    return std::span<const double>(x).subspan(0, static_cast<std::size_t>(orders.glucose_len()));
}
std::span<const double> PredictionState::meal_lags() const {
    return std::span<const double>(x).subspan(static_cast<std::size_t>(orders.glucose_len()),
                                              static_cast<std::size_t>(orders.nb));
}
std::span<const double> PredictionState::insulin_lags() const {
    return std::span<const double>(x).subspan(
        static_cast<std::size_t>(orders.glucose_len() + orders.nb), static_cast<std::size_t>(orders.nc));
}

Eigen::VectorXd PredictionState::as_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

void assemble_regressor(const PredictionState& x, double u1, double u2, std::span<double> out) {
    if (static_cast<int>(out.size()) != x.orders.regressor_len()) {
        throw DomainError("regressor buffer has the wrong length");
    }
    auto it = out.begin();
    it = std::copy(x.glucose_lags().begin(), x.glucose_lags().end(), it);
    *it++ = u1;
    it = std::copy(x.meal_lags().begin(), x.meal_lags().end(), it);
    *it++ = u2;
    std::copy(x.insulin_lags().begin(), x.insulin_lags().end(), it);
}

std::vector<double> assemble_regressor(const PredictionState& x, double u1, double u2) {
    std::vector<double> w(static_cast<std::size_t>(x.orders.regressor_len()));
    assemble_regressor(x, u1, u2, w);
    return w;
}

PredictionState shift_state(const PredictionState& x, double y_next, double u1, double u2) {
    const NarxOrders& o = x.orders;
    PredictionState next;
    next.orders = o;
    next.x.resize(x.x.size());
    auto push = [](std::span<const double> src, double head, double* dst) {
        dst[0] = head;
        std::copy(src.begin(), src.end() - 1, dst + 1);
    };
    double* base = next.x.data();
    push(x.glucose_lags(), y_next, base);
    push(x.meal_lags(), u1, base + o.glucose_len());
    push(x.insulin_lags(), u2, base + o.glucose_len() + o.nb);
    return next;
}

double LocalLaw::insulin(const PredictionState& x, double limit) const {
    if (K.cols() != static_cast<Eigen::Index>(x.x.size()) || K.rows() != 2) {
        throw DomainError("local law gain does not match the state dimension");
    }
    const Eigen::VectorXd dx = x_bar - x.as_vector();
    const double u = K.row(1).dot(dx) + u_bar[1];
    return std::clamp(u, 0.0, limit);
}

PredictionModel::PredictionModel(std::shared_ptr<const RegressorDataset> data, HolderParams params)
    : predictor_(std::move(data), std::move(params)) {}

PredictionModel::PredictionModel(ChokiPredictor predictor) : predictor_(std::move(predictor)) {}

double PredictionModel::predict_next(const PredictionState& x, double u1, double u2) const {
    if (x.orders != orders()) throw DomainError("state orders differ from the model orders");
    if (u1 < 0.0 || u2 < 0.0) throw DomainError("inputs must be nonnegative");
    double buf[256];
    std::vector<double> heap;
    std::span<double> w;
    const auto nw = static_cast<std::size_t>(orders().regressor_len());
    if (nw <= std::size(buf)) {
        w = std::span<double>(buf, nw);
    } else {
        heap.resize(nw);
        w = heap;
    }
    assemble_regressor(x, u1, u2, w);
    return predictor_(w);
}

PredictionState PredictionModel::step(const PredictionState& x, double u1, double u2) const {
    return shift_state(x, predict_next(x, u1, u2), u1, u2);
}

Rollout rollout(const PredictionModel& model, const PredictionState& x0,
                std::span<const double> u2_seq, int horizon, const LocalLaw* law,
                std::span<const double> law_limits) {
    if (horizon < 1) throw DomainError("rollout horizon must be >= 1");
    if (!law_limits.empty() && static_cast<int>(law_limits.size()) < horizon) {
        throw DomainError("law limits shorter than the horizon");
    }
    const auto nc = static_cast<int>(u2_seq.size());
    if (nc > horizon) throw DomainError("control horizon exceeds the prediction horizon");
    if (horizon > nc && law == nullptr) {
        throw DomainError("a local law is required beyond the control horizon");
    }
    Rollout r;
    r.y.reserve(static_cast<std::size_t>(horizon));
    r.u2.reserve(static_cast<std::size_t>(horizon));
    PredictionState x = x0;
    for (int j = 0; j < horizon; ++j) {
        r.y.push_back(x.glucose());
        const double limit =
            law_limits.empty() ? kBasalLimit : std::min(kBasalLimit, law_limits[static_cast<std::size_t>(j)]);
        double u2 = j < nc ? u2_seq[static_cast<std::size_t>(j)] : law->insulin(x, limit);
        if (u2 < 0.0 || u2 > kBasalLimit) {
            throw DomainError("insulin input outside [0, 500] pmol");
        }
        r.u2.push_back(u2);
        x = model.step(x, 0.0, u2);
    }
    r.terminal = std::move(x);
    return r;
}

}  // namespace chokimpc
