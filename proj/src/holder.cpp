#include "chokimpc/holder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "chokimpc/errors.hpp"

namespace chokimpc {

HolderParams HolderParams::from_blocks(const NarxOrders& orders, double La, double Lb, double Lc,
                                       double exponent, double mu) {
    orders.validate();
    HolderParams p;
    p.orders = orders;
    p.P.assign(static_cast<std::size_t>(orders.regressor_len()), exponent);
    p.mu = mu;
    p.set_blocks({La, Lb, Lc});
    return p;
}

void HolderParams::set_blocks(const std::array<double, 3>& blocks) {
    block_L = blocks;
    const BlockMap map = BlockMap::for_orders(orders);
    L.assign(static_cast<std::size_t>(map.total()), 0.0);
    for (int j = 0; j < map.total(); ++j) {
        L[static_cast<std::size_t>(j)] = blocks[static_cast<std::size_t>(map.block_of(j))];
    }
}

bool HolderParams::unit_exponents() const {
    return std::all_of(P.begin(), P.end(), [](double p) { return p == 1.0; });
}

void HolderParams::validate() const {
    orders.validate();
    const auto nw = static_cast<std::size_t>(orders.regressor_len());
    if (L.size() != nw || P.size() != nw) {
        throw DomainError("Hölder parameters do not match the regressor length");
    }
    for (std::size_t j = 0; j < nw; ++j) {
        if (!(L[j] >= 0.0) || !std::isfinite(L[j])) throw DomainError("Hölder constant must be >= 0");
        if (!(P[j] > 0.0 && P[j] <= 1.0)) throw DomainError("Hölder exponent must lie in (0, 1]");
    }
    const BlockMap map = BlockMap::for_orders(orders);
    for (int j = 0; j < map.total(); ++j) {
        if (L[static_cast<std::size_t>(j)] != block_L[static_cast<std::size_t>(map.block_of(j))]) {
            throw DomainError("expanded Hölder constants disagree with the block values");
        }
    }
    if (!(mu >= 0.0)) throw DomainError("validation radius must be >= 0");
}

double holder_distance(std::span<const double> d_abs, std::span<const double> L,
                       std::span<const double> P) {
    if (d_abs.size() != L.size() || d_abs.size() != P.size()) {
        throw DomainError("Hölder distance: length mismatch");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < d_abs.size(); ++j) {
        if (d_abs[j] < 0.0) {
            throw DomainError("Hölder distance: negative component at index " + std::to_string(j));
        }
        s += L[j] * (P[j] == 1.0 ? d_abs[j] : std::pow(d_abs[j], P[j]));
    }
    return s;
}

double holder_distance(std::span<const double> d_abs, const HolderParams& params) {
    return holder_distance(d_abs, params.L, params.P);
}

ChokiPredictor::ChokiPredictor(std::shared_ptr<const RegressorDataset> data, HolderParams params)
    : data_(std::move(data)), params_(std::move(params)) {
    if (!data_ || data_->empty()) {
        throw DomainError("CHoKI predictor needs a nonempty dataset");
    }
    params_.validate();
    if (params_.width() != data_->width()) {
        throw DomainError("Hölder parameters and dataset have different regressor lengths");
    }
    unit_exponents_ = params_.unit_exponents();
}

ChokiPredictor::Envelope ChokiPredictor::envelope(std::span<const double> q) const {
    const auto nw = static_cast<std::size_t>(data_->width());
    if (q.size() != nw) {
        throw DomainError("query length " + std::to_string(q.size()) + " differs from n_w " +
                          std::to_string(nw));
    }
    const double* L = params_.L.data();
    const double* P = params_.P.data();
    const double* w = data_->regressors().data();
    const double* y = data_->outputs().data();
    double ceiling = std::numeric_limits<double>::infinity();
    double floor = -std::numeric_limits<double>::infinity();
    const std::size_t n = data_->size();
    for (std::size_t i = 0; i < n; ++i, w += nw) {
        double d = 0.0;
        if (unit_exponents_) {
            for (std::size_t j = 0; j < nw; ++j) d += L[j] * std::abs(q[j] - w[j]);
        } else {
            for (std::size_t j = 0; j < nw; ++j) d += L[j] * std::pow(std::abs(q[j] - w[j]), P[j]);
        }
        ceiling = std::min(ceiling, y[i] + d);
        floor = std::max(floor, y[i] - d);
    }
    return {ceiling, floor};
}

double ChokiPredictor::operator()(std::span<const double> q) const {
    const Envelope e = envelope(q);
    return 0.5 * e.ceiling + 0.5 * e.floor;
}

double predict(std::span<const double> q, const HolderParams& params, const RegressorDataset& ds) {
    if (ds.empty()) throw DomainError("CHoKI prediction on an empty dataset");
    return ChokiPredictor(std::make_shared<const RegressorDataset>(ds), params)(q);
}

LackiEstimate lacki_estimate(const RegressorDataset& ds) {
    if (ds.size() < 2) throw LengthError("LACKI needs at least two observations");
    LackiEstimate est;
    bool any_distinct = false;
    const auto nw = static_cast<std::size_t>(ds.width());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto wi = ds.row(i);
        for (std::size_t j = i + 1; j < ds.size(); ++j) {
            const auto wj = ds.row(j);
            double dist = 0.0;
            for (std::size_t c = 0; c < nw; ++c) dist = std::max(dist, std::abs(wi[c] - wj[c]));
            const double dy = std::abs(ds.output(i) - ds.output(j));
            if (dist == 0.0) {
                if (dy > 0.0) ++est.skipped_pairs;
                continue;
            }
            any_distinct = true;
            est.L = std::max(est.L, dy / dist);
        }
    }
    if (!any_distinct) throw DomainError("LACKI: all inputs coincide");
    return est;
}

double lower_quantile(std::vector<double> values, double quantile) {
    if (values.empty()) throw LengthError("quantile of an empty set");
    if (!(quantile > 0.0 && quantile <= 1.0)) throw DomainError("quantile must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = quantile * static_cast<double>(values.size());
    auto idx = static_cast<std::size_t>(std::ceil(pos - 1e-9));
    idx = std::clamp<std::size_t>(idx, 1, values.size()) - 1;
    return values[idx];
}

double validation_radius(const HolderParams& params, const RegressorDataset& train,
                         const RegressorDataset& val, double quantile) {
    if (val.empty()) throw LengthError("validation set is empty");
    const ChokiPredictor predictor(std::make_shared<const RegressorDataset>(train), params);
    std::vector<double> errors(val.size());
    for (std::size_t i = 0; i < val.size(); ++i) {
        errors[i] = std::abs(predictor(val.row(i)) - val.output(i));
    }
    return lower_quantile(std::move(errors), quantile);
}

}  // namespace chokimpc
