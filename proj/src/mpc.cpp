#include "chokimpc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chokimpc/errors.hpp"

namespace chokimpc {

void MpcConfig::validate(const NarxOrders& orders) const {
    const MpcWeights& w = weights;
    if (Np < 1 || Nc < 1 || Nc > Np) throw ConfigError("horizons must satisfy 1 <= Nc <= Np");
    if (!(w.Q > 0 && w.R > 0 && w.p_hypo > 0 && w.p_hyper > 0 && w.p_min > 0 && w.p_max > 0 &&
          w.p_u > 0 && w.lambda > 0)) {
        throw ConfigError("MPC weights must be positive");
    }
    if (!(w.p_hypo > w.p_hyper) || !(w.p_min > w.p_max)) {
        throw ConfigError("hypoglycaemia penalties must exceed the hyperglycaemia penalties");
    }
    if (!(u_ref > 0.0) || u_ref > u2_lim) throw ConfigError("u_ref must lie in (0, u2_lim]");
    if (zone.empty()) throw ConfigError("setpoint zone is empty");
    if (sets.sets.empty() || sets.horizon() < Nc) {
        throw ConfigError("tightened sets do not cover the control horizon");
    }
    const auto nx = static_cast<Eigen::Index>(orders.state_len());
    if (Np > Nc && (K.rows() != 2 || K.cols() != nx)) throw ConfigError("local gain K has the wrong shape");
    if (P.rows() != nx || P.cols() != nx) throw ConfigError("terminal weight P has the wrong shape");
}

LocalLaw MpcConfig::local_law(const NarxOrders& orders) const {
    LocalLaw law;
    law.K = K;
    law.x_bar = PredictionState::equilibrium(orders, y_bar, u_ref).as_vector();
    law.u_bar = Eigen::Vector2d(0.0, u_ref);
    return law;
}

Eigen::VectorXd MpcConfig::reference_state(const NarxOrders& orders, double y_a) const {
    return PredictionState::equilibrium(orders, y_a, u_ref).as_vector();
}

SlackValues eliminate_slacks(std::span<const double> y_traj, double y_a, std::span<const double> u2,
                             const StepBounds& bounds, const Interval& zone, const MpcWeights& w) {
    const std::size_t n = y_traj.size();
    if (bounds.y_lo.size() != n || bounds.y_hi.size() != n || u2.size() != bounds.u2_max.size()) {
        throw DomainError("slack elimination: bound lengths do not match the trajectory");
    }
    SlackValues s;
    s.hypo = std::max(0.0, zone.lo - y_a);
    s.hyper = std::max(0.0, y_a - zone.hi);
    s.min.resize(n);
    s.max.resize(n);
    s.u.resize(u2.size());
    double v_delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        s.min[j] = std::max(0.0, bounds.y_lo[j] - y_traj[j]);
        s.max[j] = std::max(0.0, y_traj[j] - bounds.y_hi[j]);
        v_delta += w.p_min * s.min[j] * s.min[j] + w.p_max * s.max[j] * s.max[j];
    }
    double v_u = 0.0;
    for (std::size_t j = 0; j < u2.size(); ++j) {
        s.u[j] = std::max(0.0, u2[j] - bounds.u2_max[j]);
        v_u += w.p_u * s.u[j] * s.u[j];
    }
    const double v_s = w.p_hyper * s.hyper * s.hyper + w.p_hypo * s.hypo * s.hypo;
    s.cost = v_s + v_delta + v_u;
    return s;
}

StepBounds step_bounds(const MpcConfig& cfg, std::span<const double> u2_max) {
    if (static_cast<int>(u2_max.size()) != cfg.Np) {
        throw DomainError("insulin bound vector must have Np entries");
    }
    StepBounds b;
    b.y_lo.resize(static_cast<std::size_t>(cfg.Np));
    b.y_hi.resize(static_cast<std::size_t>(cfg.Np));
    for (int j = 0; j < cfg.Np; ++j) {
        const Interval& set = cfg.sets.at(std::min(j, cfg.Nc));
        b.y_lo[static_cast<std::size_t>(j)] = set.lo;
        b.y_hi[static_cast<std::size_t>(j)] = set.hi;
    }
    b.u2_max.assign(u2_max.begin(), u2_max.end());
    return b;
}

namespace {

double terminal_cost(const PredictionState& terminal, const MpcConfig& cfg, double y_a) {
    const Eigen::VectorXd e = terminal.as_vector() - cfg.reference_state(terminal.orders, y_a);
    return e.dot(cfg.P * e);
}

Evaluation assemble(Rollout r, double y_a, const MpcConfig& cfg, std::span<const double> u2_max) {
    Evaluation ev;
    const MpcWeights& w = cfg.weights;
    for (int j = 0; j < cfg.Np; ++j) {
        const auto u = static_cast<std::size_t>(j);
        const double e = r.y[u] - y_a;
        if (j < cfg.Nc) {
            const double du = r.u2[u] - cfg.u_ref;
            ev.cost.V_Nc += w.Q * e * e + w.R * du * du;
        } else {
            ev.cost.V_Np += w.Q * e * e;
        }
    }
    ev.cost.V_P = terminal_cost(r.terminal, cfg, y_a);
    const StepBounds bounds = step_bounds(cfg, u2_max);
    ev.slacks = eliminate_slacks(r.y, y_a, r.u2, bounds, cfg.zone, w);
    ev.cost.V_s = w.p_hyper * ev.slacks.hyper * ev.slacks.hyper + w.p_hypo * ev.slacks.hypo * ev.slacks.hypo;
    double v_delta = 0.0;
    for (std::size_t j = 0; j < ev.slacks.min.size(); ++j) {
        v_delta += w.p_min * ev.slacks.min[j] * ev.slacks.min[j] + w.p_max * ev.slacks.max[j] * ev.slacks.max[j];
    }
    double v_u = 0.0;
    for (double d : ev.slacks.u) v_u += w.p_u * d * d;
    ev.cost.V_delta = v_delta;
    ev.cost.V_u = v_u;
    ev.cost.total = ev.cost.V_Nc + ev.cost.V_Np + ev.cost.V_s + w.lambda * ev.cost.V_P + ev.cost.V_delta +
                    ev.cost.V_u;
    ev.y_a = y_a;
    ev.rollout = std::move(r);
    return ev;
}

Rollout predict_horizon(const PredictionModel& model, const PredictionState& x0,
                        std::span<const double> u2_seq, const MpcConfig& cfg,
                        std::span<const double> u2_max) {
    if (static_cast<int>(u2_seq.size()) != cfg.Nc) {
        throw DomainError("input sequence must have Nc entries");
    }
    if (cfg.Np > cfg.Nc) {
        const LocalLaw law = cfg.local_law(model.orders());
        return rollout(model, x0, u2_seq, cfg.Np, &law, u2_max);
    }
    return rollout(model, x0, u2_seq, cfg.Np, nullptr);
}

}  // namespace

Evaluation mpc_cost(const PredictionModel& model, const PredictionState& x0,
                    std::span<const double> u2_seq, double y_a, const MpcConfig& cfg,
                    std::span<const double> u2_max) {
    return assemble(predict_horizon(model, x0, u2_seq, cfg, u2_max), y_a, cfg, u2_max);
}

double optimal_setpoint(std::span<const double> y_traj, const PredictionState& terminal,
                        const MpcConfig& cfg) {
    const MpcWeights& w = cfg.weights;
    const NarxOrders& o = terminal.orders;
    const auto ng = static_cast<Eigen::Index>(o.glucose_len());
    // x_ref = x_ref0 + y_a * g with g the glucose-block indicator.
    const Eigen::VectorXd e = terminal.as_vector() - cfg.reference_state(o, 0.0);
    const double gPg = cfg.P.topLeftCorner(ng, ng).sum();
    const double gPe = cfg.P.topRows(ng).colwise().sum().dot(e);
    double sum_y = 0.0;
    for (double y : y_traj) sum_y += y;
    const double alpha = w.Q * static_cast<double>(y_traj.size()) + w.lambda * gPg;
    const double beta = w.Q * sum_y + w.lambda * gPe;
    const double y_free = beta / alpha;
    if (y_free > cfg.zone.hi) return (beta + w.p_hyper * cfg.zone.hi) / (alpha + w.p_hyper);
    if (y_free < cfg.zone.lo) return (beta + w.p_hypo * cfg.zone.lo) / (alpha + w.p_hypo);
    return y_free;
}

Evaluation reduced_cost(const PredictionModel& model, const PredictionState& x0,
                        std::span<const double> u2_seq, const MpcConfig& cfg,
                        std::span<const double> u2_max) {
    Rollout r = predict_horizon(model, x0, u2_seq, cfg, u2_max);
    const double y_a = optimal_setpoint(r.y, r.terminal, cfg);
    return assemble(std::move(r), y_a, cfg, u2_max);
}

namespace {

struct SearchResult {
    std::vector<double> u;
    Evaluation eval;
    int evaluations = 0;
};

SearchResult pattern_search(const PredictionModel& model, const PredictionState& x0, const MpcConfig& cfg,
                            std::span<const double> u2_max, std::vector<double> start) {
    const SolverOptions& opt = cfg.solver;
    SearchResult res;
    res.u = std::move(start);
    res.eval = reduced_cost(model, x0, res.u, cfg, u2_max);
    res.evaluations = 1;
    double step = opt.initial_step;
    std::vector<double> cand;
    while (step >= opt.min_step && res.evaluations < opt.max_evaluations) {
        bool improved = false;
        for (std::size_t i = 0; i < res.u.size() && res.evaluations < opt.max_evaluations; ++i) {
            for (const double dir : {1.0, -1.0}) {
                cand = res.u;
                cand[i] = std::clamp(res.u[i] + dir * step, 0.0, cfg.u2_lim);
                if (cand[i] == res.u[i]) continue;
                Evaluation ev = reduced_cost(model, x0, cand, cfg, u2_max);
                ++res.evaluations;
                if (ev.cost.total < res.eval.cost.total) {
                    res.u = cand;
                    res.eval = std::move(ev);
                    improved = true;
                    break;
                }
                if (res.evaluations >= opt.max_evaluations) break;
            }
        }
        if (!improved) step *= 0.5;
    }
    return res;
}

}  // namespace

ControlSolution solve(const PredictionModel& model, const PredictionState& x0, const MpcConfig& cfg,
                      std::span<const double> u2_max, std::span<const double> warm_start) {
    const auto nc = static_cast<std::size_t>(cfg.Nc);
    std::vector<double> warm(nc, cfg.u_ref);
    for (std::size_t i = 0; i < nc && i < warm_start.size(); ++i) {
        warm[i] = std::clamp(warm_start[i], 0.0, cfg.u2_lim);
    }
    const std::vector<double> starts[3] = {warm, std::vector<double>(nc, std::min(cfg.u_ref, cfg.u2_lim)),
                                           std::vector<double>(nc, 0.0)};
    std::optional<SearchResult> best;
    double warm_cost = 0.0;
    int evaluations = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        SearchResult r = pattern_search(model, x0, cfg, u2_max, starts[s]);
        evaluations += r.evaluations;
        if (!std::isfinite(r.eval.cost.total)) {
            throw NumericError("MPC cost is not finite");
        }
        if (s == 0) {
            // First evaluation of the first start is the warm start itself.
            warm_cost = reduced_cost(model, x0, warm, cfg, u2_max).cost.total;
        }
        if (!best || r.eval.cost.total < best->eval.cost.total) best = std::move(r);
    }

    ControlSolution sol;
    sol.u2_seq = best->u;
    sol.y_a = best->eval.y_a;
    sol.slacks = best->eval.slacks;
    sol.cost = best->eval.cost;
    sol.y_pred = best->eval.rollout.y;
    sol.u2_max.assign(u2_max.begin(), u2_max.end());
    sol.warm_start_cost = warm_cost;
    sol.evaluations = evaluations;
    return sol;
}

PredictionState state_from_history(const ControllerHistory& h, const NarxOrders& orders) {
    if (h.cgm.empty()) throw LengthError("controller history is empty");
    const auto k = static_cast<long>(h.cgm.size()) - 1;
    if (k < orders.max_lag()) throw LengthError("not enough history to build the state");
    if (static_cast<long>(h.u1.size()) < k || static_cast<long>(h.u2.size()) < k) {
        throw LengthError("input history shorter than the glucose history");
    }
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(orders.state_len()));
    for (int i = 0; i <= orders.na; ++i) x.push_back(h.cgm[static_cast<std::size_t>(k - i)]);
    for (int i = 1; i <= orders.nb; ++i) x.push_back(h.u1[static_cast<std::size_t>(k - i)]);
    for (int i = 1; i <= orders.nc; ++i) x.push_back(h.u2[static_cast<std::size_t>(k - i)]);
    return {orders, std::move(x)};
}

MpcController::MpcController(PredictionModel model, MpcConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)) {
    cfg_.validate(model_.orders());
}

std::vector<double> MpcController::insulin_bounds(const ControllerHistory& history) const {
    std::vector<double> bounds(static_cast<std::size_t>(cfg_.Np), cfg_.u2_lim);
    if (!cfg_.iob_constraints || history.cgm.empty()) return bounds;
    const auto k = static_cast<long>(history.cgm.size()) - 1;
    const std::vector<double> iob = iob_horizon(history.boluses, k, cfg_.Np, cfg_.curve);
    for (std::size_t j = 0; j < bounds.size(); ++j) {
        bounds[j] = basal_upper_bound(iob[j], cfg_.u_ref, cfg_.u2_lim);
    }
    return bounds;
}

double MpcController::control_step(const ControllerHistory& history) {
    const auto k = static_cast<long>(history.cgm.size()) - 1;
    if (k < model_.orders().max_lag()) {
        return cfg_.u_ref;
    }
    const PredictionState x0 = state_from_history(history, model_.orders());
    const std::vector<double> u2_max = insulin_bounds(history);

    std::vector<double> warm(static_cast<std::size_t>(cfg_.Nc), cfg_.u_ref);
    if (last_) {
        for (std::size_t i = 1; i < last_->u2_seq.size(); ++i) warm[i - 1] = last_->u2_seq[i];
    }
    ControlSolution sol = solve(model_, x0, cfg_, u2_max, warm);
    ++solves_;
    if (sol.cost.total > sol.warm_start_cost) ++violations_;
    const double command = sol.u2_seq.front();
    last_ = std::move(sol);
    return command;
}

void MpcController::reset() {
    last_.reset();
    violations_ = 0;
    solves_ = 0;
}

}  // namespace chokimpc
