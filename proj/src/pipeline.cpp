#include "chokimpc/pipeline.hpp"

#include "chokimpc/errors.hpp"
#include "chokimpc/tightening.hpp"

namespace chokimpc {

FitOutcome fit_pipeline(const SignalLog& log, const FitConfig& config) {
    config.orders.validate();
    config.bounds.validate();
    const RegressorDataset all = build_regressors(log, config.orders);
    auto [train, test] = split_train_test(all, config.train_fraction, config.seed);

    FitOutcome out;
    out.lacki = lacki_estimate(train);
    const double l0 = out.lacki.L;
    const HolderParams init = HolderParams::from_blocks(config.orders, l0, l0, l0);
    out.fit = fit_hyperparams(train, test, config.bounds, init, config.options);
    out.params = out.fit.params;
    out.params.mu = validation_radius(out.params, train, test, config.quantile);
    out.train = std::make_shared<const RegressorDataset>(std::move(train));
    out.test = std::make_shared<const RegressorDataset>(std::move(test));
    return out;
}

ControllerDesignReport design_controller(const PredictionModel& model, double u_ref,
                                         const ControllerDesign& design) {
    if (design.Np < 1) throw ConfigError("field 'Np' must be >= 1");
    if (!(u_ref >= 0.0 && u_ref <= kBasalLimit)) throw ConfigError("field 'u_ref' outside [0, 500] pmol");
    const NarxOrders& orders = model.orders();
    ControllerDesignReport r;
    MpcConfig& cfg = r.config;
    cfg.Np = design.Np;
    cfg.sets = tightened_sets(design.base, reachability_radii(model.predictor().params(), design.Np));
    cfg.Nc = select_control_horizon(cfg.sets, design.min_width);
    cfg.u_ref = u_ref;
    cfg.y_bar = design.y_bar;
    cfg.weights = design.weights;
    cfg.iob_constraints = design.iob_constraints;
    cfg.solver = design.solver;

    if (design.epsilons.empty()) throw ConfigError("field 'epsilon' needs at least one value");
    const PredictionState x_bar = PredictionState::equilibrium(orders, design.y_bar, u_ref);
    const LqrWeights w = default_lqr_weights(orders, design.lqr_output_weight, design.lqr_input_weight);
    std::string failures;
    bool found = false;
    for (double eps : design.epsilons) {
        LinearModel lin = linearize(model, x_bar, Eigen::Vector2d(0.0, u_ref), eps);
        try {
            TerminalPair t = solve_dlqr(lin.A, lin.B, w.Q, w.R);
            const double rho = spectral_radius(lin.A - lin.B * t.K);
            if (rho < 1.0) {
                r.linear = std::move(lin);
                r.terminal = std::move(t);
                r.spectral_radius = rho;
                found = true;
                break;
            }
            failures += " eps=" + format_number(eps) + ": spectral radius " + format_number(rho) + ";";
        } catch (const NumericError& e) {
            failures += " eps=" + format_number(eps) + ": " + e.what() + ";";
        }
    }
    if (!found) throw NumericError("no stabilising terminal pair:" + failures);
    cfg.K = r.terminal.K;
    cfg.P = r.terminal.P;
    cfg.validate(orders);
    return r;
}

}  // namespace chokimpc
