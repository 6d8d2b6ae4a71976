#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "chokimpc/errors.hpp"
#include "chokimpc/io.hpp"
#include "chokimpc/pipeline.hpp"
#include "chokimpc/scenario.hpp"
#include "chokimpc/version.hpp"

using namespace chokimpc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

/// Runtime failure that still produced partial outputs.
struct RuntimeFault : Error {
    using Error::Error;
};

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string("flag '") + flag + "': cannot parse '" + item + "'");
        }
    }
    return out;
}

class Manifest {
public:
    Manifest(std::string command, fs::path path) : path_(std::move(path)) {
        j_["tool"] = "chokimpc";
        j_["version"] = kVersion;
        j_["subcommand"] = std::move(command);
        j_["inputs"] = Json::object();
        j_["outputs"] = Json::array();
        j_["seeds"] = Json::object();
        j_["parameters"] = Json::object();
    }
    void input(const std::string& name, const fs::path& p) { j_["inputs"][name] = p.generic_string(); }
    void output(const fs::path& p) { j_["outputs"].push_back(p.generic_string()); }
    void seed(const std::string& name, std::uint64_t s) { j_["seeds"][name] = s; }
    Json& params() { return j_["parameters"]; }
    Json& root() { return j_; }
    void write() const { write_json(path_, j_); }

private:
    fs::path path_;
    Json j_;
};

fs::path manifest_for(const fs::path& out) {
    fs::path m = out;
    m += ".manifest.json";
    return m;
}

// gen-data

struct GenDataArgs {
    std::string patient, excitation, out;
    std::uint64_t seed = 1;
};

void run_gen_data(const GenDataArgs& a) {
    const PatientParams patient = load_patient(a.patient);
    const Excitation ex = a.excitation.empty() ? Excitation::standard() : load_excitation(a.excitation);
    SignalLog log;
    try {
        log = generate_training_data(patient, ex, a.seed);
    } catch (const SimulationFault& e) {
        throw RuntimeFault(std::string("simulation fault: ") + e.what());
    }
    save_signal_log(a.out, log);
    Manifest m("gen-data", manifest_for(a.out));
    m.input("patient", a.patient);
    if (!a.excitation.empty()) m.input("excitation", a.excitation);
    m.seed("seed", a.seed);
    m.params()["samples"] = log.size();
    m.params()["segments"] = ex.segments();
    m.output(a.out);
    m.write();
    std::cout << "wrote " << log.size() << " samples to " << a.out << "\n";
}

// fit

struct FitArgs {
    std::string data, orders = "5,9,3", out;
    std::uint64_t seed = 1;
    double quantile = 0.9;
    double train_fraction = 0.8;
};

NarxOrders parse_orders(const std::string& text) {
    const std::vector<double> v = parse_list(text, "--orders");
    if (v.size() != 3) throw ConfigError("flag '--orders' needs three integers na,nb,nc");
    NarxOrders o{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
    for (std::size_t i = 0; i < 3; ++i) {
        if (v[i] != static_cast<double>(static_cast<int>(v[i]))) {
            throw ConfigError("flag '--orders' needs integers");
        }
    }
    try {
        o.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("flag '--orders': ") + e.what());
    }
    return o;
}

void run_fit(const FitArgs& a) {
    const SignalLog log = load_signal_log(a.data);
    FitConfig cfg;
    cfg.orders = parse_orders(a.orders);
    cfg.seed = a.seed;
    cfg.quantile = a.quantile;
    cfg.train_fraction = a.train_fraction;
    const FitOutcome fo = fit_pipeline(log, cfg);

    const fs::path out(a.out);
    fs::path train_path = out;
    train_path.replace_extension(".train.csv");
    fs::path side = train_path;
    side += ".json";
    save_dataset(train_path, *fo.train);

    Json j = to_json(fo.params, cfg.bounds);
    j["dataset"] = train_path.filename().generic_string();
    j["lacki"] = fo.lacki.L;
    j["consistent"] = fo.fit.consistent;
    j["relaxation"] = fo.fit.relaxation;
    j["mse"] = fo.fit.mse;
    j["init_mse"] = fo.fit.init_mse;
    j["quantile"] = cfg.quantile;
    j["rows"] = {{"train", fo.train->size()}, {"test", fo.test->size()}};
    write_json(out, j);

    Manifest m("fit", manifest_for(out));
    m.input("data", a.data);
    m.seed("split", a.seed);
    m.params()["orders"] = to_json(cfg.orders);
    m.params()["quantile"] = cfg.quantile;
    m.params()["train_fraction"] = cfg.train_fraction;
    m.output(out);
    m.output(train_path);
    m.output(side);
    m.write();
    if (!fo.fit.consistent) {
        std::cerr << "warning: training data inconsistent within bounds; relaxed by "
                  << format_number(fo.fit.relaxation) << " mg/dL\n";
    }
    std::cout << "L = [" << format_number(fo.params.block_L[0]) << ", " << format_number(fo.params.block_L[1])
              << ", " << format_number(fo.params.block_L[2]) << "], mu = " << format_number(fo.params.mu) << "\n";
}

// tighten

struct TightenArgs {
    std::string params, base = "55,300", out, patient;
    int N = 12;
    double min_width = 150.0;
    std::optional<double> u_ref;
    std::optional<double> epsilon;
    double Q = 1.0;
    bool no_iob = false;
};

void run_tighten(const TightenArgs& a) {
    const fs::path params_path(a.params);
    const Json pj = read_json(params_path);
    HolderParams hp;
    try {
        hp = holder_params_from_json(pj);
    } catch (const ParseError& e) {
        throw ConfigError("'" + a.params + "': " + e.what());
    }
    if (!pj.contains("dataset")) throw ConfigError("'" + a.params + "': missing field 'dataset'");
    const fs::path data_rel = pj.at("dataset").get<std::string>();
    const fs::path data_path = data_rel.is_relative() ? params_path.parent_path() / data_rel : data_rel;

    double u_ref = 0.0;
    if (a.u_ref) {
        u_ref = *a.u_ref;
    } else if (!a.patient.empty()) {
        u_ref = load_patient(a.patient).u_ref();
    } else {
        throw ConfigError("tighten needs --patient or --u-ref");
    }
    const std::vector<double> base = parse_list(a.base, "--base");
    if (base.size() != 2 || !(base[0] < base[1])) throw ConfigError("flag '--base' needs lo,hi with lo < hi");

    ControllerDesign d;
    d.base = {base[0], base[1]};
    d.Np = a.N;
    d.min_width = a.min_width;
    d.lqr_output_weight = a.Q;
    d.weights.Q = a.Q;
    d.iob_constraints = !a.no_iob;
    if (a.epsilon) d.epsilons = {*a.epsilon};

    auto ds = std::make_shared<const RegressorDataset>(load_dataset(data_path));
    const PredictionModel model(ds, hp);
    ControllerDesignReport rep;
    try {
        rep = design_controller(model, u_ref, d);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }

    const fs::path out(a.out);
    ControllerBundle b;
    b.params = hp;
    b.dataset = fs::relative(fs::absolute(data_path), fs::absolute(out).parent_path());
    b.config = rep.config;
    b.epsilon = rep.linear.epsilon;
    b.dare_residual = rep.terminal.residual;
    save_controller(out, b);

    Manifest m("tighten", manifest_for(out));
    m.input("params", a.params);
    m.input("dataset", data_path);
    if (!a.patient.empty()) m.input("patient", a.patient);
    m.params()["base"] = base;
    m.params()["N"] = a.N;
    m.params()["min_width"] = a.min_width;
    m.params()["u_ref"] = u_ref;
    m.params()["epsilon"] = rep.linear.epsilon;
    m.params()["Nc"] = rep.config.Nc;
    m.params()["spectral_radius"] = rep.spectral_radius;
    m.output(out);
    m.write();
    std::cout << "Nc = " << rep.config.Nc << ", epsilon = " << format_number(rep.linear.epsilon)
              << ", spectral radius = " << format_number(rep.spectral_radius) << "\n";
}

// simulate

struct SimulateArgs {
    std::vector<std::string> patients, controllers;
    std::string scenario, out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool no_iob = false;
    bool open_loop = false;
};

void run_simulate(const SimulateArgs& a) {
    if (a.patients.empty()) throw ConfigError("simulate needs at least one --patient");
    if (!a.open_loop && a.controllers.size() != a.patients.size()) {
        throw ConfigError("simulate needs one --controller per --patient");
    }
    if (a.jobs < 1) throw ConfigError("flag '--jobs' must be >= 1");
    Scenario scenario = load_scenario(a.scenario);
    if (a.seed) scenario.seed = *a.seed;

    std::vector<PatientParams> patients;
    std::vector<std::optional<MpcController>> controllers(a.patients.size());
    for (std::size_t i = 0; i < a.patients.size(); ++i) {
        patients.push_back(load_patient(a.patients[i]));
        if (!a.open_loop) {
            controllers[i].emplace(make_controller(a.controllers[i]));
            if (a.no_iob) {
                MpcConfig cfg = controllers[i]->config();
                cfg.iob_constraints = false;
                controllers[i].emplace(controllers[i]->model(), cfg);
            }
        }
    }

    const bool single = patients.size() == 1;
    const fs::path out(a.out);
    std::vector<fs::path> trace_paths;
    for (const auto& p : patients) trace_paths.push_back(single ? out : out / (p.name + ".csv"));

    std::vector<ClosedLoopResult> results(patients.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::string first_error;
    auto worker = [&]() {
        for (std::size_t i = next++; i < patients.size(); i = next++) {
            try {
                Scenario s = scenario;
                s.seed = derive_seed(scenario.seed, i);
                MpcController* c = controllers[i] ? &*controllers[i] : nullptr;
                results[i] = run_closed_loop(patients[i], c, s);
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mutex);
                if (first_error.empty()) first_error = patients[i].name + ": " + e.what();
            }
        }
    };
    const int n_threads = std::min<int>(a.jobs, static_cast<int>(patients.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (!first_error.empty()) throw RuntimeFault(first_error);

    Manifest m("simulate", single ? manifest_for(out) : out / "manifest.json");
    m.input("scenario", a.scenario);
    m.seed("scenario", scenario.seed);
    m.params()["jobs"] = a.jobs;
    m.params()["iob_constraints"] = !a.no_iob;
    m.params()["open_loop"] = a.open_loop;
    Json runs = Json::array();
    std::string faults;
    for (std::size_t i = 0; i < patients.size(); ++i) {
        save_trace(trace_paths[i], results[i].trace);
        m.output(trace_paths[i]);
        Json r{{"patient", a.patients[i]},
               {"seed", derive_seed(scenario.seed, i)},
               {"samples", results[i].trace.size()},
               {"solves", results[i].solves},
               {"monotonicity_violations", results[i].monotonicity_violations}};
        if (!a.open_loop) r["controller"] = a.controllers[i];
        if (results[i].fault) {
            r["fault"] = *results[i].fault;
            faults += patients[i].name + ": " + *results[i].fault + "\n";
        }
        runs.push_back(r);
        std::cout << patients[i].name << ": " << results[i].trace.size() << " samples -> "
                  << trace_paths[i].generic_string() << "\n";
    }
    m.params()["runs"] = runs;
    m.write();
    if (!faults.empty()) throw RuntimeFault("trace truncated\n" + faults);
}

// metrics

struct MetricsArgs {
    std::string trace, out;
};

void run_metrics(const MetricsArgs& a) {
    const GlucoseTrace t = load_trace(a.trace);
    if (t.empty()) throw ConfigError("'" + a.trace + "': trace has no samples");
    const Json j = to_json(compute_metrics(t));
    std::cout << j.dump(2) << "\n";
    if (!a.out.empty()) {
        write_json(a.out, j);
        Manifest m("metrics", manifest_for(a.out));
        m.input("trace", a.trace);
        m.output(a.out);
        m.write();
    }
}

// plot

struct PlotArgs {
    std::vector<std::string> traces;
    std::string out_dir;
};

std::string svg_series(const std::vector<GlucoseTrace>& traces, bool glucose) {
    constexpr double W = 960, H = 400, L = 60, R = 20, T = 20, B = 40;
    double t_max = 0.0, v_max = glucose ? 400.0 : 0.0;
    const double v_min = glucose ? 40.0 : 0.0;
    for (const auto& t : traces) {
        if (!t.empty()) t_max = std::max(t_max, t.t_min.back());
        if (!glucose) {
            for (double v : t.basal_cmd) v_max = std::max(v_max, v);
        }
    }
    if (t_max <= 0.0) t_max = 1.0;
    if (!glucose) v_max = std::max(10.0, v_max * 1.05);
    auto X = [&](double t) { return L + (W - L - R) * t / t_max; };
    auto Y = [&](double v) { return T + (H - T - B) * (1.0 - (std::clamp(v, v_min, v_max) - v_min) / (v_max - v_min)); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (glucose) {
        s += "<rect class=\"target-band\" x=\"" + num(L) + "\" y=\"" + num(Y(180)) + "\" width=\"" + num(W - L - R) +
             "\" height=\"" + num(Y(70) - Y(180)) + "\" fill=\"#2ca02c\" fill-opacity=\"0.15\"/>\n";
    }
    s += "<line x1=\"" + num(L) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(W - R) + "\" y2=\"" + num(H - B) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) + "\" y2=\"" + num(H - B) +
         "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = v_min + (v_max - v_min) * i / 4.0;
        s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(Y(v) + 4) + "\" font-size=\"11\" text-anchor=\"end\">" +
             num(v) + "</text>\n";
    }
    for (double h = 0; h * 60.0 <= t_max; h += 12) {
        s += "<text x=\"" + num(X(h * 60.0)) + "\" y=\"" + num(H - B + 16) +
             "\" font-size=\"11\" text-anchor=\"middle\">" + num(h) + " h</text>\n";
    }
    s += "<text x=\"" + num(L) + "\" y=\"14\" font-size=\"12\">" +
         std::string(glucose ? "BG (mg/dL)" : "basal command (pmol)") + "</text>\n";
    for (std::size_t k = 0; k < traces.size(); ++k) {
        const auto& t = traces[k];
        const auto& v = glucose ? t.bg : t.basal_cmd;
        s += "<polyline class=\"series\" fill=\"none\" stroke-width=\"1\" stroke=\"" +
             std::string(colors[k % std::size(colors)]) + "\" points=\"";
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) s += ' ';
            s += num(X(t.t_min[i])) + ',' + num(Y(v[i]));
        }
        s += "\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

void run_plot(const PlotArgs& a) {
    std::vector<GlucoseTrace> traces;
    for (const auto& p : a.traces) traces.push_back(load_trace(p));
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    write_text_atomic(dir / "bg.svg", svg_series(traces, true));
    write_text_atomic(dir / "insulin.svg", svg_series(traces, false));
    Manifest m("plot", dir / "manifest.json");
    for (std::size_t i = 0; i < a.traces.size(); ++i) m.input("trace_" + std::to_string(i), a.traces[i]);
    m.output(dir / "bg.svg");
    m.output(dir / "insulin.svg");
    m.write();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CHoKI-based zone MPC for basal insulin"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* g = app.add_subcommand("gen-data", "Open-loop excitation campaign");
    g->add_option("--patient", gen.patient, "Patient JSON")->required();
    g->add_option("--excitation", gen.excitation, "Excitation JSON (built-in sweep when omitted)");
    g->add_option("--out", gen.out, "Signal log CSV")->required();
    g->add_option("--seed", gen.seed, "Random seed");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit the Hölder constants and the validation radius");
    f->add_option("--data", fit.data, "Signal log CSV")->required();
    f->add_option("--orders", fit.orders, "na,nb,nc");
    f->add_option("--out", fit.out, "Parameter JSON")->required();
    f->add_option("--seed", fit.seed, "Train/test split seed");
    f->add_option("--quantile", fit.quantile, "Validation-error quantile for mu");
    f->add_option("--train-fraction", fit.train_fraction, "Share of rows used for training");

    TightenArgs tig;
    auto* t = app.add_subcommand("tighten", "Tightened sets, horizon and terminal ingredients");
    t->add_option("--params", tig.params, "Parameter JSON from fit")->required();
    t->add_option("--base", tig.base, "Base output set lo,hi (mg/dL)");
    t->add_option("--N", tig.N, "Prediction horizon");
    t->add_option("--min-width", tig.min_width, "Minimum width of a tightened set (mg/dL)");
    t->add_option("--out", tig.out, "Controller JSON")->required();
    t->add_option("--patient", tig.patient, "Patient JSON (source of u_ref)");
    t->add_option("--u-ref", tig.u_ref, "Reference basal (pmol)");
    t->add_option("--epsilon", tig.epsilon, "Finite-difference step (default: first stabilising of 1,5,10,20)");
    t->add_option("--Q", tig.Q, "Output weight");
    t->add_flag("--no-iob", tig.no_iob, "Disable the IOB basal bound");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Closed-loop simulation");
    s->add_option("--patient", sim.patients, "Patient JSON (repeatable)")->required();
    s->add_option("--controller", sim.controllers, "Controller JSON (one per patient)");
    s->add_option("--scenario", sim.scenario, "Scenario JSON")->required();
    s->add_option("--out", sim.out, "Trace CSV, or a directory for several patients")->required();
    s->add_option("--seed", sim.seed, "Override the scenario seed");
    s->add_option("--jobs", sim.jobs, "Parallel simulations");
    s->add_flag("--no-iob", sim.no_iob, "Disable the IOB basal bound");
    s->add_flag("--open-loop", sim.open_loop, "Hold u_ref instead of running the controller");

    MetricsArgs met;
    auto* m = app.add_subcommand("metrics", "Glycemic metrics of a trace");
    m->add_option("--trace", met.trace, "Trace CSV")->required();
    m->add_option("--out", met.out, "Report JSON");

    PlotArgs plot;
    auto* p = app.add_subcommand("plot", "BG and basal SVG figures");
    p->add_option("--trace", plot.traces, "Trace CSV (repeatable)")->required();
    p->add_option("--out-dir", plot.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*g) run_gen_data(gen);
        if (*f) run_fit(fit);
        if (*t) run_tighten(tig);
        if (*s) run_simulate(sim);
        if (*m) run_metrics(met);
        if (*p) run_plot(plot);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
