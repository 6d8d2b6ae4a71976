#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "chokimpc/errors.hpp"
#include "chokimpc/io.hpp"
#include "chokimpc/pipeline.hpp"
#include "chokimpc/version.hpp"

namespace py = pybind11;
using namespace chokimpc;

namespace {

RegressorDataset make_dataset(const NarxOrders& orders, const std::vector<std::vector<double>>& w,
                              const std::vector<double>& y) {
    if (w.size() != y.size()) throw LengthError("regressor and output counts differ");
    RegressorDataset ds(orders);
    for (std::size_t i = 0; i < w.size(); ++i) ds.add_row(w[i], y[i]);
    return ds;
}

py::dict metrics_dict(const MetricsReport& r) {
    return py::module_::import("json").attr("loads")(to_json(r).dump());
}

}  // namespace

PYBIND11_MODULE(_chokimpc, m) {
    m.attr("__version__") = kVersion;

    static py::exception<Error> base_error(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());
    py::register_exception<ParseError>(m, "ParseError", base_error.ptr());
    py::register_exception<DomainError>(m, "DomainError", base_error.ptr());
    py::register_exception<NumericError>(m, "NumericError", base_error.ptr());
    py::register_exception<LengthError>(m, "LengthError", base_error.ptr());

    py::class_<NarxOrders>(m, "NarxOrders")
        .def(py::init([](int na, int nb, int nc) {
                 NarxOrders o{na, nb, nc};
                 o.validate();
                 return o;
             }),
             py::arg("na"), py::arg("nb"), py::arg("nc"))
        .def_readonly("na", &NarxOrders::na)
        .def_readonly("nb", &NarxOrders::nb)
        .def_readonly("nc", &NarxOrders::nc)
        .def_property_readonly("regressor_len", &NarxOrders::regressor_len)
        .def_property_readonly("state_len", &NarxOrders::state_len);

    py::class_<HolderParams>(m, "HolderParams")
        .def(py::init(&HolderParams::from_blocks), py::arg("orders"), py::arg("La"), py::arg("Lb"),
             py::arg("Lc"), py::arg("exponent") = 1.0, py::arg("mu") = 0.0)
        .def_readonly("orders", &HolderParams::orders)
        .def_readonly("block_L", &HolderParams::block_L)
        .def_readonly("L", &HolderParams::L)
        .def_readonly("P", &HolderParams::P)
        .def_readwrite("mu", &HolderParams::mu);

    py::class_<RegressorDataset, std::shared_ptr<RegressorDataset>>(m, "RegressorDataset")
        .def(py::init(&make_dataset), py::arg("orders"), py::arg("w"), py::arg("y"))
        .def("__len__", &RegressorDataset::size)
        .def_property_readonly("width", &RegressorDataset::width)
        .def("row", [](const RegressorDataset& d, std::size_t i) {
            if (i >= d.size()) throw py::index_error();
            auto r = d.row(i);
            return std::vector<double>(r.begin(), r.end());
        })
        .def("output", [](const RegressorDataset& d, std::size_t i) {
            if (i >= d.size()) throw py::index_error();
            return d.output(i);
        });

    m.def("holder_distance",
          [](const std::vector<double>& d, const std::vector<double>& L, const std::vector<double>& P) {
              return holder_distance(d, L, P);
          },
          py::arg("d_abs"), py::arg("L"), py::arg("P"));
    m.def("predict",
          [](const std::vector<double>& q, const HolderParams& p, const RegressorDataset& ds) {
              return predict(q, p, ds);
          },
          py::arg("q"), py::arg("params"), py::arg("dataset"));
    m.def("lacki_estimate", [](const RegressorDataset& ds) { return lacki_estimate(ds).L; });
    m.def("lower_quantile", &lower_quantile, py::arg("values"), py::arg("quantile"));
    m.def("reachability_radii", &reachability_radii, py::arg("params"), py::arg("N"));
    m.def("tightened_sets",
          [](double lo, double hi, const std::vector<double>& radii) {
              std::vector<std::pair<double, double>> out;
              for (const auto& s : tightened_sets({lo, hi}, radii).sets) out.emplace_back(s.lo, s.hi);
              return out;
          },
          py::arg("lo"), py::arg("hi"), py::arg("radii"));
    m.def("control_horizon",
          [](double lo, double hi, const std::vector<double>& radii, double min_width) {
              return select_control_horizon(tightened_sets({lo, hi}, radii), min_width);
          },
          py::arg("lo"), py::arg("hi"), py::arg("radii"), py::arg("min_width") = 150.0);
    m.def("solve_dlqr",
          [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
             const Eigen::MatrixXd& R) {
              const TerminalPair t = solve_dlqr(A, B, Q, R);
              return py::make_tuple(t.K, t.P, t.residual);
          },
          py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"));
    m.def("estimate_iob",
          [](const std::vector<std::pair<long, double>>& boluses, long k, double dia_hours) {
              std::vector<BolusRecord> h;
              for (const auto& [t, d] : boluses) h.push_back({t, d});
              return estimate_iob(h, k, InsulinActionCurve{dia_hours});
          },
          py::arg("boluses"), py::arg("k"), py::arg("dia_hours") = 6.0);
    m.def("basal_upper_bound", &basal_upper_bound, py::arg("iob"), py::arg("u_ref"),
          py::arg("u2_lim") = 500.0);
    m.def("gri",
          [](double p1, double p2, double p3, double p4) {
              return gri(TirReport{p1, p2, 100.0 - p1 - p2 - p3 - p4, p3, p4});
          },
          py::arg("below_54"), py::arg("from_54_to_70"), py::arg("from_180_to_250"), py::arg("above_250"));
    m.def("tir",
          [](const std::vector<double>& bg) {
              const TirReport r = tir(bg);
              return std::vector<double>{r.below_54, r.from_54_to_70, r.in_range, r.from_180_to_250,
                                         r.above_250};
          },
          py::arg("bg"));
    m.def("cvga_zone", [](double lo, double hi) { return to_string(cvga(lo, hi).zone); }, py::arg("min_bg"),
          py::arg("max_bg"));

    m.def("patient_u_ref", [](const fs::path& p) { return load_patient(p).u_ref(); }, py::arg("patient"));
    m.def("generate_training_data",
          [](const fs::path& patient, std::uint64_t seed, std::optional<fs::path> excitation,
             std::optional<fs::path> out) {
              const Excitation ex = excitation ? load_excitation(*excitation) : Excitation::standard();
              const SignalLog log = generate_training_data(load_patient(patient), ex, seed);
              if (out) save_signal_log(*out, log);
              return log.size();
          },
          py::arg("patient"), py::arg("seed") = 1, py::arg("excitation") = std::nullopt,
          py::arg("out") = std::nullopt);
    m.def("simulate",
          [](const fs::path& patient, const fs::path& controller, const fs::path& scenario,
             std::optional<std::uint64_t> seed, bool iob) {
              MpcController c = make_controller(controller);
              if (!iob) {
                  MpcConfig cfg = c.config();
                  cfg.iob_constraints = false;
                  c = MpcController(c.model(), cfg);
              }
              Scenario s = load_scenario(scenario);
              if (seed) s.seed = *seed;
              py::gil_scoped_release release;
              const ClosedLoopResult r = run_closed_loop(load_patient(patient), &c, s);
              py::gil_scoped_acquire acquire;
              py::dict out;
              out["bg"] = r.trace.bg;
              out["basal"] = r.trace.basal_cmd;
              out["fault"] = r.fault;
              out["metrics"] = r.trace.empty() ? py::dict() : metrics_dict(compute_metrics(r.trace));
              return out;
          },
          py::arg("patient"), py::arg("controller"), py::arg("scenario"), py::arg("seed") = std::nullopt,
          py::arg("iob") = true);
    m.def("trace_metrics", [](const fs::path& trace) { return metrics_dict(compute_metrics(load_trace(trace))); },
          py::arg("trace"));
}
