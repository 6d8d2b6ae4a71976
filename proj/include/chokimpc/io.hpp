#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "chokimpc/fit.hpp"
#include "chokimpc/holder.hpp"
#include "chokimpc/metrics.hpp"
#include "chokimpc/mpc.hpp"
#include "chokimpc/narx_data.hpp"
#include "chokimpc/patient.hpp"
#include "chokimpc/scenario.hpp"

namespace chokimpc {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Shortest round-trip text for `v`. CHOKIMPC_PRECISION=<digits> switches to %.<digits>g.
std::string format_number(double v);

std::string read_text(const fs::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_text_atomic(const fs::path& path, const std::string& text);

Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);

// Signal logs: t_min,y_mgdl,u1_g,u2_pmol[,segment]
std::string signal_log_to_csv(const SignalLog& log);
SignalLog signal_log_from_csv(const std::string& text);
void save_signal_log(const fs::path& path, const SignalLog& log);
SignalLog load_signal_log(const fs::path& path);

// Regressor datasets: w_0..w_{nw-1},y_next plus a JSON sidecar (<path>.json).
std::string dataset_to_csv(const RegressorDataset& ds);
RegressorDataset dataset_from_csv(const std::string& text, const NarxOrders& orders);
Json dataset_sidecar(const RegressorDataset& ds);
void save_dataset(const fs::path& path, const RegressorDataset& ds);
RegressorDataset load_dataset(const fs::path& path);

Json to_json(const NarxOrders& o);
NarxOrders orders_from_json(const Json& j);

Json to_json(const HolderParams& p, const FitBounds& bounds = {});
HolderParams holder_params_from_json(const Json& j);
FitBounds fit_bounds_from_json(const Json& j);

Json to_json(const PatientParams& p);
PatientParams patient_from_json(const Json& j);
PatientParams load_patient(const fs::path& path);

Json to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);
Scenario load_scenario(const fs::path& path);

Json to_json(const Excitation& e);
Excitation excitation_from_json(const Json& j);
Excitation load_excitation(const fs::path& path);

Json to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, const char* field);

Json to_json(const TightenedSets& s);
TightenedSets tightened_sets_from_json(const Json& j);

Json to_json(const MpcConfig& cfg);
MpcConfig mpc_config_from_json(const Json& j);

/// Everything needed to rebuild a controller.
struct ControllerBundle {
    HolderParams params;
    fs::path dataset;  // relative paths resolve against the bundle's directory
    MpcConfig config;
    double epsilon = 1.0;
    double dare_residual = 0.0;
};

Json to_json(const ControllerBundle& b);
ControllerBundle controller_bundle_from_json(const Json& j);
void save_controller(const fs::path& path, const ControllerBundle& b);
ControllerBundle load_controller(const fs::path& path);
/// Loads the bundle and its dataset and builds the controller.
MpcController make_controller(const fs::path& path);

// Traces: t_min,bg,cgm,basal_cmd,basal_act,bolus,meal_true,meal_est,iob
std::string trace_to_csv(const GlucoseTrace& t);
GlucoseTrace trace_from_csv(const std::string& text);
void save_trace(const fs::path& path, const GlucoseTrace& t);
GlucoseTrace load_trace(const fs::path& path);

Json to_json(const MetricsReport& r);

}  // namespace chokimpc
