#include "chokimpc/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "chokimpc/errors.hpp"

namespace chokimpc {

namespace {

int precision_override() {
    const char* env = std::getenv("CHOKIMPC_PRECISION");
    if (!env || !*env) return 0;
    const int p = std::atoi(env);
    return (p >= 1 && p <= 17) ? p : 0;
}

double parse_double(std::string_view s, std::size_t line, const std::string& field) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError("line " + std::to_string(line) + ", field '" + field + "': not a number: '" +
                         std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

/// Column-major numeric table parsed from CSV text.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    [[nodiscard]] int find(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
    [[nodiscard]] const std::vector<double>& column(const std::string& name, const char* what) const {
        const int i = find(name);
        if (i < 0) throw ParseError(std::string(what) + ": missing column '" + name + "'");
        return columns[static_cast<std::size_t>(i)];
    }
};

Table parse_csv(const std::string& text, const char* what) {
    Table t;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        const auto cells = split(view);
        if (!have_header) {
            for (auto c : cells) t.header.emplace_back(trim(c));
            t.columns.resize(t.header.size());
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ParseError(std::string(what) + ": line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " fields, expected " +
                             std::to_string(t.header.size()));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            t.columns[i].push_back(parse_double(cells[i], line_no, t.header[i]));
        }
    }
    if (!have_header) throw ParseError(std::string(what) + ": empty file");
    return t;
}

void write_row(std::string& out, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) out += ',';
        out += format_number(v);
        first = false;
    }
    out += '\n';
}

template <typename T>
T get(const Json& j, const char* field) {
    if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'");
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(std::string("field '") + field + "' has the wrong type");
    }
}

template <typename T>
T get_or(const Json& j, const char* field, T fallback) {
    return j.contains(field) ? get<T>(j, field) : fallback;
}

Json interval_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

Interval interval_from(const Json& j, const char* field) {
    const auto v = get<std::vector<double>>(j, field);
    if (v.size() != 2) throw ParseError(std::string("field '") + field + "' must hold two numbers");
    return {v[0], v[1]};
}

MealEvent meal_from_json(const Json& m) {
    MealEvent e;
    if (m.contains("time") && m.at("time").is_string()) {
        const std::string s = m.at("time").get<std::string>();
        int hh = 0, mm = 0;
        if (std::sscanf(s.c_str(), "%d:%d", &hh, &mm) != 2) {
            throw ParseError("field 'meals.time' must be HH:MM, got '" + s + "'");
        }
        e.minute = hh * 60.0 + mm;
    } else {
        e.minute = get<double>(m, "minute");
    }
    e.grams = get<double>(m, "grams");
    e.duration_min = get_or<double>(m, "duration_min", 15.0);
    return e;
}

Json meal_json(const MealEvent& e) {
    return Json{{"minute", e.minute}, {"grams", e.grams}, {"duration_min", e.duration_min}};
}

Json noise_json(const NoiseToggles& n) { return Json{{"cgm", n.cgm}, {"pump", n.pump}, {"meal", n.meal}}; }

NoiseToggles noise_from_json(const Json& j) {
    NoiseToggles n;
    if (!j.contains("noise")) return n;
    const Json& x = j.at("noise");
    if (x.is_boolean()) {
        n.cgm = n.pump = n.meal = x.get<bool>();
        return n;
    }
    n.cgm = get_or<bool>(x, "cgm", true);
    n.pump = get_or<bool>(x, "pump", true);
    n.meal = get_or<bool>(x, "meal", true);
    return n;
}

}  // namespace

std::string format_number(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    if (const int p = precision_override()) {
        const int n = std::snprintf(buf, sizeof buf, "%.*g", p, v);
        return {buf, static_cast<std::size_t>(n)};
    }
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, ptr};
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << text;
        if (!out) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

Json read_json(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("'" + path.string() + "': " + e.what());
    }
}

void write_json(const fs::path& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

std::string signal_log_to_csv(const SignalLog& log) {
    log.validate();
    const bool seg = !log.segment.empty();
    std::string out = seg ? "t_min,y_mgdl,u1_g,u2_pmol,segment\n" : "t_min,y_mgdl,u1_g,u2_pmol\n";
    for (std::size_t i = 0; i < log.size(); ++i) {
        out += format_number(log.t_min[i]) + ',' + format_number(log.y[i]) + ',' + format_number(log.u1[i]) +
               ',' + format_number(log.u2[i]);
        if (seg) out += ',' + std::to_string(log.segment[i]);
        out += '\n';
    }
    return out;
}

SignalLog signal_log_from_csv(const std::string& text) {
    const Table t = parse_csv(text, "signal log");
    SignalLog log;
    log.t_min = t.column("t_min", "signal log");
    log.y = t.column("y_mgdl", "signal log");
    log.u1 = t.column("u1_g", "signal log");
    log.u2 = t.column("u2_pmol", "signal log");
    if (t.find("segment") >= 0) {
        for (double s : t.column("segment", "signal log")) log.segment.push_back(static_cast<int>(s));
    }
    log.validate();
    return log;
}

void save_signal_log(const fs::path& path, const SignalLog& log) {
    write_text_atomic(path, signal_log_to_csv(log));
}

SignalLog load_signal_log(const fs::path& path) { return signal_log_from_csv(read_text(path)); }

std::string dataset_to_csv(const RegressorDataset& ds) {
    std::string out;
    for (int i = 0; i < ds.width(); ++i) out += "w_" + std::to_string(i) + ',';
    out += "y_next\n";
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (double v : ds.row(r)) out += format_number(v) + ',';
        out += format_number(ds.output(r)) + '\n';
    }
    return out;
}

RegressorDataset dataset_from_csv(const std::string& text, const NarxOrders& orders) {
    const Table t = parse_csv(text, "dataset");
    const int nw = orders.regressor_len();
    std::vector<const std::vector<double>*> cols;
    for (int i = 0; i < nw; ++i) cols.push_back(&t.column("w_" + std::to_string(i), "dataset"));
    const auto& y = t.column("y_next", "dataset");
    if (static_cast<int>(t.header.size()) != nw + 1) {
        throw ParseError("dataset: " + std::to_string(t.header.size()) + " columns, orders imply " +
                         std::to_string(nw + 1));
    }
    RegressorDataset ds(orders);
    ds.reserve(y.size());
    std::vector<double> w(static_cast<std::size_t>(nw));
    for (std::size_t r = 0; r < y.size(); ++r) {
        for (int i = 0; i < nw; ++i) w[static_cast<std::size_t>(i)] = (*cols[static_cast<std::size_t>(i)])[r];
        ds.add_row(w, y[r]);
    }
    return ds;
}

Json dataset_sidecar(const RegressorDataset& ds) {
    const BlockMap& b = ds.blocks();
    auto range = [](const BlockRange& r) { return Json{{"offset", r.offset}, {"length", r.length}}; };
    return Json{{"orders", to_json(ds.orders())},
                {"rows", ds.size()},
                {"blocks", {{"glucose", range(b.glucose)}, {"meal", range(b.meal)}, {"insulin", range(b.insulin)}}}};
}

void save_dataset(const fs::path& path, const RegressorDataset& ds) {
    write_text_atomic(path, dataset_to_csv(ds));
    fs::path side = path;
    side += ".json";
    write_json(side, dataset_sidecar(ds));
}

RegressorDataset load_dataset(const fs::path& path) {
    fs::path side = path;
    side += ".json";
    const Json meta = read_json(side);
    const NarxOrders orders = orders_from_json(get<Json>(meta, "orders"));
    RegressorDataset ds = dataset_from_csv(read_text(path), orders);
    if (meta.contains("rows") && meta.at("rows").get<std::size_t>() != ds.size()) {
        throw ParseError("dataset '" + path.string() + "': row count disagrees with its sidecar");
    }
    return ds;
}

Json to_json(const NarxOrders& o) { return Json{{"na", o.na}, {"nb", o.nb}, {"nc", o.nc}}; }

NarxOrders orders_from_json(const Json& j) {
    NarxOrders o{get<int>(j, "na"), get<int>(j, "nb"), get<int>(j, "nc")};
    try {
        o.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("field 'orders': ") + e.what());
    }
    return o;
}

Json to_json(const HolderParams& p, const FitBounds& bounds) {
    double exponent = p.P.empty() ? 1.0 : p.P.front();
    return Json{{"L", Json::array({p.block_L[0], p.block_L[1], p.block_L[2]})},
                {"P", exponent},
                {"mu", p.mu},
                {"orders", to_json(p.orders)},
                {"bounds", {{"lower", bounds.lower}, {"upper", bounds.upper}}}};
}

HolderParams holder_params_from_json(const Json& j) {
    const auto L = get<std::vector<double>>(j, "L");
    if (L.size() != 3) throw ParseError("field 'L' must hold the three block constants");
    const NarxOrders orders = orders_from_json(get<Json>(j, "orders"));
    HolderParams p = HolderParams::from_blocks(orders, L[0], L[1], L[2], get_or<double>(j, "P", 1.0),
                                               get<double>(j, "mu"));
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("holder parameters: ") + e.what());
    }
    return p;
}

FitBounds fit_bounds_from_json(const Json& j) {
    FitBounds b;
    if (!j.contains("bounds")) return b;
    const Json& x = j.at("bounds");
    b.lower = get<std::array<double, 3>>(x, "lower");
    b.upper = get<std::array<double, 3>>(x, "upper");
    b.validate();
    return b;
}

Json to_json(const PatientParams& p) {
    Json profile = Json::array();
    for (const auto& [hour, mult] : p.profile.segments) profile.push_back({hour, mult});
    return Json{{"name", p.name},
                {"body_weight", p.body_weight},
                {"egp0", p.egp0},
                {"gezi", p.gezi},
                {"si", p.si},
                {"p2", p.p2},
                {"vi", p.vi},
                {"ke", p.ke},
                {"ka", p.ka},
                {"vg", p.vg},
                {"kabs", p.kabs},
                {"bioavailability", p.bioavailability},
                {"basal_glucose", p.basal_glucose},
                {"carb_ratio", p.carb_ratio},
                {"correction_factor", p.correction_factor},
                {"target", p.target},
                {"sensitivity_profile", profile}};
}

PatientParams patient_from_json(const Json& j) {
    PatientParams p;
    static const char* known[] = {"name", "body_weight", "egp0", "gezi", "si", "p2", "vi", "ke", "ka", "vg",
                                  "kabs", "bioavailability", "basal_glucose", "carb_ratio",
                                  "correction_factor", "target", "sensitivity_profile"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("patient: unknown field '" + key + "'");
    }
    auto num = [&](const char* field, double& dst) {
        if (!j.contains(field)) return;
        if (!j.at(field).is_number()) throw ConfigError(std::string("patient: field '") + field + "' must be a number");
        dst = j.at(field).get<double>();
    };
    if (j.contains("name")) p.name = get<std::string>(j, "name");
    num("body_weight", p.body_weight);
    num("egp0", p.egp0);
    num("gezi", p.gezi);
    num("si", p.si);
    num("p2", p.p2);
    num("vi", p.vi);
    num("ke", p.ke);
    num("ka", p.ka);
    num("vg", p.vg);
    num("kabs", p.kabs);
    num("bioavailability", p.bioavailability);
    num("basal_glucose", p.basal_glucose);
    num("carb_ratio", p.carb_ratio);
    num("correction_factor", p.correction_factor);
    num("target", p.target);
    if (j.contains("sensitivity_profile")) {
        p.profile.segments.clear();
        for (const auto& seg : j.at("sensitivity_profile")) {
            if (!seg.is_array() || seg.size() != 2) {
                throw ConfigError("patient: field 'sensitivity_profile' entries must be [hour, multiplier]");
            }
            p.profile.segments.emplace_back(seg[0].get<double>(), seg[1].get<double>());
        }
    }
    p.validate();
    return p;
}

PatientParams load_patient(const fs::path& path) {
    try {
        return patient_from_json(read_json(path));
    } catch (const ParseError& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

Json to_json(const Scenario& s) {
    Json meals = Json::array();
    for (const auto& m : s.meals) meals.push_back(meal_json(m));
    Json j{{"days", s.days}, {"meals", meals}};
    j["initial_bg"] = s.initial_bg ? Json(*s.initial_bg) : Json(nullptr);
    j["noise"] = noise_json(s.noise);
    j["seed"] = s.seed;
    j["sensitivity_variation"] = s.sensitivity_variation;
    return j;
}

Scenario scenario_from_json(const Json& j) {
    Scenario s;
    s.days = get_or<double>(j, "days", 3.0);
    if (j.contains("meals")) {
        for (const auto& m : j.at("meals")) s.meals.push_back(meal_from_json(m));
    }
    if (j.contains("initial_bg") && !j.at("initial_bg").is_null()) s.initial_bg = get<double>(j, "initial_bg");
    s.noise = noise_from_json(j);
    s.seed = get_or<std::uint64_t>(j, "seed", 1);
    s.sensitivity_variation = get_or<bool>(j, "sensitivity_variation", false);
    s.validate();
    return s;
}

Scenario load_scenario(const fs::path& path) {
    try {
        return scenario_from_json(read_json(path));
    } catch (const ParseError& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

Json to_json(const Excitation& e) {
    Json sets = Json::array();
    for (const auto& set : e.meal_sets) {
        Json meals = Json::array();
        for (const auto& m : set) meals.push_back(meal_json(m));
        sets.push_back(meals);
    }
    return Json{{"basal_levels", e.basal_levels}, {"initial_bg", e.initial_bg},
                {"meal_sets", sets},              {"segment_hours", e.segment_hours},
                {"repeats", e.repeats},           {"noise", noise_json(e.noise)}};
}

Excitation excitation_from_json(const Json& j) {
    Excitation e;
    e.basal_levels = get<std::vector<double>>(j, "basal_levels");
    e.initial_bg = get_or<std::vector<double>>(j, "initial_bg", e.initial_bg);
    if (j.contains("meal_sets")) {
        e.meal_sets.clear();
        for (const auto& set : j.at("meal_sets")) {
            std::vector<MealEvent> meals;
            for (const auto& m : set) meals.push_back(meal_from_json(m));
            e.meal_sets.push_back(std::move(meals));
        }
    }
    e.segment_hours = get_or<double>(j, "segment_hours", 12.0);
    e.repeats = get_or<int>(j, "repeats", 1);
    e.noise = noise_from_json(j);
    e.validate();
    return e;
}

Excitation load_excitation(const fs::path& path) {
    try {
        return excitation_from_json(read_json(path));
    } catch (const ParseError& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

Json to_json(const Eigen::MatrixXd& m) {
    Json data = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const Json& j, const char* field) {
    if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'");
    const Json& x = j.at(field);
    const auto rows = get<Eigen::Index>(x, "rows");
    const auto cols = get<Eigen::Index>(x, "cols");
    const auto data = get<std::vector<double>>(x, "data");
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
        throw ParseError(std::string("field '") + field + "': data does not match rows x cols");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    }
    return m;
}

Json to_json(const TightenedSets& s) {
    Json sets = Json::array();
    for (const auto& i : s.sets) sets.push_back(interval_json(i));
    return Json{{"base", interval_json(s.base)}, {"radii", s.radii}, {"sets", sets}};
}

TightenedSets tightened_sets_from_json(const Json& j) {
    TightenedSets s;
    s.base = interval_from(j, "base");
    s.radii = get<std::vector<double>>(j, "radii");
    for (const auto& v : get<Json>(j, "sets")) {
        if (!v.is_array() || v.size() != 2) throw ParseError("field 'sets' entries must be [lo, hi]");
        s.sets.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    if (s.sets.size() != s.radii.size() + 1) throw ParseError("field 'sets' must hold one more entry than 'radii'");
    return s;
}

Json to_json(const MpcConfig& c) {
    const MpcWeights& w = c.weights;
    return Json{{"Np", c.Np},
                {"Nc", c.Nc},
                {"zone", interval_json(c.zone)},
                {"weights",
                 {{"Q", w.Q}, {"R", w.R}, {"p_hypo", w.p_hypo}, {"p_hyper", w.p_hyper}, {"p_min", w.p_min},
                  {"p_max", w.p_max}, {"p_u", w.p_u}, {"lambda", w.lambda}}},
                {"u_ref", c.u_ref},
                {"u2_lim", c.u2_lim},
                {"y_bar", c.y_bar},
                {"sets", to_json(c.sets)},
                {"K", to_json(c.K)},
                {"P", to_json(c.P)},
                {"iob_constraints", c.iob_constraints},
                {"dia_hours", c.curve.dia_hours},
                {"solver",
                 {{"initial_step", c.solver.initial_step},
                  {"min_step", c.solver.min_step},
                  {"max_evaluations", c.solver.max_evaluations}}}};
}

MpcConfig mpc_config_from_json(const Json& j) {
    MpcConfig c;
    c.Np = get<int>(j, "Np");
    c.Nc = get<int>(j, "Nc");
    c.zone = interval_from(j, "zone");
    if (j.contains("weights")) {
        const Json& w = j.at("weights");
        c.weights.Q = get_or<double>(w, "Q", c.weights.Q);
        c.weights.R = get_or<double>(w, "R", c.weights.R);
        c.weights.p_hypo = get_or<double>(w, "p_hypo", c.weights.p_hypo);
        c.weights.p_hyper = get_or<double>(w, "p_hyper", c.weights.p_hyper);
        c.weights.p_min = get_or<double>(w, "p_min", c.weights.p_min);
        c.weights.p_max = get_or<double>(w, "p_max", c.weights.p_max);
        c.weights.p_u = get_or<double>(w, "p_u", c.weights.p_u);
        c.weights.lambda = get_or<double>(w, "lambda", c.weights.lambda);
    }
    c.u_ref = get<double>(j, "u_ref");
    c.u2_lim = get_or<double>(j, "u2_lim", c.u2_lim);
    c.y_bar = get_or<double>(j, "y_bar", c.y_bar);
    c.sets = tightened_sets_from_json(get<Json>(j, "sets"));
    c.K = matrix_from_json(j, "K");
    c.P = matrix_from_json(j, "P");
    c.iob_constraints = get_or<bool>(j, "iob_constraints", true);
    c.curve.dia_hours = get_or<double>(j, "dia_hours", 6.0);
    if (j.contains("solver")) {
        const Json& s = j.at("solver");
        c.solver.initial_step = get_or<double>(s, "initial_step", c.solver.initial_step);
        c.solver.min_step = get_or<double>(s, "min_step", c.solver.min_step);
        c.solver.max_evaluations = get_or<int>(s, "max_evaluations", c.solver.max_evaluations);
    }
    return c;
}

Json to_json(const ControllerBundle& b) {
    return Json{{"params", to_json(b.params)},
                {"dataset", b.dataset.generic_string()},
                {"epsilon", b.epsilon},
                {"dare_residual", b.dare_residual},
                {"config", to_json(b.config)}};
}

ControllerBundle controller_bundle_from_json(const Json& j) {
    ControllerBundle b;
    b.params = holder_params_from_json(get<Json>(j, "params"));
    b.dataset = get<std::string>(j, "dataset");
    b.epsilon = get_or<double>(j, "epsilon", 1.0);
    b.dare_residual = get_or<double>(j, "dare_residual", 0.0);
    b.config = mpc_config_from_json(get<Json>(j, "config"));
    try {
        b.config.validate(b.params.orders);
    } catch (const Error& e) {
        throw ConfigError(std::string("controller config: ") + e.what());
    }
    return b;
}

void save_controller(const fs::path& path, const ControllerBundle& b) { write_json(path, to_json(b)); }

ControllerBundle load_controller(const fs::path& path) {
    try {
        return controller_bundle_from_json(read_json(path));
    } catch (const ParseError& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

MpcController make_controller(const fs::path& path) {
    const ControllerBundle b = load_controller(path);
    fs::path data = b.dataset;
    if (data.is_relative()) data = path.parent_path() / data;
    auto ds = std::make_shared<const RegressorDataset>(load_dataset(data));
    if (ds->orders() != b.params.orders) {
        throw ConfigError("controller '" + path.string() + "': dataset orders differ from the parameters");
    }
    return MpcController(PredictionModel(ds, b.params), b.config);
}

std::string trace_to_csv(const GlucoseTrace& t) {
    t.validate();
    std::string out = "t_min,bg,cgm,basal_cmd,basal_act,bolus,meal_true,meal_est,iob\n";
    out.reserve(t.size() * 96);
    for (std::size_t i = 0; i < t.size(); ++i) {
        write_row(out, {t.t_min[i], t.bg[i], t.cgm[i], t.basal_cmd[i], t.basal_act[i], t.bolus[i], t.meal_true[i],
                        t.meal_est[i], t.iob[i]});
    }
    return out;
}

GlucoseTrace trace_from_csv(const std::string& text) {
    const Table tb = parse_csv(text, "trace");
    GlucoseTrace t;
    t.t_min = tb.column("t_min", "trace");
    t.bg = tb.column("bg", "trace");
    t.cgm = tb.column("cgm", "trace");
    t.basal_cmd = tb.column("basal_cmd", "trace");
    t.basal_act = tb.column("basal_act", "trace");
    t.bolus = tb.column("bolus", "trace");
    t.meal_true = tb.column("meal_true", "trace");
    t.meal_est = tb.column("meal_est", "trace");
    t.iob = tb.column("iob", "trace");
    t.validate();
    return t;
}

void save_trace(const fs::path& path, const GlucoseTrace& t) { write_text_atomic(path, trace_to_csv(t)); }

GlucoseTrace load_trace(const fs::path& path) { return trace_from_csv(read_text(path)); }

Json to_json(const MetricsReport& r) {
    return Json{{"tir",
                 {{"below_54", r.tir.below_54},
                  {"54_70", r.tir.from_54_to_70},
                  {"70_180", r.tir.in_range},
                  {"180_250", r.tir.from_180_to_250},
                  {"above_250", r.tir.above_250}}},
                {"gri", r.gri},
                {"cvga", {{"x", r.cvga.x}, {"y", r.cvga.y}, {"zone", to_string(r.cvga.zone)}}},
                {"bg_mean", r.summary.bg.mean},
                {"bg_std", r.summary.bg.std},
                {"u2_mean", r.summary.u2.mean},
                {"u2_std", r.summary.u2.std},
                {"bg_min", r.min_bg}};
}

}  // namespace chokimpc
