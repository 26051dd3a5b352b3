#include "bhk/config.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace bhk {

namespace pt = boost::property_tree;

Scenario scenario_from_name(const std::string& name) {
    static const std::map<std::string, Scenario> names = {
        {"relax", Scenario::Relax},
        {"compare-potentials", Scenario::ComparePotentials},
        {"negative-temperature", Scenario::NegativeTemperature},
        {"prethermalization", Scenario::Prethermalization},
        {"stationary-only", Scenario::StationaryOnly},
        {"oracle-suite", Scenario::OracleSuite},
    };
    auto it = names.find(name);
    if (it == names.end()) throw ConfigError("unknown scenario '" + name + "'");
    return it->second;
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::Relax: return "relax";
        case Scenario::ComparePotentials: return "compare-potentials";
        case Scenario::NegativeTemperature: return "negative-temperature";
        case Scenario::Prethermalization: return "prethermalization";
        case Scenario::StationaryOnly: return "stationary-only";
        case Scenario::OracleSuite: return "oracle-suite";
    }
    return "?";
}

std::vector<double> parse_real_list(const std::string& s) {
    std::vector<double> out;
    std::vector<std::string> parts;
    boost::split(parts, s, boost::is_any_of(", \t"), boost::token_compress_on);
    for (auto& p : parts) {
        boost::trim(p);
        if (p.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(p, &used);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + p + "'");
        }
        if (used != p.size()) throw ConfigError("not a number: '" + p + "'");
        out.push_back(v);
    }
    return out;
}

PairPotential ScenarioConfig::make_potential() const {
    if (potential == "tabulated") return PairPotential::tabulated(potential_table);
    return PairPotential::from_name(potential);
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (n < 0 || dim() > kMaxDim) fail("model.n must be in [0, " + std::to_string((kMaxDim - 1) / 2) + "]");
    if (grid_points < 8 || grid_points % 2 != 0)
        fail("model.N must be even and at least 8 (the reflection k -> 1/2 - k must map the grid to itself)");
    if (!(eta >= 0.0)) fail("model.eta must be nonnegative");
    try {
        make_potential();
    } catch (const DomainError& e) {
        fail(std::string("model.potential: ") + e.what());
    }
    const std::size_t d = dim();
    if (initial.offset.size() != d || initial.amplitude.size() != d || initial.phase.size() != d)
        fail("initial_state arrays must have 2n+1 entries");
    try {
        collision.validate();
    } catch (const DomainError& e) {
        fail(std::string("collision: ") + e.what());
    }
    if (!(tol_psd > 0.0)) fail("initial_state.tol_psd must be positive");
    if (!(dt > 0.0)) fail("time.dt must be positive");
    if (!(t_end >= 0.0)) fail("time.t_end must be nonnegative");
    if (sample_every < 1) fail("time.sample_every must be at least 1");
    if (!(psd_reject > 0.0)) fail("time.psd_reject must be positive");
    if (!(stationarity_tol >= 0.0)) fail("time.stationarity_tol must be nonnegative");
    if (!(fit_floor > 0.0)) fail("analysis.fit_floor must be positive");
    if (charges_source != "initial" && charges_source != "explicit")
        fail("analysis.charges must be 'initial' or 'explicit'");
    if (charges_source == "explicit") {
        if (explicit_eps.size() != d) fail("analysis.eps must have 2n+1 entries");
        if (explicit_h.size() != 1 && explicit_h.size() != static_cast<std::size_t>(grid_points))
            fail("analysis.h must be a single 0 or N values");
        if (explicit_h.size() == 1 && explicit_h[0] != 0.0) fail("analysis.h as a single value must be 0");
    }
    if (output_dir.empty()) fail("output.dir must not be empty");
}

namespace {

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

std::string branch_name(ThermalBranch b) {
    switch (b) {
        case ThermalBranch::Positive: return "positive";
        case ThermalBranch::Negative: return "negative";
        default: return "auto";
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    std::string s = boost::to_lower_copy(boost::trim_copy(v));
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    std::string s = boost::trim_copy(v);
    std::istringstream is(s);
    T x{};
    is >> x;
    if (!is || !is.eof()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"scenario", {"name", "seed"}},
        {"model", {"n", "N", "eta", "potential", "potential_table"}},
        {"initial_state", {"offset", "amplitude", "phase", "rho", "shift_half", "tol_psd"}},
        {"collision", {"mode", "tol_root", "g_min", "c_moll", "c_pv", "vlasov", "scan_factor", "cache_dir"}},
        {"time", {"t_end", "dt", "sample_every", "snapshots", "psd_reject", "stationarity_tol"}},
        {"analysis", {"thermal_branch", "fit_window", "fit_floor", "charges", "eps", "h"}},
        {"output", {"dir"}},
    };
    return s;
}

ScenarioConfig from_tree(const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
        auto it = schema().find(section);
        if (it == schema().end()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, value] : body) {
            (void)value;
            if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
        }
    }
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return boost::trim_copy(*v);
        return std::nullopt;
    };

    ScenarioConfig c;
    if (auto v = get("scenario.name")) c.scenario = scenario_from_name(*v);
    if (auto v = get("scenario.seed")) c.seed = parse_number<std::uint64_t>("scenario.seed", *v);

    if (auto v = get("model.n")) c.n = parse_number<int>("model.n", *v);
    if (auto v = get("model.N")) c.grid_points = parse_number<int>("model.N", *v);
    if (auto v = get("model.eta")) c.eta = parse_number<double>("model.eta", *v);
    if (auto v = get("model.potential")) c.potential = *v;
    if (auto v = get("model.potential_table")) c.potential_table = parse_real_list(*v);

    if (c.n >= 0 && 2 * c.n + 1 <= kMaxDim) c.initial = InitialStateParams::defaults(c.n);
    if (auto v = get("initial_state.offset")) c.initial.offset = parse_real_list(*v);
    if (auto v = get("initial_state.amplitude")) c.initial.amplitude = parse_real_list(*v);
    if (auto v = get("initial_state.phase")) c.initial.phase = parse_real_list(*v);
    if (auto v = get("initial_state.rho")) c.initial.rho = parse_number<double>("initial_state.rho", *v);
    if (auto v = get("initial_state.shift_half")) c.initial.shift_half = parse_bool("initial_state.shift_half", *v);
    if (auto v = get("initial_state.tol_psd")) c.tol_psd = parse_number<double>("initial_state.tol_psd", *v);

    if (auto v = get("collision.mode")) {
        try {
            c.collision.mode = collision_mode_from_name(*v);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("collision.mode: ") + e.what());
        }
    }
    if (auto v = get("collision.tol_root")) c.collision.tol_root = parse_number<double>("collision.tol_root", *v);
    if (auto v = get("collision.g_min")) c.collision.g_min = parse_number<double>("collision.g_min", *v);
    if (auto v = get("collision.c_moll")) c.collision.c_moll = parse_number<double>("collision.c_moll", *v);
    if (auto v = get("collision.c_pv")) c.collision.c_pv = parse_number<double>("collision.c_pv", *v);
    if (auto v = get("collision.vlasov")) c.collision.include_vlasov = parse_bool("collision.vlasov", *v);
    if (auto v = get("collision.scan_factor"))
        c.collision.scan_factor = parse_number<int>("collision.scan_factor", *v);
    if (auto v = get("collision.cache_dir")) c.cache_dir = *v;

    if (auto v = get("time.t_end")) c.t_end = parse_number<double>("time.t_end", *v);
    if (auto v = get("time.dt")) c.dt = parse_number<double>("time.dt", *v);
    if (auto v = get("time.sample_every")) c.sample_every = parse_number<int>("time.sample_every", *v);
    if (auto v = get("time.snapshots")) c.snapshot_times = parse_real_list(*v);
    if (auto v = get("time.psd_reject")) c.psd_reject = parse_number<double>("time.psd_reject", *v);
    if (auto v = get("time.stationarity_tol"))
        c.stationarity_tol = parse_number<double>("time.stationarity_tol", *v);

    if (auto v = get("analysis.thermal_branch")) {
        try {
            c.thermal_branch = thermal_branch_from_name(*v);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("analysis.thermal_branch: ") + e.what());
        }
    }
    if (auto v = get("analysis.fit_window")) {
        if (*v != "auto") {
            auto w = parse_real_list(*v);
            if (w.size() != 2 || !(w[1] > w[0])) throw ConfigError("analysis.fit_window must be 'auto' or t0,t1");
            c.fit_t0 = w[0];
            c.fit_t1 = w[1];
        }
    }
    if (auto v = get("analysis.fit_floor")) c.fit_floor = parse_number<double>("analysis.fit_floor", *v);
    if (auto v = get("analysis.charges")) c.charges_source = *v;
    if (auto v = get("analysis.eps")) c.explicit_eps = parse_real_list(*v);
    if (auto v = get("analysis.h")) c.explicit_h = parse_real_list(*v);

    if (auto v = get("output.dir")) c.output_dir = *v;
    return c;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    return from_tree(tree);
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

nlohmann::json ScenarioConfig::to_json() const {
    nlohmann::json j;
    j["scenario"] = {{"name", to_string(scenario)}, {"seed", seed}};
    j["model"] = {{"n", n}, {"N", grid_points}, {"eta", eta}, {"potential", potential}};
    if (!potential_table.empty()) j["model"]["potential_table"] = potential_table;
    j["initial_state"] = {{"offset", initial.offset},
                          {"amplitude", initial.amplitude},
                          {"phase", initial.phase},
                          {"rho", initial.rho},
                          {"shift_half", initial.shift_half},
                          {"tol_psd", tol_psd}};
    j["collision"] = {{"mode", bhk::to_string(collision.mode)},
                      {"tol_root", collision.tol_root},
                      {"g_min", collision.g_min},
                      {"c_moll", collision.c_moll},
                      {"c_pv", collision.c_pv},
                      {"vlasov", collision.include_vlasov},
                      {"scan_factor", collision.scan_factor},
                      {"cache_dir", cache_dir}};
    j["time"] = {{"t_end", t_end},
                 {"dt", dt},
                 {"sample_every", sample_every},
                 {"snapshots", snapshot_times},
                 {"psd_reject", psd_reject},
                 {"stationarity_tol", stationarity_tol}};
    j["analysis"] = {{"thermal_branch", branch_name(thermal_branch)},
                     {"fit_window", fit_t1 > fit_t0 ? join({fit_t0, fit_t1}) : std::string("auto")},
                     {"fit_floor", fit_floor},
                     {"charges", charges_source}};
    if (charges_source == "explicit") {
        j["analysis"]["eps"] = explicit_eps;
        j["analysis"]["h"] = explicit_h;
    }
    j["output"] = {{"dir", output_dir}};
    return j;
}

}  // namespace bhk
