#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sgkdv/covariance.hpp"
#include "sgkdv/dynamics.hpp"
#include "sgkdv/experiments.hpp"
#include "sgkdv/initial_data.hpp"

namespace sgkdv {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cfgdetail {

using Value = std::variant<double, bool, std::string, std::vector<double>>;

inline std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline Value parse_value(const std::string& raw, const std::string& key) {
    const std::string v = trim(raw);
    if (v.empty()) throw ConfigError("config: empty value for key '" + key + "'");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw ConfigError("config: unterminated string for key '" + key + "'");
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') throw ConfigError("config: unterminated array for key '" + key + "'");
        std::vector<double> out;
        std::string body = v.substr(1, v.size() - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            size_t pos = 0;
            double num;
            try {
                num = std::stod(item, &pos);
            } catch (...) {
                throw ConfigError("config: bad array element '" + item + "' for key '" + key + "'");
            }
            if (pos != item.size())
                throw ConfigError("config: bad array element '" + item + "' for key '" + key + "'");
            out.push_back(num);
        }
        return out;
    }
    size_t pos = 0;
    double num;
    try {
        num = std::stod(v, &pos);
    } catch (...) {
        throw ConfigError("config: cannot parse value '" + v + "' for key '" + key + "'");
    }
    if (pos != v.size())
        throw ConfigError("config: cannot parse value '" + v + "' for key '" + key + "'");
    return num;
}

// Flat dotted-key store over the TOML-compatible subset: [section] headers,
// key = value lines, strings, numbers, booleans, numeric arrays, # comments.
class KeyStore {
public:
    static KeyStore from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open file '" + path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        return from_string(buf.str());
    }

    static KeyStore from_string(const std::string& text) {
        KeyStore ks;
        std::stringstream ss(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(ss, line)) {
            ++lineno;
            std::string s = trim(strip_comment(line));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ConfigError("config: bad section header at line " + std::to_string(lineno));
                section = trim(s.substr(1, s.size() - 2));
                if (section.empty())
                    throw ConfigError("config: empty section name at line " + std::to_string(lineno));
                continue;
            }
            const size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: expected 'key = value' at line " + std::to_string(lineno));
            std::string key = trim(s.substr(0, eq));
            if (key.empty())
                throw ConfigError("config: empty key at line " + std::to_string(lineno));
            if (!section.empty()) key = section + "." + key;
            if (ks.values_.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
            ks.values_[key] = parse_value(s.substr(eq + 1), key);
        }
        return ks;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double number(const std::string& key, double fallback) {
        return fetch<double>(key, fallback, "number");
    }
    bool boolean(const std::string& key, bool fallback) {
        return fetch<bool>(key, fallback, "boolean");
    }
    std::string str(const std::string& key, const std::string& fallback) {
        return fetch<std::string>(key, fallback, "string");
    }
    std::vector<double> array(const std::string& key, const std::vector<double>& fallback) {
        return fetch<std::vector<double>>(key, fallback, "array");
    }

    int integer(const std::string& key, int fallback) {
        const double d = number(key, static_cast<double>(fallback));
        const double r = std::round(d);
        if (std::abs(d - r) > 1e-9)
            throw ConfigError("config: key '" + key + "' must be an integer, got " +
                              std::to_string(d));
        return static_cast<int>(r);
    }

    std::uint64_t u64(const std::string& key, std::uint64_t fallback) {
        const double d = number(key, static_cast<double>(fallback));
        if (d < 0.0) throw ConfigError("config: key '" + key + "' must be nonnegative");
        return static_cast<std::uint64_t>(d);
    }

    // Keys present in the file but never requested by the schema.
    std::vector<std::string> unconsumed() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!consumed_.count(k)) out.push_back(k);
        return out;
    }

    // Resolved echo: every schema key with its final (default or given) value.
    const std::map<std::string, std::string>& resolved() const { return resolved_; }

private:
    template <typename T>
    T fetch(const std::string& key, const T& fallback, const char* want) {
        T out = fallback;
        auto it = values_.find(key);
        if (it != values_.end()) {
            consumed_.insert(key);
            if (!std::holds_alternative<T>(it->second))
                throw ConfigError("config: key '" + key + "' must be a " + std::string(want));
            out = std::get<T>(it->second);
        }
        resolved_[key] = render(out);
        return out;
    }

    static std::string render(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    static std::string render(bool v) { return v ? "true" : "false"; }
    static std::string render(const std::string& v) { return v; }
    static std::string render(const std::vector<double>& v) {
        std::string s = "[";
        for (size_t i = 0; i < v.size(); ++i) {
            if (i) s += ",";
            s += render(v[i]);
        }
        return s + "]";
    }

    std::map<std::string, Value> values_;
    std::set<std::string> consumed_;
    std::map<std::string, std::string> resolved_;
};

}  // namespace cfgdetail

struct NoiseConfig {
    std::string kind = "power-law";  // none | power-law | band-limited | table
    double amplitude = 1.0;
    double decay_r = 2.0;
    double cutoff = 0.0;
    double normalize_sigma = 1.1;  // < 0 disables normalization
    std::vector<double> table;
};

struct EnsembleSection {
    int n_traj = 16;
    std::vector<std::string> observables{"mass"};
    bool write_trajectories = false;
};

struct ConvCheckSection {
    std::vector<double> sigmas{0.0, 0.25, 1.0};
    double horizon = 1.0;
    int n_steps = 64;
    int n_traj = 10000;
    int independence_steps = 1;  // 0 skips the step-count comparison
};

struct MassCheckSection {
    int n_traj = 1000;
    int levels = 3;
};

struct MomentCheckSection {
    int q = 2;
    int n_traj = 1000;
};

struct ScalingSection {
    std::string quantity = "sup";  // sup | marginal | mixed | xk
    double sigma = 0.25;
    int moment_q = 1;
    std::vector<double> horizons{0.25, 0.5, 1.0, 2.0, 4.0};
    int n_steps = 64;
    int n_traj = 1000;
    int bootstrap = 1000;
    double ratio_spread_limit = 5.0;
    double mixed_q_x = 4.0;
    double mixed_p_t = 2.0;
    std::string mixed_op = "id";  // id | frac | frac_dx | dx
    double mixed_gamma = 0.0;
};

struct PicardSection {
    double t_max = 64.0;
    int n_steps_max = 4096;
    double tol = 1e-10;
    int max_iter = 60;
    double ratio_threshold = 0.9;
    int n_traj = 100;
};

struct RunConfig {
    SimConfig sim;
    InitialDataSpec initial;
    NoiseConfig noise;
    EnsembleSection ensemble;
    ConvCheckSection convcheck;
    MassCheckSection masscheck;
    MomentCheckSection momentcheck;
    ScalingSection scaling;
    PicardSection picard;
    ExistenceConstants consts;
    bool consts_are_defaults = true;
    bool write_snapshots = true;
    std::map<std::string, std::string> resolved;  // echoed configuration
};

inline std::vector<std::string> split_names(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = cfgdetail::trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline RunConfig parse_config_text(const std::string& text) {
    cfgdetail::KeyStore ks = cfgdetail::KeyStore::from_string(text);
    RunConfig rc;

    rc.sim.k = ks.integer("k", 2);
    if (rc.sim.k != 2 && rc.sim.k != 3)
        throw ConfigError("config: only k in {2, 3} is supported (mKdV and quartic gKdV), got k = " +
                          std::to_string(rc.sim.k));
    rc.sim.mu = ks.integer("mu", 1);
    if (rc.sim.mu != 1 && rc.sim.mu != -1)
        throw ConfigError("config: mu must be +1 (focusing) or -1 (defocusing)");
    rc.sim.dt = ks.number("dt", 1e-3);
    rc.sim.T = ks.number("T", 1.0);
    const std::string scheme = ks.str("scheme", "strang");
    if (scheme == "strang")
        rc.sim.scheme = Scheme::strang;
    else if (scheme == "exp-euler")
        rc.sim.scheme = Scheme::exp_euler;
    else
        throw ConfigError("config: scheme must be \"strang\" or \"exp-euler\", got \"" + scheme +
                          "\"");
    rc.sim.pad_factor = ks.integer("pad_factor", min_pad_factor(rc.sim.k));
    rc.sim.seed = ks.u64("seed", 0);
    rc.sim.save_every = ks.integer("save_every", 1);
    rc.sim.cfl_constant = ks.number("cfl_constant", 1.0);
    rc.sim.n = ks.integer("grid.n", 256);
    rc.sim.length = ks.number("grid.length", 100.0);

    rc.noise.kind = ks.str("noise.kind", "power-law");
    rc.noise.amplitude = ks.number("noise.amplitude", 1.0);
    rc.noise.decay_r = ks.number("noise.decay_r", 2.0);
    rc.noise.cutoff = ks.number("noise.cutoff", 0.0);
    rc.noise.normalize_sigma = ks.number("noise.normalize_sigma", rc.sim.k == 2 ? 1.1 : 1.0);
    rc.noise.table = ks.array("noise.table", {});
    if (rc.noise.kind != "none" && rc.noise.kind != "power-law" &&
        rc.noise.kind != "band-limited" && rc.noise.kind != "table")
        throw ConfigError("config: noise.kind must be one of none|power-law|band-limited|table");

    rc.initial.kind = InitialDataSpec::kind_from_name(ks.str("initial.kind", "zero"));
    rc.initial.amplitude = ks.number("initial.amplitude", 1.0);
    rc.initial.width = ks.number("initial.width", 1.0);
    rc.initial.center = ks.number("initial.center", 0.0);
    rc.initial.speed = ks.number("initial.speed", 1.0);
    rc.initial.norm_sigma = ks.number("initial.norm_sigma", 0.0);
    rc.initial.norm_value = ks.number("initial.norm_value", 0.0);
    rc.initial.normalize = rc.initial.norm_value > 0.0;
    const std::string table_path = ks.str("initial.table_path", "");
    if (rc.initial.kind == InitialDataSpec::Kind::custom_table) {
        if (table_path.empty())
            throw ConfigError("config: initial.table_path required for kind = custom-table");
        std::ifstream in(table_path);
        if (!in) throw ConfigError("config: cannot open initial.table_path '" + table_path + "'");
        double v;
        while (in >> v) rc.initial.table.push_back(v);
    }

    rc.ensemble.n_traj = ks.integer("ensemble.n_traj", 16);
    rc.ensemble.observables = split_names(ks.str("ensemble.observables", "mass"));
    rc.ensemble.write_trajectories = ks.boolean("ensemble.write_trajectories", false);

    rc.convcheck.sigmas = ks.array("convcheck.sigmas", {0.0, 0.25, 1.0});
    rc.convcheck.horizon = ks.number("convcheck.horizon", 1.0);
    rc.convcheck.n_steps = ks.integer("convcheck.n_steps", 64);
    rc.convcheck.n_traj = ks.integer("convcheck.n_traj", 10000);
    rc.convcheck.independence_steps = ks.integer("convcheck.independence_steps", 1);

    rc.masscheck.n_traj = ks.integer("masscheck.n_traj", 1000);
    rc.masscheck.levels = ks.integer("masscheck.levels", 3);

    rc.momentcheck.q = ks.integer("momentcheck.q", 2);
    rc.momentcheck.n_traj = ks.integer("momentcheck.n_traj", 1000);

    rc.scaling.quantity = ks.str("scaling.quantity", "sup");
    rc.scaling.sigma = ks.number("scaling.sigma", 0.25);
    rc.scaling.moment_q = ks.integer("scaling.moment_q", 1);
    rc.scaling.horizons = ks.array("scaling.horizons", {0.25, 0.5, 1.0, 2.0, 4.0});
    rc.scaling.n_steps = ks.integer("scaling.n_steps", 64);
    rc.scaling.n_traj = ks.integer("scaling.n_traj", 1000);
    rc.scaling.bootstrap = ks.integer("scaling.bootstrap", 1000);
    rc.scaling.ratio_spread_limit = ks.number("scaling.ratio_spread_limit", 5.0);
    rc.scaling.mixed_q_x = ks.number("scaling.mixed_q_x", 4.0);
    rc.scaling.mixed_p_t = ks.number("scaling.mixed_p_t", 2.0);
    rc.scaling.mixed_op = ks.str("scaling.mixed_op", "id");
    rc.scaling.mixed_gamma = ks.number("scaling.mixed_gamma", 0.0);
    if (rc.scaling.quantity != "sup" && rc.scaling.quantity != "marginal" &&
        rc.scaling.quantity != "mixed" && rc.scaling.quantity != "xk")
        throw ConfigError("config: scaling.quantity must be sup|marginal|mixed|xk");

    rc.picard.t_max = ks.number("picard.t_max", 64.0);
    rc.picard.n_steps_max = ks.integer("picard.n_steps_max", 4096);
    rc.picard.tol = ks.number("picard.tol", 1e-10);
    rc.picard.max_iter = ks.integer("picard.max_iter", 60);
    rc.picard.ratio_threshold = ks.number("picard.ratio_threshold", 0.9);
    rc.picard.n_traj = ks.integer("picard.n_traj", 100);

    rc.consts.c_k = ks.number("constants.c_k", 1.0);
    rc.consts.c_tilde = ks.number("constants.c_tilde", 1.0);
    rc.consts.c_bar = ks.number("constants.c_bar", 1.0);
    rc.consts.rho = ks.number("constants.rho", 1.0);
    rc.consts_are_defaults = rc.consts.c_k == 1.0 && rc.consts.c_tilde == 1.0 &&
                             rc.consts.c_bar == 1.0 && rc.consts.rho == 1.0;

    rc.write_snapshots = ks.boolean("output.write_snapshots", true);

    const auto unknown = ks.unconsumed();
    if (!unknown.empty()) {
        std::string msg = "config: unknown key(s):";
        for (const auto& k : unknown) msg += " '" + k + "'";
        throw ConfigError(msg);
    }

    try {
        rc.sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (rc.sim.pad_factor < min_pad_factor(rc.sim.k))
        throw ConfigError("config: pad_factor below exact-dealias threshold (k+2)/2 = " +
                          std::to_string(min_pad_factor(rc.sim.k)));
    rc.resolved = ks.resolved();
    return rc;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

inline CovarianceOperator build_noise(const NoiseConfig& nc, const Grid& g) {
    CovarianceOperator phi = CovarianceOperator::zero(g);
    if (nc.kind == "none") return phi;
    if (nc.kind == "power-law")
        phi = CovarianceOperator::power_law(g, 1.0, nc.decay_r);
    else if (nc.kind == "band-limited")
        phi = CovarianceOperator::band_limited(g, 1.0, nc.cutoff);
    else if (nc.kind == "table")
        phi = CovarianceOperator::from_table(g, nc.table);
    if (nc.normalize_sigma >= 0.0) phi = phi.normalized(nc.normalize_sigma);
    return phi.scaled(nc.amplitude);
}

}  // namespace sgkdv
