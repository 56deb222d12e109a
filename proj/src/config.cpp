#include "clvlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace clvlab {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "system",      "matrix",     "modes_lambda", "modes_vectors", "coupling",
        "energy",      "ic",         "ic_count",     "scheme",        "dt",
        "t_total",     "qr_interval", "m",           "t_transient",   "t_store",
        "t_discard",   "seed",       "jobs",         "phi",           "phi_const",
        "phi_coord",   "t_probe",    "memory_budget_mb",              "t_span",
        "chunk_span",  "sample_every"};
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a number");
    }
    if (pos != v.size() || !std::isfinite(d))
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a number");
    return d;
}

}  // namespace

RunConfig RunConfig::from_string(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (!known_keys().count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                              "'");
        if (cfg.kv_.count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                              "'");
        cfg.kv_[key] = value;
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

std::string RunConfig::get_string(const std::string& key) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required config key '" + key + "'");
    return it->second;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) {
    const auto it = kv_.find(key);
    if (it != kv_.end()) return it->second;
    kv_[key] = fallback;
    return fallback;
}

double RunConfig::get_double(const std::string& key) { return parse_double(key, get_string(key)); }

double RunConfig::get_double(const std::string& key, double fallback) {
    const auto it = kv_.find(key);
    if (it != kv_.end()) return parse_double(key, it->second);
    std::ostringstream os;
    os.precision(17);
    os << fallback;
    kv_[key] = os.str();
    return fallback;
}

long long RunConfig::get_int(const std::string& key) {
    const double d = get_double(key);
    const long long v = std::llround(d);
    if (d != static_cast<double>(v))
        throw ConfigError("config key '" + key + "': expected an integer");
    return v;
}

long long RunConfig::get_int(const std::string& key, long long fallback) {
    if (!has(key)) {
        kv_[key] = std::to_string(fallback);
        return fallback;
    }
    return get_int(key);
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) {
        kv_[key] = std::to_string(fallback);
        return fallback;
    }
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + it->second +
                          "' as an unsigned integer");
    }
}

Vec RunConfig::get_vector(const std::string& key) {
    const std::string v = get_string(key);
    Vec out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty vector");
    return out;
}

Matrix RunConfig::get_matrix(const std::string& key) {
    const std::string v = get_string(key);
    std::vector<Vec> rows;
    std::string row;
    std::istringstream in(v);
    while (std::getline(in, row, ';')) {
        row = trim(row);
        if (row.empty()) continue;
        Vec r;
        std::string item;
        std::istringstream rin(row);
        while (std::getline(rin, item, ',')) {
            item = trim(item);
            if (!item.empty()) r.push_back(parse_double(key, item));
        }
        if (!r.empty()) rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ConfigError("config key '" + key + "': empty matrix");
    const std::size_t cols = rows[0].size();
    for (const Vec& r : rows)
        if (r.size() != cols)
            throw ConfigError("config key '" + key + "': ragged matrix rows");
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    return m;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    kv_[key] = value;
}

BuiltSystem build_system(RunConfig& cfg) {
    const std::string kind = cfg.get_string("system");
    BuiltSystem out;
    if (kind == "linear") {
        if (cfg.has("modes_lambda") || cfg.has("modes_vectors")) {
            const Vec lambdas = cfg.get_vector("modes_lambda");
            const Matrix vectors = cfg.get_matrix("modes_vectors");
            LinearSystem sys = make_linear_from_modes(lambdas, vectors);
            out.def = std::move(sys.def);
            out.modes = std::move(sys.modes);
        } else {
            LinearSystem sys = make_linear(cfg.get_matrix("matrix"));
            out.def = std::move(sys.def);
            out.modes = std::move(sys.modes);
        }
    } else if (kind == "henon_heiles") {
        HenonHeilesSpec spec;
        spec.coupling = cfg.get_double("coupling");
        spec.energy = cfg.get_double("energy");
        out.def = make_henon_heiles(spec);
        out.hh = spec;
    } else {
        throw ConfigError("config key 'system': unknown system '" + kind + "'");
    }
    return out;
}

IntegratorConfig build_integrator(RunConfig& cfg, const BuiltSystem& sys) {
    IntegratorConfig ic;
    const std::string scheme =
        cfg.get_string("scheme", sys.def.is_hamiltonian ? "leapfrog" : "rk4");
    if (scheme == "rk4")
        ic.scheme = Scheme::rk4;
    else if (scheme == "leapfrog")
        ic.scheme = Scheme::leapfrog;
    else
        throw ConfigError("config key 'scheme': expected rk4 or leapfrog, got '" + scheme + "'");
    ic.step = cfg.get_double("dt", sys.def.is_hamiltonian ? 1e-3 : 1e-2);
    if (!(ic.step > 0.0)) throw ConfigError("config key 'dt': must be > 0");
    return ic;
}

std::vector<StateVector> resolve_initial_states(RunConfig& cfg, const BuiltSystem& sys) {
    if (cfg.has("ic")) {
        Vec flat = cfg.get_vector("ic");
        const int n = sys.def.dim;
        if (static_cast<int>(flat.size()) % n != 0)
            throw ConfigError("config key 'ic': length must be a multiple of the dimension " +
                              std::to_string(n));
        std::vector<StateVector> ics;
        for (std::size_t off = 0; off < flat.size(); off += n)
            ics.emplace_back(flat.begin() + off, flat.begin() + off + n);
        if (sys.hh) {
            for (const StateVector& x : ics) {
                const double h = sys.def.invariant(x);
                if (std::abs(h - sys.hh->energy) > 1e-9)
                    throw ConfigError("config key 'ic': state off the energy surface (H = " +
                                      std::to_string(h) + ")");
            }
        }
        return ics;
    }
    const long long count = cfg.get_int("ic_count", 1);
    if (count < 1) throw ConfigError("config key 'ic_count': must be >= 1");
    if (!sys.hh)
        throw ConfigError("missing required config key 'ic' (sampling needs a Hamiltonian system)");
    return sample_energy_surface(*sys.hh, static_cast<int>(count), cfg.get_u64("seed", 1));
}

}  // namespace clvlab
