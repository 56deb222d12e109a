#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "clvlab/integrate.hpp"
#include "clvlab/systems.hpp"

namespace clvlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat `key = value` run configuration. Unknown keys are rejected at parse
// time; typed getters record the defaults they hand out, so `entries()`
// afterwards is the fully resolved configuration (what reports embed).
class RunConfig {
public:
    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key);
    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key);
    double get_double(const std::string& key, double fallback);
    long long get_int(const std::string& key);
    long long get_int(const std::string& key, long long fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    Vec get_vector(const std::string& key);
    Matrix get_matrix(const std::string& key);

    // Command-line overrides (--seed, --jobs).
    void set(const std::string& key, const std::string& value);

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

// System assembled from a config: kind "linear" (key `matrix`, optionally
// `modes_lambda` + `modes_vectors`) or "henon_heiles" (keys `coupling`,
// `energy`).
struct BuiltSystem {
    SystemDefinition def;
    std::optional<LinearModes> modes;
    std::optional<HenonHeilesSpec> hh;
};

BuiltSystem build_system(RunConfig& cfg);

// Scheme/step defaults follow the system kind: leapfrog at dt = 1e-3 for
// Hamiltonian systems, rk4 at dt = 1e-2 otherwise.
IntegratorConfig build_integrator(RunConfig& cfg, const BuiltSystem& sys);

// Explicit `ic` when present, otherwise `ic_count` seeded samples on the
// energy surface (Hamiltonian systems only).
std::vector<StateVector> resolve_initial_states(RunConfig& cfg, const BuiltSystem& sys);

}  // namespace clvlab
