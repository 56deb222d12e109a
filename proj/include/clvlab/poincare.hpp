#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "clvlab/lyapunov.hpp"

namespace clvlab {

// Codimension-one section plane {x[plane_index] = plane_value}, crossings
// counted only in the given direction of the plane coordinate's motion.
// Defaults match the Henon-Heiles convention: x = 0 crossed with p_x > 0,
// projected onto (y, p_y).
struct SectionSpec {
    int plane_index = 0;
    double plane_value = 0.0;
    int direction = +1;  // +1: coordinate increasing, -1: decreasing
    std::array<int, 2> projection = {1, 3};
};

struct CrossingBracket {
    std::size_t index_before = 0;  // sample index with the pre-crossing sign
    bool exact = false;            // the sample sits on the plane already
};

// All direction-matching sign changes of (state[plane] - value) between
// consecutive samples. The trajectory must be sampled at every step.
std::vector<CrossingBracket> detect_crossings(const TangentTrajectory& traj,
                                              const SectionSpec& spec);

struct RefinedCrossing {
    double time = 0.0;
    StateVector state;
    Matrix frame;  // tangent data pushed to the crossing time (may be empty)
};

// Bisection on the substep length from the bracketing sample until the plane
// coordinate is below 1e-10 in magnitude; re-integrates locally, never
// interpolates states.
RefinedCrossing refine_crossing(const SystemDefinition& sys, const TangentTrajectory& traj,
                                const CrossingBracket& bracket, const SectionSpec& spec,
                                const IntegratorConfig& cfg, double plane_tol = 1e-10);

struct SectionPoint {
    int orbit_id = 0;
    double time = 0.0;
    std::array<double, 2> coords{};  // projected section coordinates
    std::array<double, 2> clv{};     // projected unit covariant vector
    double exponent = 0.0;           // the orbit's top-exponent label
};

struct OrbitPortrait {
    int orbit_id = 0;
    StateVector initial_state;
    double lambda1 = 0.0;  // top-exponent estimate over the full span
    std::vector<SectionPoint> points;
    bool failed = false;
    std::string error;
};

// Per-orbit section portraits with the top covariant vector projected onto
// the section: a single tangent vector is pushed along the whole orbit (it
// converges to the top covariant direction), renormalized as it goes, and its
// accumulated growth yields the exponent label. Work is chunked so memory
// stays bounded on long spans, and orbits run independently under `jobs`.
std::vector<OrbitPortrait> section_portrait(const SystemDefinition& sys, const SectionSpec& spec,
                                            const std::vector<StateVector>& ics,
                                            const IntegratorConfig& cfg, double t_span,
                                            int jobs = 1, double chunk_span = 50.0);

// CSV with header orbit_id,t,q1,q2,v1,v2,exponent_label.
void write_section_csv(const std::filesystem::path& path,
                       const std::vector<OrbitPortrait>& portraits);

}  // namespace clvlab
