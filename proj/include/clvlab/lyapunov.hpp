#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "clvlab/integrate.hpp"
#include "clvlab/qr_store.hpp"

namespace clvlab {

struct LyapunovSpectrum {
    Vec exponents;  // descending
    Vec stderrs;    // batch-means error bars, aligned with `exponents`
    TimeDirection direction = TimeDirection::forward;
    double qr_interval = 0.0;
    int m = 0;
    // Running averages after each QR interval, in QR-column order:
    // history[k*m + j] = estimate of exponent j after interval k+1.
    std::vector<double> history;
    Matrix final_olv;  // final orthonormal frame (n x m)

    std::size_t intervals() const { return m > 0 ? history.size() / m : 0; }
};

// One covariant-vector sample: unit vectors (Euclidean norm, sign fixed so
// the first non-negligible component is positive), one column per tracked
// exponent, in descending exponent order.
struct ClvSample {
    double time = 0.0;
    StateVector state;
    Matrix vectors;  // n x m
};

// Exponent spectrum by tangent-frame transport with periodic QR
// re-orthonormalization; accumulates log |R_jj| / tau. `t_transient` is an
// alignment warm-up excluded from the accumulation (0 disables it).
LyapunovSpectrum benettin_spectrum(const SystemDefinition& sys, std::span<const double> x0,
                                   const IntegratorConfig& cfg, double t_total,
                                   double qr_interval, int m, double t_transient = 0.0);

// Same with the direction flipped to backward (negated field).
LyapunovSpectrum backward_spectrum(const SystemDefinition& sys, std::span<const double> x0,
                                   const IntegratorConfig& cfg, double t_total,
                                   double qr_interval, int m, double t_transient = 0.0);

// Indices of exponents whose gap to a neighbor is below 10x the combined
// error bar (plus an absolute floor, since error bars of deterministic
// systems collapse to zero); covariant vectors in such clusters are not
// trustworthy.
std::vector<int> degenerate_indices(const LyapunovSpectrum& spec, double gap_floor = 1e-6);

struct GinelliParams {
    double t_transient = 0.0;  // forward warm-up before storage
    double t_store = 0.0;      // converged window length
    double t_discard = 0.0;    // tail discarded for backward convergence
    double qr_interval = 1.0;
    int m = 1;
    std::uint64_t seed = 1;                              // backward coefficient init
    std::size_t memory_budget = 256ull * 1024 * 1024;    // QR checkpoint budget, bytes
};

// Covariant Lyapunov vectors by the dynamic method: forward transient, forward
// pass storing per-interval (Q, R), backward iteration of upper-triangular
// coefficients C <- R^-1 C with column renormalization, then V = Q C on the
// converged window. One sample per QR interval.
std::vector<ClvSample> ginelli_clv(const SystemDefinition& sys, std::span<const double> x0,
                                   const IntegratorConfig& cfg, const GinelliParams& params);

// Pushes v forward and backward for t_probe under the tangent dynamics and
// returns ln||v(t)|| / t for t = +t_probe and t = -t_probe. The two estimates
// agree (for t_probe long enough) exactly when v is covariant.
std::pair<double, double> clv_exponent_check(const SystemDefinition& sys,
                                             std::span<const double> x, std::span<const double> v,
                                             const IntegratorConfig& cfg, double t_probe);

// Fixes the overall sign so the first component exceeding 1e-9 * max|v_i| is
// positive; no-op for the zero vector.
void fix_clv_sign(std::span<double> v);

}  // namespace clvlab
