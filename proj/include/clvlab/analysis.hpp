#pragma once

#include <filesystem>
#include <functional>

#include "clvlab/lyapunov.hpp"

namespace clvlab {

// Scalar samples along a trajectory with a trapezoid running time average.
struct ScalarFieldSeries {
    Vec times;
    Vec values;
    Vec running_average;
};

// Builds the running average; times must be uniformly spaced and strictly
// monotone.
ScalarFieldSeries make_series(Vec times, Vec values);

// Positive gauge factor a(x) = exp(phi(x)) with a bound on |phi|.
struct GaugeFunction {
    std::function<double(std::span<const double>)> phi;
    double bound = 0.0;
};

// c(x) = w^T (L_F g) w / 2 per sample for the unit field w taken from the
// given column of the covariant samples; the Euclidean case reduces to
// w^T (dF/dx) w. Vectors must be unit in g to 1e-8.
ScalarFieldSeries scalar_c_along(const SystemDefinition& sys, const MetricTensor& g,
                                 const std::vector<ClvSample>& series, int column = 0);

// b = c - d/dt ln||v(x(t))|| on the uniform grid (centered differences,
// second-order one-sided at the endpoints). `norms` are ||v|| samples > 0.
ScalarFieldSeries scalar_b_from_c(const ScalarFieldSeries& c, const Vec& norms);

struct AverageResult {
    double value = 0.0;
    double sem = 0.0;  // standard error of the mean
};

// Trapezoid time average over the full span; error bar from 10 batch means.
AverageResult time_average(const ScalarFieldSeries& series, int nbatch = 10);

// b' = b - d/dt phi(x(t)). The endpoint stencils are one-sided first order so
// that the trapezoid average telescopes exactly:
// <b'>_T - <b>_T = (phi(x(0)) - phi(x(T))) / T.
ScalarFieldSeries gauge_transform(const ScalarFieldSeries& b, const GaugeFunction& phi,
                                  const TangentTrajectory& traj);

// Ergodic estimate of the exponent carried by the sampled covariant field:
// time average of v^T (L_F g) v / (2 v^T g v). Invariant under per-sample
// rescaling of v.
double le_integral_estimate(const SystemDefinition& sys, const MetricTensor& g,
                            const std::vector<ClvSample>& series, int column = 0);

// (1/2) time average of ||L_F g|| along the trajectory; an upper bound for
// |lambda_j| of every exponent.
double le_upper_bound(const SystemDefinition& sys, const MetricTensor& g,
                      const TangentTrajectory& traj);

// Max over interior samples of ||dv/dt - (dF/dx) v + b v|| / ||v|| with
// centered time differences; neighbor signs are re-aligned before
// differencing since covariant vectors are defined up to sign.
double clf_residual(const SystemDefinition& sys, const std::vector<ClvSample>& series,
                    const ScalarFieldSeries& b, int column = 0);

// Max over probe states of ||[v, F] - b v|| / ||v|| for an analytic field v;
// spatial derivatives of v by central differences.
double involutivity_residual(const SystemDefinition& sys,
                             const std::function<TangentVector(std::span<const double>)>& v_eval,
                             const std::function<double(std::span<const double>)>& b_eval,
                             const std::vector<StateVector>& probes, double fd_step = 1e-5);

// Unit flow-direction samples w = F/||F|| along a trajectory (single column),
// for the zero-exponent covariant field checks.
std::vector<ClvSample> flow_direction_samples(const SystemDefinition& sys,
                                              const TangentTrajectory& traj);

// CSV with header t,value,running_average.
void write_series_csv(const std::filesystem::path& path, const ScalarFieldSeries& series);

}  // namespace clvlab
