#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "clvlab/core.hpp"

namespace clvlab {

enum class Scheme { rk4, leapfrog };
enum class TimeDirection { forward, backward };

struct IntegratorConfig {
    Scheme scheme = Scheme::rk4;
    double step = 1e-2;
    TimeDirection direction = TimeDirection::forward;
};

struct IntegrationFailure : std::runtime_error {
    IntegrationFailure(double t, StateVector last, const std::string& what)
        : std::runtime_error(what), time(t), last_state(std::move(last)) {}
    double time;
    StateVector last_state;
};

// Uniformly sampled trajectory with optionally co-evolved tangent frames.
// Storage is flat; sample k occupies states[k*dim ..] and frames[k*dim*cols ..]
// (frames column-major: column j of sample k starts at k*dim*cols + j*dim).
struct TangentTrajectory {
    int dim = 0;
    int frame_cols = 0;
    std::vector<double> times;
    std::vector<double> states;
    std::vector<double> frames;

    std::size_t size() const { return times.size(); }
    std::span<const double> state(std::size_t k) const {
        return {states.data() + k * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> frame(std::size_t k) const {
        return {frames.data() + k * static_cast<std::size_t>(dim) * frame_cols,
                static_cast<std::size_t>(dim) * frame_cols};
    }
    Vec frame_col(std::size_t k, int j) const {
        Vec v(dim);
        const double* p = frames.data() + k * static_cast<std::size_t>(dim) * frame_cols +
                          static_cast<std::size_t>(j) * dim;
        for (int i = 0; i < dim; ++i) v[i] = p[i];
        return v;
    }
};

// Allocation-free stepping engine for one system/config pair. The tangent
// frame is co-integrated with the same scheme as the state: RK4 evaluates the
// Jacobian at the RK4 stage points; leapfrog applies the exact tangent map of
// the kick-drift-kick update, so the pair stays symplectic-consistent and the
// one-step tangent map has unit determinant.
//
// Backward direction steps with -dt, which is algebraically identical to
// integrating the negated field (and negated Jacobian) forward; no stored
// forward steps are ever inverted.
class Stepper {
public:
    Stepper(const SystemDefinition& sys, const IntegratorConfig& cfg, int frame_cols = 0);

    // One step of the state alone, in place.
    void step(std::span<double> x);
    // One step of state and n x m column-major frame together.
    void step(std::span<double> x, std::span<double> frame);

    // One step with a step size override (|h| <= cfg.step); used by section
    // refinement. Sign follows the configured direction.
    void step_with(std::span<double> x, std::span<double> frame, double h_magnitude);

    double signed_dt() const { return h_; }
    int frame_cols() const { return m_; }

private:
    void rk4(std::span<double> x, std::span<double> frame, double h);
    void leapfrog(std::span<double> x, std::span<double> frame, double h);

    const SystemDefinition* sys_;
    int n_, m_;
    Scheme scheme_;
    double h_;
    // workspaces
    Vec k1_, k2_, k3_, k4_, xs_, f0_, f1_;
    Vec jac_, jac2_;
    Vec fk1_, fk2_, fk3_, fk4_, fs_;
};

// Single-step wrappers matching the operation-level contracts. Both validate
// finiteness of the result; step_flow throws IntegrationFailure on blow-up.
StateVector step_flow(const SystemDefinition& sys, std::span<const double> x,
                      const IntegratorConfig& cfg);
Matrix step_tangent(const SystemDefinition& sys, std::span<const double> x, const Matrix& frame,
                    const IntegratorConfig& cfg);

// Integrates over t_span (> 0, or 0 for a single sample), sampling every
// `sample_every` time units; both must be consistent multiples of cfg.step.
// `frame0` may be empty to skip tangent transport. Time stamps start at 0 and
// run monotonically in the integration direction.
TangentTrajectory evolve(const SystemDefinition& sys, std::span<const double> x0,
                         const Matrix& frame0, const IntegratorConfig& cfg, double t_span,
                         double sample_every);

// Rounds t/dt to the nearest integer step count, requiring t to be a multiple
// of dt up to 1e-9 relative.
long long step_count(double t, double dt);

}  // namespace clvlab
