#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "clvlab/linalg.hpp"

namespace clvlab {

// A continuous-time dynamical system dx/dt = F(x). The callbacks write into
// caller-provided buffers so the integrators can run allocation-free.
//
// `jacobian` fills a row-major n x n block with entries J(mu,nu) = dF^mu/dx^nu.
// `invariant` is optional (empty when the system conserves nothing we track);
// for Hamiltonian systems it evaluates the Hamiltonian.
//
// Hamiltonian systems use the state layout (q_1..q_d, p_1..p_d) with unit
// masses, so F = (p, -grad V). The leapfrog integrator relies on this layout.
struct SystemDefinition {
    int dim = 0;
    bool is_hamiltonian = false;
    std::string name;
    std::function<void(std::span<const double>, std::span<double>)> field;
    std::function<void(std::span<const double>, std::span<double>)> jacobian;
    std::function<double(std::span<const double>)> invariant;

    Matrix jacobian_matrix(std::span<const double> x) const {
        Matrix j(dim, dim);
        jacobian(x, j.a);
        return j;
    }

    Vec field_at(std::span<const double> x) const {
        Vec f(dim);
        field(x, f);
        return f;
    }
};

// Constant symmetric positive definite metric g. Positive definiteness is
// checked at construction by a Cholesky factorization (all pivots positive).
class MetricTensor {
public:
    static MetricTensor identity(int n);
    explicit MetricTensor(Matrix g);

    const Matrix& matrix() const { return g_; }
    const Matrix& inverse_matrix() const { return g_inv_; }
    int dim() const { return g_.rows; }
    bool is_identity() const { return is_identity_; }

private:
    Matrix g_;
    Matrix g_inv_;
    bool is_identity_ = false;
};

// sqrt(v^mu g_{mu nu} v^nu)
double tangent_norm(std::span<const double> v, const MetricTensor& g);

// Lie derivative of a constant metric along F at x: g J + J^T g, with
// J = dF/dx. Reduces to J + J^T for the Euclidean metric.
Matrix metric_lie_derivative(const SystemDefinition& sys, const MetricTensor& g,
                             std::span<const double> x);

// Norm of a symmetric quadratic form a: sqrt(a_{mu nu} a_{mu' nu'}
// g^{mu mu'} g^{nu nu'}) = sqrt(tr(g^-1 a g^-1 a)); the Frobenius norm when g
// is the identity.
double quadratic_form_norm(const Matrix& a, const MetricTensor& g);

// Checks the analytic Jacobian against central finite differences of the
// field at seeded random probe states drawn from [-box, box]^n.
struct JacobianCheck {
    double max_rel_err = 0.0;
    bool ok = false;
};
JacobianCheck validate_jacobian(const SystemDefinition& sys, int probes, std::uint64_t seed,
                                double box = 1.0, double fd_step = 1e-6, double rel_tol = 1e-5);

}  // namespace clvlab
