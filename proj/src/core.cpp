#include "clvlab/core.hpp"

#include <cmath>
#include <stdexcept>

#include "clvlab/rng.hpp"

namespace clvlab {

namespace {

// Cholesky pivots; throws unless all are positive.
void require_spd(const Matrix& g) {
    const int n = g.rows;
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = g(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (!(s > 0.0)) throw std::invalid_argument("MetricTensor: not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
}

}  // namespace

MetricTensor MetricTensor::identity(int n) {
    MetricTensor m(Matrix::identity(n));
    m.is_identity_ = true;
    return m;
}

MetricTensor::MetricTensor(Matrix g) : g_(std::move(g)) {
    if (g_.rows != g_.cols) throw std::invalid_argument("MetricTensor: not square");
    for (int i = 0; i < g_.rows; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(g_(i, j) - g_(j, i)) > 1e-12 * (1.0 + std::abs(g_(i, j))))
                throw std::invalid_argument("MetricTensor: not symmetric");
    require_spd(g_);
    g_inv_ = inverse(g_);
    is_identity_ = true;
    for (int i = 0; i < g_.rows && is_identity_; ++i)
        for (int j = 0; j < g_.cols; ++j)
            if (g_(i, j) != (i == j ? 1.0 : 0.0)) {
                is_identity_ = false;
                break;
            }
}

double tangent_norm(std::span<const double> v, const MetricTensor& g) {
    if (static_cast<int>(v.size()) != g.dim())
        throw std::invalid_argument("tangent_norm: dimension mismatch");
    if (g.is_identity()) return norm2(v);
    double s = 0.0;
    const Matrix& m = g.matrix();
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) s += v[i] * m(i, j) * v[j];
    return std::sqrt(std::max(0.0, s));
}

Matrix metric_lie_derivative(const SystemDefinition& sys, const MetricTensor& g,
                             std::span<const double> x) {
    if (g.dim() != sys.dim)
        throw std::invalid_argument("metric_lie_derivative: dimension mismatch");
    const Matrix j = sys.jacobian_matrix(x);
    if (g.is_identity()) {
        Matrix out(sys.dim, sys.dim);
        for (int a = 0; a < sys.dim; ++a)
            for (int b = 0; b < sys.dim; ++b) out(a, b) = j(a, b) + j(b, a);
        return out;
    }
    const Matrix gj = matmul(g.matrix(), j);
    Matrix out(sys.dim, sys.dim);
    for (int a = 0; a < sys.dim; ++a)
        for (int b = 0; b < sys.dim; ++b) out(a, b) = gj(a, b) + gj(b, a);
    return out;
}

double quadratic_form_norm(const Matrix& a, const MetricTensor& g) {
    if (a.rows != a.cols) throw std::invalid_argument("quadratic_form_norm: not square");
    if (g.is_identity()) return frobenius_norm(a);
    const Matrix m = matmul(g.inverse_matrix(), matmul(a, matmul(g.inverse_matrix(), a)));
    return std::sqrt(std::max(0.0, trace(m)));
}

JacobianCheck validate_jacobian(const SystemDefinition& sys, int probes, std::uint64_t seed,
                                double box, double fd_step, double rel_tol) {
    Lcg64 rng(seed);
    const int n = sys.dim;
    Vec x(n), xp(n), xm(n), fp(n), fm(n);
    Matrix jac(n, n);
    JacobianCheck result;
    double scale = 0.0;
    double max_abs_err = 0.0;
    for (int p = 0; p < probes; ++p) {
        for (int i = 0; i < n; ++i) x[i] = rng.uniform(-box, box);
        sys.jacobian(x, jac.a);
        for (int nu = 0; nu < n; ++nu) {
            xp = x;
            xm = x;
            xp[nu] += fd_step;
            xm[nu] -= fd_step;
            sys.field(xp, fp);
            sys.field(xm, fm);
            for (int mu = 0; mu < n; ++mu) {
                const double fd = (fp[mu] - fm[mu]) / (2.0 * fd_step);
                max_abs_err = std::max(max_abs_err, std::abs(jac(mu, nu) - fd));
                scale = std::max(scale, std::abs(fd));
            }
        }
    }
    result.max_rel_err = max_abs_err / std::max(scale, 1.0);
    result.ok = result.max_rel_err <= rel_tol;
    return result;
}

}  // namespace clvlab
