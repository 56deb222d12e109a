#include "clvlab/integrate.hpp"

#include <cmath>
#include <cstring>

namespace clvlab {

Stepper::Stepper(const SystemDefinition& sys, const IntegratorConfig& cfg, int frame_cols)
    : sys_(&sys), n_(sys.dim), m_(frame_cols), scheme_(cfg.scheme) {
    if (!(cfg.step > 0.0)) throw std::invalid_argument("IntegratorConfig: step must be > 0");
    if (cfg.scheme == Scheme::leapfrog && !sys.is_hamiltonian)
        throw std::invalid_argument("IntegratorConfig: leapfrog requires a Hamiltonian system");
    if (cfg.scheme == Scheme::leapfrog && n_ % 2 != 0)
        throw std::invalid_argument("IntegratorConfig: leapfrog requires even dimension");
    h_ = cfg.direction == TimeDirection::forward ? cfg.step : -cfg.step;
    k1_.resize(n_);
    k2_.resize(n_);
    k3_.resize(n_);
    k4_.resize(n_);
    xs_.resize(n_);
    f0_.resize(n_);
    f1_.resize(n_);
    jac_.resize(static_cast<std::size_t>(n_) * n_);
    jac2_.resize(static_cast<std::size_t>(n_) * n_);
    const std::size_t fsz = static_cast<std::size_t>(n_) * std::max(m_, 1);
    fk1_.resize(fsz);
    fk2_.resize(fsz);
    fk3_.resize(fsz);
    fk4_.resize(fsz);
    fs_.resize(fsz);
}

void Stepper::step(std::span<double> x) {
    if (scheme_ == Scheme::rk4)
        rk4(x, {}, h_);
    else
        leapfrog(x, {}, h_);
}

void Stepper::step(std::span<double> x, std::span<double> frame) {
    if (scheme_ == Scheme::rk4)
        rk4(x, frame, h_);
    else
        leapfrog(x, frame, h_);
}

void Stepper::step_with(std::span<double> x, std::span<double> frame, double h_magnitude) {
    const double h = h_ < 0.0 ? -h_magnitude : h_magnitude;
    if (scheme_ == Scheme::rk4)
        rk4(x, frame, h);
    else
        leapfrog(x, frame, h);
}

namespace {

// out(:,j) = J * v(:,j) for column-major n x m frames, row-major J.
inline void jac_apply(const double* jac, const double* v, double* out, int n, int m) {
    for (int j = 0; j < m; ++j) {
        const double* col = v + static_cast<std::size_t>(j) * n;
        double* ocol = out + static_cast<std::size_t>(j) * n;
        for (int i = 0; i < n; ++i) {
            const double* row = jac + static_cast<std::size_t>(i) * n;
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += row[k] * col[k];
            ocol[i] = s;
        }
    }
}

}  // namespace

void Stepper::rk4(std::span<double> x, std::span<double> frame, double h) {
    const int n = n_;
    const bool tangent = !frame.empty();
    const int m = tangent ? static_cast<int>(frame.size()) / n : 0;
    const std::size_t fsz = static_cast<std::size_t>(n) * m;

    sys_->field(x, k1_);
    if (tangent) {
        sys_->jacobian(x, jac_);
        jac_apply(jac_.data(), frame.data(), fk1_.data(), n, m);
    }

    for (int i = 0; i < n; ++i) xs_[i] = x[i] + 0.5 * h * k1_[i];
    sys_->field(xs_, k2_);
    if (tangent) {
        sys_->jacobian(xs_, jac_);
        for (std::size_t i = 0; i < fsz; ++i) fs_[i] = frame[i] + 0.5 * h * fk1_[i];
        jac_apply(jac_.data(), fs_.data(), fk2_.data(), n, m);
    }

    for (int i = 0; i < n; ++i) xs_[i] = x[i] + 0.5 * h * k2_[i];
    sys_->field(xs_, k3_);
    if (tangent) {
        sys_->jacobian(xs_, jac_);
        for (std::size_t i = 0; i < fsz; ++i) fs_[i] = frame[i] + 0.5 * h * fk2_[i];
        jac_apply(jac_.data(), fs_.data(), fk3_.data(), n, m);
    }

    for (int i = 0; i < n; ++i) xs_[i] = x[i] + h * k3_[i];
    sys_->field(xs_, k4_);
    if (tangent) {
        sys_->jacobian(xs_, jac_);
        for (std::size_t i = 0; i < fsz; ++i) fs_[i] = frame[i] + h * fk3_[i];
        jac_apply(jac_.data(), fs_.data(), fk4_.data(), n, m);
    }

    const double w = h / 6.0;
    for (int i = 0; i < n; ++i) x[i] += w * (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]);
    if (tangent)
        for (std::size_t i = 0; i < fsz; ++i)
            frame[i] += w * (fk1_[i] + 2.0 * (fk2_[i] + fk3_[i]) + fk4_[i]);
}

void Stepper::leapfrog(std::span<double> x, std::span<double> frame, double h) {
    // Kick-drift-kick for H = p^2/2 + V(q), layout (q, p): the field's p-part
    // is -grad V and the Jacobian's lower-left block is -Hess V.
    const int n = n_;
    const int d = n / 2;
    const bool tangent = !frame.empty();
    const int m = tangent ? static_cast<int>(frame.size()) / n : 0;

    sys_->field(x, f0_);
    if (tangent) sys_->jacobian(x, jac_);
    for (int i = 0; i < d; ++i) x[d + i] += 0.5 * h * f0_[d + i];   // half kick
    for (int i = 0; i < d; ++i) x[i] += h * x[d + i];               // drift
    sys_->field(x, f1_);
    if (tangent) sys_->jacobian(x, jac2_);
    for (int i = 0; i < d; ++i) x[d + i] += 0.5 * h * f1_[d + i];   // half kick

    if (!tangent) return;
    // Tangent map of the same three shears, using the force Jacobian block
    // df_p/dq = jac[(d+i), j] evaluated at the pre-drift and post-drift points.
    for (int j = 0; j < m; ++j) {
        double* col = frame.data() + static_cast<std::size_t>(j) * n;
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            const double* row = jac_.data() + static_cast<std::size_t>(d + i) * n;
            for (int k = 0; k < d; ++k) s += row[k] * col[k];
            col[d + i] += 0.5 * h * s;
        }
        for (int i = 0; i < d; ++i) col[i] += h * col[d + i];
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            const double* row = jac2_.data() + static_cast<std::size_t>(d + i) * n;
            for (int k = 0; k < d; ++k) s += row[k] * col[k];
            col[d + i] += 0.5 * h * s;
        }
    }
}

StateVector step_flow(const SystemDefinition& sys, std::span<const double> x,
                      const IntegratorConfig& cfg) {
    if (!all_finite(x)) throw std::invalid_argument("step_flow: non-finite state");
    StateVector out(x.begin(), x.end());
    Stepper st(sys, cfg);
    st.step(out);
    if (!all_finite(out))
        throw IntegrationFailure(st.signed_dt(), StateVector(x.begin(), x.end()),
                                 "step_flow: non-finite result");
    return out;
}

Matrix step_tangent(const SystemDefinition& sys, std::span<const double> x, const Matrix& frame,
                    const IntegratorConfig& cfg) {
    if (frame.rows != sys.dim) throw std::invalid_argument("step_tangent: frame row mismatch");
    if (!all_finite(frame.a)) throw std::invalid_argument("step_tangent: non-finite frame");
    // Matrix storage is row-major; the stepper wants column-major columns.
    Matrix ft = transpose(frame);
    StateVector xs(x.begin(), x.end());
    Stepper st(sys, cfg, frame.cols);
    st.step(xs, ft.a);
    if (!all_finite(ft.a))
        throw std::runtime_error(
            "step_tangent: frame overflow; renormalize on a shorter interval");
    return transpose(ft);
}

long long step_count(double t, double dt) {
    const double ratio = t / dt;
    const long long k = std::llround(ratio);
    if (std::abs(ratio - static_cast<double>(k)) > 1e-9 * std::max(1.0, std::abs(ratio)))
        throw std::invalid_argument("time span is not a multiple of the step");
    return k;
}

TangentTrajectory evolve(const SystemDefinition& sys, std::span<const double> x0,
                         const Matrix& frame0, const IntegratorConfig& cfg, double t_span,
                         double sample_every) {
    if (t_span < 0.0) throw std::invalid_argument("evolve: t_span must be >= 0");
    if (!all_finite(x0)) throw std::invalid_argument("evolve: non-finite initial state");
    const int n = sys.dim;
    const int m = frame0.empty() ? 0 : frame0.cols;
    if (m > 0 && frame0.rows != n) throw std::invalid_argument("evolve: frame row mismatch");

    const long long total = step_count(t_span, cfg.step);
    long long stride = 1;
    if (total > 0) {
        stride = step_count(sample_every, cfg.step);
        if (stride < 1) throw std::invalid_argument("evolve: sample_every must be >= step");
    }

    TangentTrajectory traj;
    traj.dim = n;
    traj.frame_cols = m;
    const std::size_t samples = static_cast<std::size_t>(total / stride) + 1;
    traj.times.reserve(samples);
    traj.states.reserve(samples * n);
    if (m > 0) traj.frames.reserve(samples * n * m);

    StateVector x(x0.begin(), x0.end());
    Vec frame;
    if (m > 0) {
        Matrix ft = transpose(frame0);
        frame = std::move(ft.a);
    }
    Stepper st(sys, cfg, m);
    const double h = st.signed_dt();

    auto record = [&](long long k) {
        traj.times.push_back(static_cast<double>(k) * h);
        traj.states.insert(traj.states.end(), x.begin(), x.end());
        if (m > 0) traj.frames.insert(traj.frames.end(), frame.begin(), frame.end());
    };
    record(0);
    for (long long k = 1; k <= total; ++k) {
        if (m > 0)
            st.step(x, frame);
        else
            st.step(x);
        if (!all_finite(x) || (m > 0 && !all_finite(frame)))
            throw IntegrationFailure(static_cast<double>(k) * h, x,
                                     "evolve: non-finite state at t = " +
                                         std::to_string(static_cast<double>(k) * h));
        if (k % stride == 0) record(k);
    }
    return traj;
}

}  // namespace clvlab
