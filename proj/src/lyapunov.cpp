#include "clvlab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "clvlab/rng.hpp"

namespace clvlab {

namespace {

// Sample standard error of the mean from `nbatch` batch means.
double batch_means_stderr(std::span<const double> series, int nbatch) {
    const std::size_t k = series.size();
    if (k < static_cast<std::size_t>(2 * nbatch)) return 0.0;
    const std::size_t bs = k / nbatch;
    Vec means(nbatch, 0.0);
    for (int b = 0; b < nbatch; ++b) {
        double s = 0.0;
        for (std::size_t i = b * bs; i < (b + 1) * bs; ++i) s += series[i];
        means[b] = s / static_cast<double>(bs);
    }
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / nbatch;
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    var /= (nbatch - 1);
    return std::sqrt(var / nbatch);
}

Matrix initial_frame(int n, int m) {
    Matrix f(n, m);
    for (int j = 0; j < m; ++j) f(j, j) = 1.0;
    return f;
}

// Advances state and column-major frame by `steps` integration steps, then
// re-orthonormalizes. Returns the R factor.
Matrix advance_and_qr(Stepper& st, StateVector& x, Vec& frame, long long steps, int n, int m) {
    for (long long s = 0; s < steps; ++s) st.step(x, frame);
    if (!all_finite(x))
        throw IntegrationFailure(0.0, x, "lyapunov: trajectory left the finite domain");
    if (!all_finite(frame))
        throw std::runtime_error("lyapunov: tangent frame overflow; use a smaller qr_interval");
    Matrix b(n, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) b(i, j) = frame[static_cast<std::size_t>(j) * n + i];
    QrFactors f = mgs_qr(b);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) frame[static_cast<std::size_t>(j) * n + i] = f.q(i, j);
    return std::move(f.r);
}

}  // namespace

void fix_clv_sign(std::span<double> v) {
    double amax = 0.0;
    for (double c : v) amax = std::max(amax, std::abs(c));
    if (amax == 0.0) return;
    for (double c : v) {
        if (std::abs(c) > 1e-9 * amax) {
            if (c < 0.0)
                for (double& e : v) e = -e;
            return;
        }
    }
}

LyapunovSpectrum benettin_spectrum(const SystemDefinition& sys, std::span<const double> x0,
                                   const IntegratorConfig& cfg, double t_total,
                                   double qr_interval, int m, double t_transient) {
    const int n = sys.dim;
    if (m < 1 || m > n) throw std::invalid_argument("benettin_spectrum: need 1 <= m <= dim");
    if (!(t_total >= qr_interval))
        throw std::invalid_argument("benettin_spectrum: t_total must cover >= 1 interval");
    const long long steps_per = step_count(qr_interval, cfg.step);
    if (steps_per < 1) throw std::invalid_argument("benettin_spectrum: qr_interval < step");
    const long long k_acc = step_count(t_total, qr_interval);
    const long long k_warm = std::llround(t_transient / qr_interval);

    StateVector x(x0.begin(), x0.end());
    Matrix f0 = initial_frame(n, m);
    Vec frame = transpose(f0).a;  // column-major
    Stepper st(sys, cfg, m);

    for (long long k = 0; k < k_warm; ++k) advance_and_qr(st, x, frame, steps_per, n, m);

    LyapunovSpectrum spec;
    spec.direction = cfg.direction;
    spec.qr_interval = qr_interval;
    spec.m = m;
    spec.history.reserve(static_cast<std::size_t>(k_acc) * m);

    Vec sums(m, 0.0);
    std::vector<double> rates(static_cast<std::size_t>(k_acc) * m);
    for (long long k = 0; k < k_acc; ++k) {
        const Matrix r = advance_and_qr(st, x, frame, steps_per, n, m);
        const double t_elapsed = static_cast<double>(k + 1) * qr_interval;
        for (int j = 0; j < m; ++j) {
            const double rate = std::log(r(j, j)) / qr_interval;
            rates[static_cast<std::size_t>(k) * m + j] = rate;
            sums[j] += std::log(r(j, j));
            spec.history.push_back(sums[j] / t_elapsed);
        }
    }

    std::vector<std::pair<double, double>> est(m);  // (exponent, stderr)
    for (int j = 0; j < m; ++j) {
        Vec series(k_acc);
        for (long long k = 0; k < k_acc; ++k) series[k] = rates[static_cast<std::size_t>(k) * m + j];
        est[j] = {sums[j] / (static_cast<double>(k_acc) * qr_interval),
                  batch_means_stderr(series, 10)};
    }
    std::sort(est.begin(), est.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    spec.exponents.resize(m);
    spec.stderrs.resize(m);
    for (int j = 0; j < m; ++j) {
        spec.exponents[j] = est[j].first;
        spec.stderrs[j] = est[j].second;
    }
    spec.final_olv = Matrix(n, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i)
            spec.final_olv(i, j) = frame[static_cast<std::size_t>(j) * n + i];
    return spec;
}

LyapunovSpectrum backward_spectrum(const SystemDefinition& sys, std::span<const double> x0,
                                   const IntegratorConfig& cfg, double t_total,
                                   double qr_interval, int m, double t_transient) {
    IntegratorConfig back = cfg;
    back.direction = TimeDirection::backward;
    return benettin_spectrum(sys, x0, back, t_total, qr_interval, m, t_transient);
}

std::vector<int> degenerate_indices(const LyapunovSpectrum& spec, double gap_floor) {
    std::vector<int> flagged;
    for (int j = 0; j + 1 < spec.m; ++j) {
        const double gap = spec.exponents[j] - spec.exponents[j + 1];
        const double err = spec.stderrs[j] + spec.stderrs[j + 1];
        if (gap < 10.0 * err + gap_floor) {
            if (flagged.empty() || flagged.back() != j) flagged.push_back(j);
            flagged.push_back(j + 1);
        }
    }
    return flagged;
}

namespace {

std::vector<ClvSample> ginelli_clv_once(const SystemDefinition& sys, std::span<const double> x0,
                                        const IntegratorConfig& cfg, const GinelliParams& p,
                                        bool& retry_smaller_interval) {
    retry_smaller_interval = false;
    const int n = sys.dim;
    const int m = p.m;
    if (m < 1 || m > n) throw std::invalid_argument("ginelli_clv: need 1 <= m <= dim");
    if (!(p.t_transient > 0.0 && p.t_store > 0.0 && p.t_discard > 0.0))
        throw std::invalid_argument("ginelli_clv: all window lengths must be > 0");
    const long long steps_per = step_count(p.qr_interval, cfg.step);
    if (steps_per < 1) throw std::invalid_argument("ginelli_clv: qr_interval < step");
    const long long k_trans = std::llround(p.t_transient / p.qr_interval);
    const long long k_keep = step_count(p.t_store, p.qr_interval);
    const long long k_disc = std::llround(p.t_discard / p.qr_interval);
    const long long k_stored = k_keep + k_disc;

    StateVector x(x0.begin(), x0.end());
    Vec frame = transpose(initial_frame(n, m)).a;
    Stepper st(sys, cfg, m);

    for (long long k = 0; k < k_trans; ++k) advance_and_qr(st, x, frame, steps_per, n, m);

    // Forward storage pass: boundary k holds Q_k; R_k maps interval k-1 -> k.
    QrStore store(n, m, p.memory_budget);
    std::vector<double> boundary_states;
    boundary_states.reserve(static_cast<std::size_t>(k_stored + 1) * n);
    auto push_state = [&] { boundary_states.insert(boundary_states.end(), x.begin(), x.end()); };
    auto frame_as_matrix = [&] {
        Matrix q(n, m);
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < n; ++i) q(i, j) = frame[static_cast<std::size_t>(j) * n + i];
        return q;
    };
    push_state();
    Matrix q0 = frame_as_matrix();
    for (long long k = 1; k <= k_stored; ++k) {
        Matrix r = advance_and_qr(st, x, frame, steps_per, n, m);
        store.push(frame_as_matrix(), r);
        push_state();
    }

    // Backward pass: C_k = R_{k+1}^{-1} C_{k+1}, columns renormalized. C stays
    // upper triangular.
    Lcg64 rng(p.seed);
    Matrix c(m, m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < j; ++i) c(i, j) = rng.uniform(-1.0, 1.0);
        c(j, j) = rng.uniform(0.5, 1.5);
    }

    std::vector<ClvSample> samples(static_cast<std::size_t>(k_keep) + 1);
    Matrix q(n, m), r(m, m);
    Vec col(m);
    auto emit = [&](long long k, const Matrix& qk) {
        if (k > k_keep) return;
        ClvSample& s = samples[static_cast<std::size_t>(k)];
        s.time = p.t_transient + static_cast<double>(k) * p.qr_interval;
        const double* xs = boundary_states.data() + static_cast<std::size_t>(k) * n;
        s.state.assign(xs, xs + n);
        s.vectors = Matrix(n, m);
        for (int j = 0; j < m; ++j) {
            Vec v(n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int l = 0; l <= j; ++l) v[i] += qk(i, l) * c(l, j);
            const double nrm = norm2(v);
            for (int i = 0; i < n; ++i) s.vectors(i, j) = v[i] / nrm;
        }
        for (int j = 0; j < m; ++j) {
            Vec v = s.vectors.col(j);
            fix_clv_sign(v);
            s.vectors.set_col(j, v);
        }
    };

    for (long long k = k_stored; k >= 1; --k) {
        store.load(static_cast<std::size_t>(k - 1), q, r);
        emit(k, q);
        if (upper_condition(r) > 1e12) {
            retry_smaller_interval = true;
            return {};
        }
        // C <- R^-1 C, column by column, then renormalize.
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < m; ++i) col[i] = i <= j ? c(i, j) : 0.0;
            upper_solve(r, col);
            double nrm = 0.0;
            for (int i = 0; i <= j; ++i) nrm += col[i] * col[i];
            nrm = std::sqrt(nrm);
            for (int i = 0; i <= j; ++i) c(i, j) = col[i] / nrm;
        }
    }
    emit(0, q0);
    return samples;
}

}  // namespace

std::vector<ClvSample> ginelli_clv(const SystemDefinition& sys, std::span<const double> x0,
                                   const IntegratorConfig& cfg, const GinelliParams& params) {
    bool retry = false;
    std::vector<ClvSample> out = ginelli_clv_once(sys, x0, cfg, params, retry);
    if (!retry) return out;
    GinelliParams half = params;
    half.qr_interval = 0.5 * params.qr_interval;
    out = ginelli_clv_once(sys, x0, cfg, half, retry);
    if (retry)
        throw std::runtime_error("ginelli_clv: R factors ill-conditioned even after halving "
                                 "qr_interval");
    return out;
}

std::pair<double, double> clv_exponent_check(const SystemDefinition& sys,
                                             std::span<const double> x, std::span<const double> v,
                                             const IntegratorConfig& cfg, double t_probe) {
    const int n = sys.dim;
    auto grow = [&](TimeDirection dir) {
        IntegratorConfig c = cfg;
        c.direction = dir;
        Stepper st(sys, c, 1);
        StateVector xs(x.begin(), x.end());
        Vec col(v.begin(), v.end());
        const double v0 = norm2(col);
        if (v0 == 0.0) throw std::invalid_argument("clv_exponent_check: zero vector");
        double log_growth = -std::log(v0);
        const long long total = step_count(t_probe, cfg.step);
        const long long renorm_every = std::max<long long>(1, step_count(1.0, cfg.step));
        for (long long k = 0; k < total; ++k) {
            st.step(xs, col);
            if ((k + 1) % renorm_every == 0) {
                const double nrm = norm2(col);
                log_growth += std::log(nrm);
                for (double& e : col) e /= nrm;
            }
        }
        log_growth += std::log(norm2(col));
        return log_growth;
    };
    (void)n;
    const double lf = grow(TimeDirection::forward) / t_probe;
    const double lb = grow(TimeDirection::backward) / (-t_probe);
    return {lf, lb};
}

}  // namespace clvlab
