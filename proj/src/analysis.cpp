#include "clvlab/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace clvlab {

namespace {

double uniform_spacing(const Vec& times) {
    if (times.size() < 2) throw std::invalid_argument("series needs at least 2 samples");
    const double dt = times[1] - times[0];
    for (std::size_t k = 1; k + 1 < times.size(); ++k)
        if (std::abs((times[k + 1] - times[k]) - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw std::invalid_argument("series times are not uniformly spaced");
    if (dt == 0.0) throw std::invalid_argument("series times are degenerate");
    return dt;
}

double trapezoid_average(const Vec& values) {
    const std::size_t k = values.size();
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < k; ++i) s += values[i];
    return s / static_cast<double>(k - 1);
}

}  // namespace

ScalarFieldSeries make_series(Vec times, Vec values) {
    if (times.size() != values.size())
        throw std::invalid_argument("make_series: length mismatch");
    if (!all_finite(values)) throw std::invalid_argument("make_series: non-finite values");
    ScalarFieldSeries s;
    s.times = std::move(times);
    s.values = std::move(values);
    (void)uniform_spacing(s.times);
    s.running_average.resize(s.values.size());
    s.running_average[0] = s.values[0];
    double acc = 0.0;
    for (std::size_t k = 1; k < s.values.size(); ++k) {
        acc += 0.5 * (s.values[k - 1] + s.values[k]);
        s.running_average[k] = acc / static_cast<double>(k);
    }
    return s;
}

ScalarFieldSeries scalar_c_along(const SystemDefinition& sys, const MetricTensor& g,
                                 const std::vector<ClvSample>& series, int column) {
    if (series.empty()) throw std::invalid_argument("scalar_c_along: empty series");
    const int n = sys.dim;
    Vec times(series.size()), values(series.size());
    Matrix jac(n, n);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const ClvSample& s = series[k];
        Vec w = s.vectors.col(column);
        const double nrm = tangent_norm(w, g);
        if (std::abs(nrm - 1.0) > 1e-8)
            throw std::invalid_argument("scalar_c_along: vector not unit in g at sample " +
                                        std::to_string(k));
        times[k] = s.time;
        if (g.is_identity()) {
            sys.jacobian(s.state, jac.a);
            double c = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) c += w[i] * jac(i, j) * w[j];
            values[k] = c;
        } else {
            const Matrix lgf = metric_lie_derivative(sys, g, s.state);
            double c = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) c += w[i] * lgf(i, j) * w[j];
            values[k] = 0.5 * c;
        }
    }
    return make_series(std::move(times), std::move(values));
}

ScalarFieldSeries scalar_b_from_c(const ScalarFieldSeries& c, const Vec& norms) {
    const std::size_t k = c.values.size();
    if (norms.size() != k) throw std::invalid_argument("scalar_b_from_c: length mismatch");
    for (double n : norms)
        if (!(n > 0.0)) throw std::invalid_argument("scalar_b_from_c: non-positive norm");
    const double dt = uniform_spacing(c.times);
    Vec ln(k);
    for (std::size_t i = 0; i < k; ++i) ln[i] = std::log(norms[i]);
    Vec b(k);
    b[0] = c.values[0] - (-3.0 * ln[0] + 4.0 * ln[1] - ln[2]) / (2.0 * dt);
    for (std::size_t i = 1; i + 1 < k; ++i)
        b[i] = c.values[i] - (ln[i + 1] - ln[i - 1]) / (2.0 * dt);
    b[k - 1] = c.values[k - 1] - (3.0 * ln[k - 1] - 4.0 * ln[k - 2] + ln[k - 3]) / (2.0 * dt);
    return make_series(c.times, std::move(b));
}

AverageResult time_average(const ScalarFieldSeries& series, int nbatch) {
    const std::size_t k = series.values.size();
    if (k < 2) throw std::invalid_argument("time_average: series too short");
    AverageResult r;
    r.value = trapezoid_average(series.values);
    if (k >= static_cast<std::size_t>(2 * nbatch)) {
        const std::size_t bs = k / nbatch;
        Vec means(nbatch);
        for (int b = 0; b < nbatch; ++b) {
            double s = 0.0;
            for (std::size_t i = b * bs; i < (b + 1) * bs; ++i) s += series.values[i];
            means[b] = s / static_cast<double>(bs);
        }
        const double mean = std::accumulate(means.begin(), means.end(), 0.0) / nbatch;
        double var = 0.0;
        for (double v : means) var += (v - mean) * (v - mean);
        var /= (nbatch - 1);
        r.sem = std::sqrt(var / nbatch);
    }
    return r;
}

ScalarFieldSeries gauge_transform(const ScalarFieldSeries& b, const GaugeFunction& phi,
                                  const TangentTrajectory& traj) {
    const std::size_t k = b.values.size();
    if (traj.size() != k) throw std::invalid_argument("gauge_transform: trajectory mismatch");
    for (std::size_t i = 0; i < k; ++i)
        if (std::abs(traj.times[i] - b.times[i]) > 1e-9)
            throw std::invalid_argument("gauge_transform: time grids differ");
    const double dt = uniform_spacing(b.times);
    Vec p(k);
    for (std::size_t i = 0; i < k; ++i) {
        p[i] = phi.phi(traj.state(i));
        if (std::abs(p[i]) > phi.bound + 1e-12 * std::max(1.0, phi.bound))
            throw std::invalid_argument("gauge_transform: phi exceeds its declared bound");
    }
    Vec bp(k);
    bp[0] = b.values[0] - (p[1] - p[0]) / dt;
    for (std::size_t i = 1; i + 1 < k; ++i)
        bp[i] = b.values[i] - (p[i + 1] - p[i - 1]) / (2.0 * dt);
    bp[k - 1] = b.values[k - 1] - (p[k - 1] - p[k - 2]) / dt;
    return make_series(b.times, std::move(bp));
}

double le_integral_estimate(const SystemDefinition& sys, const MetricTensor& g,
                            const std::vector<ClvSample>& series, int column) {
    if (series.size() < 2) throw std::invalid_argument("le_integral_estimate: series too short");
    const int n = sys.dim;
    Vec values(series.size());
    for (std::size_t k = 0; k < series.size(); ++k) {
        const ClvSample& s = series[k];
        const Vec v = s.vectors.col(column);
        const Matrix lgf = metric_lie_derivative(sys, g, s.state);
        double num = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) num += v[i] * lgf(i, j) * v[j];
        const double nrm = tangent_norm(v, g);
        values[k] = num / (2.0 * nrm * nrm);
    }
    return trapezoid_average(values);
}

double le_upper_bound(const SystemDefinition& sys, const MetricTensor& g,
                      const TangentTrajectory& traj) {
    if (traj.size() < 2) throw std::invalid_argument("le_upper_bound: trajectory too short");
    Vec values(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k)
        values[k] = 0.5 * quadratic_form_norm(metric_lie_derivative(sys, g, traj.state(k)), g);
    return trapezoid_average(values);
}

double clf_residual(const SystemDefinition& sys, const std::vector<ClvSample>& series,
                    const ScalarFieldSeries& b, int column) {
    const std::size_t k = series.size();
    if (k < 3) throw std::invalid_argument("clf_residual: need at least 3 samples");
    if (b.values.size() != k) throw std::invalid_argument("clf_residual: series length mismatch");
    Vec times(k);
    for (std::size_t i = 0; i < k; ++i) times[i] = series[i].time;
    const double dt = uniform_spacing(times);
    const int n = sys.dim;

    Matrix jac(n, n);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < k; ++i) {
        const Vec v = series[i].vectors.col(column);
        Vec prev = series[i - 1].vectors.col(column);
        Vec next = series[i + 1].vectors.col(column);
        if (dot(prev, v) < 0.0)
            for (double& e : prev) e = -e;
        if (dot(next, v) < 0.0)
            for (double& e : next) e = -e;
        sys.jacobian(series[i].state, jac.a);
        double r2 = 0.0;
        for (int a = 0; a < n; ++a) {
            double jv = 0.0;
            for (int c = 0; c < n; ++c) jv += jac(a, c) * v[c];
            const double res = (next[a] - prev[a]) / (2.0 * dt) - jv + b.values[i] * v[a];
            r2 += res * res;
        }
        worst = std::max(worst, std::sqrt(r2) / norm2(v));
    }
    return worst;
}

double involutivity_residual(const SystemDefinition& sys,
                             const std::function<TangentVector(std::span<const double>)>& v_eval,
                             const std::function<double(std::span<const double>)>& b_eval,
                             const std::vector<StateVector>& probes, double fd_step) {
    const int n = sys.dim;
    double worst = 0.0;
    Matrix jac(n, n);
    for (const StateVector& x : probes) {
        const Vec v = v_eval(x);
        const Vec f = sys.field_at(x);
        sys.jacobian(x, jac.a);
        // [v, F]^mu = v^nu d_nu F^mu - F^nu d_nu v^mu
        Vec bracket(n, 0.0);
        for (int mu = 0; mu < n; ++mu)
            for (int nu = 0; nu < n; ++nu) bracket[mu] += jac(mu, nu) * v[nu];
        StateVector xp = x, xm = x;
        for (int nu = 0; nu < n; ++nu) {
            xp[nu] += fd_step;
            xm[nu] -= fd_step;
            const Vec vp = v_eval(xp);
            const Vec vm = v_eval(xm);
            for (int mu = 0; mu < n; ++mu)
                bracket[mu] -= f[nu] * (vp[mu] - vm[mu]) / (2.0 * fd_step);
            xp[nu] = x[nu];
            xm[nu] = x[nu];
        }
        const double bval = b_eval(x);
        double r2 = 0.0;
        for (int mu = 0; mu < n; ++mu) {
            const double res = bracket[mu] - bval * v[mu];
            r2 += res * res;
        }
        worst = std::max(worst, std::sqrt(r2) / norm2(v));
    }
    return worst;
}

std::vector<ClvSample> flow_direction_samples(const SystemDefinition& sys,
                                              const TangentTrajectory& traj) {
    const int n = sys.dim;
    std::vector<ClvSample> out(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        ClvSample& s = out[k];
        s.time = traj.times[k];
        const auto x = traj.state(k);
        s.state.assign(x.begin(), x.end());
        Vec f = sys.field_at(x);
        const double nrm = norm2(f);
        if (!(nrm > 0.0))
            throw std::runtime_error("flow_direction_samples: F vanishes along the trajectory");
        s.vectors = Matrix(n, 1);
        for (int i = 0; i < n; ++i) s.vectors(i, 0) = f[i] / nrm;
    }
    return out;
}

void write_series_csv(const std::filesystem::path& path, const ScalarFieldSeries& series) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::fputs("t,value,running_average\n", f);
    for (std::size_t k = 0; k < series.times.size(); ++k)
        std::fprintf(f, "%.17g,%.17g,%.17g\n", series.times[k], series.values[k],
                     series.running_average[k]);
    std::fclose(f);
}

}  // namespace clvlab
