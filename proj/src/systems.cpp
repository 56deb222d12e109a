#include "clvlab/systems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "clvlab/rng.hpp"

namespace clvlab {

namespace {

std::optional<LinearModes> closed_form_modes_2x2(const Matrix& a) {
    const double tr = a(0, 0) + a(1, 1);
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double disc = tr * tr / 4.0 - det;
    if (disc <= 1e-12) return std::nullopt;  // complex or (near-)degenerate spectrum
    const double root = std::sqrt(disc);
    LinearModes m;
    m.exponents = {tr / 2.0 + root, tr / 2.0 - root};
    m.vectors = Matrix(2, 2);
    for (int j = 0; j < 2; ++j) {
        const double lam = m.exponents[j];
        // Row of (A - lam I) with the larger norm gives the eigenvector as its
        // orthogonal complement.
        const double r0[2] = {a(0, 0) - lam, a(0, 1)};
        const double r1[2] = {a(1, 0), a(1, 1) - lam};
        const double n0 = r0[0] * r0[0] + r0[1] * r0[1];
        const double n1 = r1[0] * r1[0] + r1[1] * r1[1];
        double v[2];
        if (n0 >= n1) {
            v[0] = -r0[1];
            v[1] = r0[0];
        } else {
            v[0] = -r1[1];
            v[1] = r1[0];
        }
        const double nrm = std::sqrt(v[0] * v[0] + v[1] * v[1]);
        m.vectors(0, j) = v[0] / nrm;
        m.vectors(1, j) = v[1] / nrm;
    }
    return m;
}

SystemDefinition linear_def(const Matrix& a) {
    const int n = a.rows;
    SystemDefinition def;
    def.dim = n;
    def.name = "linear";
    def.field = [a, n](std::span<const double> x, std::span<double> f) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += a.a[static_cast<std::size_t>(i) * n + j] * x[j];
            f[i] = s;
        }
    };
    def.jacobian = [a](std::span<const double>, std::span<double> j) {
        std::copy(a.a.begin(), a.a.end(), j.begin());
    };
    return def;
}

}  // namespace

LinearSystem make_linear(const Matrix& a, double trace_tol) {
    if (a.rows != a.cols) throw std::invalid_argument("make_linear: matrix not square");
    if (!all_finite(a.a)) throw std::invalid_argument("make_linear: non-finite entries");
    const double tr = trace(a);
    if (std::abs(tr) > trace_tol)
        throw std::invalid_argument("make_linear: trace(A) = " + std::to_string(tr) +
                                    " violates volume preservation");
    LinearSystem sys{a, linear_def(a), std::nullopt};
    if (a.rows == 2) sys.modes = closed_form_modes_2x2(a);
    return sys;
}

LinearSystem make_linear_from_modes(const Vec& eigenvalues, const Matrix& eigenvectors) {
    const int n = static_cast<int>(eigenvalues.size());
    if (eigenvectors.rows != n || eigenvectors.cols != n)
        throw std::invalid_argument("make_linear_from_modes: shape mismatch");
    double sum = 0.0;
    for (double lam : eigenvalues) sum += lam;
    if (std::abs(sum) > 1e-10)
        throw std::invalid_argument("make_linear_from_modes: eigenvalues must sum to zero");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(eigenvalues[i] - eigenvalues[j]) < 1e-9)
                throw std::invalid_argument("make_linear_from_modes: spectrum not simple");

    Matrix lam_v = eigenvectors;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) lam_v(i, j) *= eigenvalues[j];
    Matrix a = matmul(lam_v, inverse(eigenvectors));
    // The similarity transform leaves O(eps) trace residue; remove it so the
    // make_linear volume-preservation gate sees an exactly trace-free matrix.
    const double excess = trace(a) / n;
    for (int i = 0; i < n; ++i) a(i, i) -= excess;

    LinearModes modes;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return eigenvalues[i] > eigenvalues[j]; });
    modes.exponents.resize(n);
    modes.vectors = Matrix(n, n);
    for (int k = 0; k < n; ++k) {
        modes.exponents[k] = eigenvalues[order[k]];
        Vec v = eigenvectors.col(order[k]);
        const double nrm = norm2(v);
        for (int i = 0; i < n; ++i) modes.vectors(i, k) = v[i] / nrm;
    }
    LinearSystem sys{a, linear_def(a), std::move(modes)};
    return sys;
}

SystemDefinition make_henon_heiles(const HenonHeilesSpec& spec) {
    if (spec.energy < 0.0)
        throw std::invalid_argument("make_henon_heiles: negative energy");
    const double lam = spec.coupling;
    SystemDefinition def;
    def.dim = 4;
    def.is_hamiltonian = true;
    def.name = "henon_heiles";
    def.field = [lam](std::span<const double> s, std::span<double> f) {
        const double x = s[0], y = s[1];
        f[0] = s[2];
        f[1] = s[3];
        f[2] = -x - 2.0 * lam * x * y;
        f[3] = -y - lam * (x * x - y * y);
    };
    def.jacobian = [lam](std::span<const double> s, std::span<double> j) {
        const double x = s[0], y = s[1];
        std::fill(j.begin(), j.end(), 0.0);
        j[0 * 4 + 2] = 1.0;
        j[1 * 4 + 3] = 1.0;
        j[2 * 4 + 0] = -1.0 - 2.0 * lam * y;
        j[2 * 4 + 1] = -2.0 * lam * x;
        j[3 * 4 + 0] = -2.0 * lam * x;
        j[3 * 4 + 1] = -1.0 + 2.0 * lam * y;
    };
    def.invariant = [lam](std::span<const double> s) {
        const double x = s[0], y = s[1], px = s[2], py = s[3];
        return 0.5 * (px * px + py * py) + 0.5 * (x * x + y * y) +
               lam * (x * x * y - y * y * y / 3.0);
    };
    return def;
}

namespace {

// Potential restricted to the section plane x = 0.
double section_potential(double coupling, double y) {
    return 0.5 * y * y - coupling * y * y * y / 3.0;
}

}  // namespace

StateVector henon_heiles_state(const HenonHeilesSpec& spec, double y, double p_y) {
    const double rest = 2.0 * (spec.energy - section_potential(spec.coupling, y)) - p_y * p_y;
    if (rest < 0.0)
        throw std::invalid_argument(
            "henon_heiles_state: (y, p_y) = (" + std::to_string(y) + ", " + std::to_string(p_y) +
            ") is not energetically accessible at H = " + std::to_string(spec.energy));
    return {0.0, y, std::sqrt(rest), p_y};
}

std::vector<StateVector> sample_energy_surface(const HenonHeilesSpec& spec, int count,
                                               std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_energy_surface: count must be >= 1");
    if (spec.energy == 0.0) return std::vector<StateVector>(count, StateVector{0, 0, 0, 0});

    const double lam = spec.coupling;
    // Bounding y-interval of the accessible section region. For lam > 0 the
    // section potential has a local maximum 1/(6 lam^2) at y = 1/lam; above
    // that barrier the region is unbounded and sampling is refused.
    double y_lo, y_hi;
    if (lam > 0.0) {
        if (spec.energy >= 1.0 / (6.0 * lam * lam))
            throw std::invalid_argument("sample_energy_surface: energy above the escape barrier");
        auto bisect = [&](double a, double b) {
            // root of U(y) - H between a (inside) and b (outside)
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                if (section_potential(lam, mid) < spec.energy)
                    a = mid;
                else
                    b = mid;
            }
            return 0.5 * (a + b);
        };
        double out = -1.0 / lam;
        while (section_potential(lam, out) < spec.energy) out *= 2.0;
        y_lo = bisect(0.0, out);
        y_hi = bisect(0.0, 1.0 / lam);
    } else if (lam == 0.0) {
        y_hi = std::sqrt(2.0 * spec.energy);
        y_lo = -y_hi;
    } else {
        throw std::invalid_argument("sample_energy_surface: coupling must be >= 0");
    }
    const double p_max = std::sqrt(2.0 * spec.energy);

    Lcg64 rng(seed);
    std::vector<StateVector> states;
    states.reserve(count);
    int attempts = 0;
    const int max_attempts = 10000 * count;
    while (static_cast<int>(states.size()) < count) {
        if (++attempts > max_attempts)
            throw std::runtime_error("sample_energy_surface: rejection sampling did not converge");
        const double y = rng.uniform(y_lo, y_hi);
        const double p_y = rng.uniform(-p_max, p_max);
        const double rest = 2.0 * (spec.energy - section_potential(lam, y)) - p_y * p_y;
        if (rest < 0.0) continue;
        states.push_back({0.0, y, std::sqrt(rest), p_y});
    }
    return states;
}

}  // namespace clvlab
