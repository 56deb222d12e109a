#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "clvlab/core.hpp"

namespace clvlab {

// Known eigen-structure of a linear system, used as the test oracle: the
// Lyapunov exponents are the eigenvalue real parts and the covariant vectors
// are the eigenvectors.
struct LinearModes {
    Vec exponents;   // descending
    Matrix vectors;  // unit eigenvector per column, matching `exponents`
};

struct LinearSystem {
    Matrix a;
    SystemDefinition def;
    std::optional<LinearModes> modes;
};

// F(x) = A x for trace-free A (volume preservation). For 2x2 matrices with a
// real simple spectrum the eigen oracle is filled in closed form; other sizes
// get one only via make_linear_from_modes.
LinearSystem make_linear(const Matrix& a, double trace_tol = 1e-12);

// Builds A = V diag(lambda) V^-1 from a prescribed real simple spectrum, so
// the oracle is exact by construction. Eigenvalues must sum to zero.
LinearSystem make_linear_from_modes(const Vec& eigenvalues, const Matrix& eigenvectors);

struct HenonHeilesSpec {
    double coupling = 1.0;  // cubic-term strength
    double energy = 0.0;
};

// H = (px^2 + py^2)/2 + (x^2 + y^2)/2 + coupling (x^2 y - y^3/3),
// state layout (x, y, px, py).
SystemDefinition make_henon_heiles(const HenonHeilesSpec& spec);

// State on the section plane x = 0 with p_x > 0 solved from the energy;
// throws when (y, p_y) is energetically inaccessible.
StateVector henon_heiles_state(const HenonHeilesSpec& spec, double y, double p_y);

// Seeded rejection sampling of section-plane states with H = energy.
std::vector<StateVector> sample_energy_surface(const HenonHeilesSpec& spec, int count,
                                               std::uint64_t seed);

}  // namespace clvlab
