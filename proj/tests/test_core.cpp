#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "clvlab/core.hpp"
#include "clvlab/rng.hpp"
#include "clvlab/systems.hpp"

using namespace clvlab;

namespace {

Matrix diag2(double a, double b) {
    Matrix m(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

SystemDefinition rotation_field() {
    Matrix a(2, 2);
    a(0, 1) = -1.0;
    a(1, 0) = 1.0;
    return make_linear(a).def;
}

}  // namespace

TEST_CASE("tangent_norm") {
    const MetricTensor id2 = MetricTensor::identity(2);
    CHECK(tangent_norm(Vec{3.0, 4.0}, id2) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(tangent_norm(Vec{0.0, 0.0}, id2) == 0.0);
    const MetricTensor g(diag2(4.0, 1.0));
    CHECK(tangent_norm(Vec{1.0, 0.0}, g) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(tangent_norm(Vec{1.0, 0.0, 0.0}, id2), std::invalid_argument);
}

TEST_CASE("tangent_norm homogeneity") {
    Lcg64 rng(7);
    Matrix gm(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j <= i; ++j) {
            gm(i, j) = rng.uniform(-0.2, 0.2);
            gm(j, i) = gm(i, j);
        }
    for (int i = 0; i < 3; ++i) gm(i, i) += 1.5;
    const MetricTensor g(gm);
    for (int trial = 0; trial < 100; ++trial) {
        Vec v(3);
        for (double& c : v) c = rng.uniform(-2.0, 2.0);
        const double s = rng.uniform(-5.0, 5.0);
        Vec sv = v;
        for (double& c : sv) c *= s;
        CHECK(tangent_norm(sv, g) ==
              doctest::Approx(std::abs(s) * tangent_norm(v, g)).epsilon(1e-12));
    }
}

TEST_CASE("MetricTensor rejects non-SPD input") {
    CHECK_THROWS_AS(MetricTensor(diag2(1.0, -1.0)), std::invalid_argument);
    Matrix asym(2, 2);
    asym(0, 0) = 1.0;
    asym(1, 1) = 1.0;
    asym(0, 1) = 0.3;
    CHECK_THROWS_AS((void)MetricTensor(asym), std::invalid_argument);
}

TEST_CASE("metric_lie_derivative") {
    const MetricTensor id2 = MetricTensor::identity(2);

    SUBCASE("diagonal linear field") {
        const SystemDefinition sys = make_linear(diag2(1.0, -1.0)).def;
        const Matrix lg = metric_lie_derivative(sys, id2, Vec{0.3, -0.7});
        CHECK(lg(0, 0) == doctest::Approx(2.0));
        CHECK(lg(1, 1) == doctest::Approx(-2.0));
        CHECK(lg(0, 1) == doctest::Approx(0.0));
        CHECK(lg(1, 0) == doctest::Approx(0.0));
    }
    SUBCASE("zero field") {
        const SystemDefinition sys = make_linear(Matrix(2, 2)).def;
        const Matrix lg = metric_lie_derivative(sys, id2, Vec{1.0, 2.0});
        for (double v : lg.a) CHECK(v == 0.0);
    }
    SUBCASE("rotation field cancels") {
        const Matrix lg = metric_lie_derivative(rotation_field(), id2, Vec{0.5, 0.5});
        for (double v : lg.a) CHECK(v == doctest::Approx(0.0));
    }
    SUBCASE("constant non-identity metric") {
        const SystemDefinition sys = make_linear(diag2(1.0, -1.0)).def;
        const MetricTensor g(diag2(4.0, 1.0));
        const Matrix lg = metric_lie_derivative(sys, g, Vec{0.0, 0.0});
        // g J + J^T g for J = diag(1,-1)
        CHECK(lg(0, 0) == doctest::Approx(8.0));
        CHECK(lg(1, 1) == doctest::Approx(-2.0));
        CHECK(lg(0, 1) == doctest::Approx(0.0));
    }
}

TEST_CASE("quadratic_form_norm") {
    const MetricTensor id2 = MetricTensor::identity(2);
    CHECK(quadratic_form_norm(diag2(2.0, -2.0), id2) ==
          doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(quadratic_form_norm(Matrix(2, 2), id2) == 0.0);
    const MetricTensor id3 = MetricTensor::identity(3);
    CHECK(quadratic_form_norm(Matrix::identity(3), id3) ==
          doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("quadratic form bound |v a v| <= ||a|| ||v||^2") {
    Lcg64 rng(11);
    const MetricTensor id3 = MetricTensor::identity(3);
    for (int trial = 0; trial < 1000; ++trial) {
        Matrix a(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j <= i; ++j) {
                a(i, j) = rng.uniform(-2.0, 2.0);
                a(j, i) = a(i, j);
            }
        Vec v(3);
        for (double& c : v) c = rng.uniform(-2.0, 2.0);
        double vav = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) vav += v[i] * a(i, j) * v[j];
        const double nv = tangent_norm(v, id3);
        CHECK(std::abs(vav) <= quadratic_form_norm(a, id3) * nv * nv + 1e-12);
    }
}

TEST_CASE("quadratic_form_norm with non-identity metric is consistent") {
    // For g = diag(4,1): ||a|| = sqrt(tr(g^-1 a g^-1 a)); check the bound
    // still holds with g-norms.
    const MetricTensor g(diag2(4.0, 1.0));
    Lcg64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        Matrix a(2, 2);
        a(0, 0) = rng.uniform(-2.0, 2.0);
        a(1, 1) = rng.uniform(-2.0, 2.0);
        a(0, 1) = a(1, 0) = rng.uniform(-2.0, 2.0);
        Vec v{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        double vav = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) vav += v[i] * a(i, j) * v[j];
        const double nv = tangent_norm(v, g);
        CHECK(std::abs(vav) <= quadratic_form_norm(a, g) * nv * nv + 1e-12);
    }
}

TEST_CASE("analytic Jacobians match finite differences at random probes") {
    const SystemDefinition hh = make_henon_heiles({2.0, 0.037});
    CHECK(validate_jacobian(hh, 100, 42).ok);

    Lcg64 rng(5);
    Matrix a(4, 4);
    double tr = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            a(i, j) = rng.uniform(-1.0, 1.0);
            if (i == j && i < 3) tr += a(i, j);
        }
    a(3, 3) = -tr;
    CHECK(validate_jacobian(make_linear(a).def, 100, 43).ok);
}

TEST_CASE("jacobian validator flags a wrong Jacobian") {
    SystemDefinition sys = make_linear(diag2(1.0, -1.0)).def;
    sys.jacobian = [](std::span<const double>, std::span<double> j) {
        j[0] = 1.0;
        j[1] = 0.5;  // wrong entry
        j[2] = 0.0;
        j[3] = -1.0;
    };
    CHECK_FALSE(validate_jacobian(sys, 10, 44).ok);
}
