#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <numbers>

#include "clvlab/poincare.hpp"
#include "clvlab/systems.hpp"

using namespace clvlab;

namespace {

LinearSystem harmonic_oscillator() {
    Matrix a(2, 2);
    a(0, 1) = 1.0;
    a(1, 0) = -1.0;
    return make_linear(a);
}

}  // namespace

TEST_CASE("detect_crossings") {
    const auto sys = harmonic_oscillator();
    // x(t) = cos t, xdot = -sin t: downward crossings of x = 0 at pi/2 + 2 pi k
    const auto traj =
        evolve(sys.def, Vec{1.0, 0.0}, Matrix{}, {Scheme::rk4, 1e-3}, 20.0, 1e-3);

    SUBCASE("downward crossings at pi/2 + 2 pi k") {
        SectionSpec spec;
        spec.plane_index = 0;
        spec.direction = -1;
        spec.projection = {0, 1};
        const auto brackets = detect_crossings(traj, spec);
        REQUIRE(brackets.size() == 3);  // pi/2 + 2 pi k for k = 0,1,2 within t <= 20
        for (std::size_t k = 0; k < brackets.size(); ++k) {
            const double expected = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * k;
            CHECK(traj.times[brackets[k].index_before] == doctest::Approx(expected).epsilon(1e-3));
        }
    }
    SUBCASE("direction filter keeps only upward crossings") {
        SectionSpec spec;
        spec.plane_index = 0;
        spec.direction = +1;
        spec.projection = {0, 1};
        const auto brackets = detect_crossings(traj, spec);
        REQUIRE(brackets.size() == 3);
        CHECK(traj.times[brackets[0].index_before] ==
              doctest::Approx(3.0 * std::numbers::pi / 2.0).epsilon(1e-3));
    }
    SUBCASE("constant trajectory off the plane yields nothing") {
        const auto zsys = make_linear(Matrix(2, 2));
        const auto flat =
            evolve(zsys.def, Vec{0.5, 0.0}, Matrix{}, {Scheme::rk4, 1e-2}, 1.0, 1e-2);
        CHECK(detect_crossings(flat, SectionSpec{0, 0.0, +1, {0, 1}}).empty());
    }
}

TEST_CASE("refine_crossing") {
    const auto sys = harmonic_oscillator();
    const IntegratorConfig cfg{Scheme::rk4, 1e-3};
    const auto traj = evolve(sys.def, Vec{1.0, 0.0}, Matrix::identity(2), cfg, 20.0, 1e-3);
    SectionSpec spec;
    spec.plane_index = 0;
    spec.direction = -1;
    spec.projection = {0, 1};
    const auto brackets = detect_crossings(traj, spec);
    REQUIRE(!brackets.empty());

    SUBCASE("plane coordinate refined below 1e-10, analytic root recovered") {
        const auto rc = refine_crossing(sys.def, traj, brackets[0], spec, cfg);
        CHECK(std::abs(rc.state[0]) < 1e-10);
        CHECK(rc.time == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-9));
        CHECK(rc.frame.rows == 2);
    }
    SUBCASE("energy is conserved through refinement") {
        const auto rc = refine_crossing(sys.def, traj, brackets[1], spec, cfg);
        const double e0 = 0.5 * (1.0 * 1.0);
        const double e = 0.5 * (rc.state[0] * rc.state[0] + rc.state[1] * rc.state[1]);
        CHECK(e == doctest::Approx(e0).epsilon(1e-10));
    }
    SUBCASE("sample exactly on the plane is returned unchanged") {
        TangentTrajectory t2;
        t2.dim = 2;
        t2.frame_cols = 0;
        t2.times = {0.0, 1.0};
        t2.states = {0.0, 1.0, 0.5, 0.5};
        CrossingBracket br{0, true};
        const auto rc = refine_crossing(sys.def, t2, br, SectionSpec{0, 0.0, +1, {0, 1}}, cfg);
        CHECK(rc.time == 0.0);
        CHECK(rc.state[0] == 0.0);
        CHECK(rc.state[1] == 1.0);
    }
    SUBCASE("bracket without sign change is a contract violation") {
        CrossingBracket bogus{5, false};
        SectionSpec off;
        off.plane_value = 55.0;  // no crossing there
        off.projection = {0, 1};
        CHECK_THROWS_AS(refine_crossing(sys.def, traj, bogus, off, cfg), std::invalid_argument);
    }
}

TEST_CASE("section_portrait on the integrable limit traces ellipses") {
    // coupling 0: two decoupled oscillators; section x = 0 with px > 0 shows
    // the (y, p_y) oscillator ellipse y^2 + p_y^2 = const.
    const HenonHeilesSpec spec{0.0, 0.05};
    const SystemDefinition sys = make_henon_heiles(spec);
    const std::vector<StateVector> ics = {henon_heiles_state(spec, 0.1, 0.1),
                                          henon_heiles_state(spec, 0.2, 0.0)};
    const auto portraits =
        section_portrait(sys, SectionSpec{}, ics, {Scheme::leapfrog, 1e-3}, 500.0, 1);
    REQUIRE(portraits.size() == 2);
    for (const auto& p : portraits) {
        REQUIRE_FALSE(p.failed);
        REQUIRE(p.points.size() > 10);
        const double r0 = p.points[0].coords[0] * p.points[0].coords[0] +
                          p.points[0].coords[1] * p.points[0].coords[1];
        for (const auto& pt : p.points) {
            const double r = pt.coords[0] * pt.coords[0] + pt.coords[1] * pt.coords[1];
            CHECK(r == doctest::Approx(r0).epsilon(1e-6));
        }
        CHECK(std::abs(p.lambda1) < 1e-2);
    }
}

TEST_CASE("refined crossings satisfy the plane and energy constraints") {
    const HenonHeilesSpec spec{1.0, 0.037};
    const SystemDefinition sys = make_henon_heiles(spec);
    const IntegratorConfig cfg{Scheme::leapfrog, 1e-3};
    const StateVector x0 = henon_heiles_state(spec, 0.08, -0.03);
    const double h0 = sys.invariant(x0);
    Matrix f0(4, 1);
    for (int i = 0; i < 4; ++i) f0(i, 0) = 0.5;
    const auto traj = evolve(sys, x0, f0, cfg, 500.0, 1e-3);
    const auto brackets = detect_crossings(traj, SectionSpec{});
    REQUIRE(brackets.size() > 10);
    for (const auto& br : brackets) {
        const auto rc = refine_crossing(sys, traj, br, SectionSpec{}, cfg);
        CHECK(std::abs(rc.state[0]) < 1e-10);
        CHECK(rc.state[2] > 0.0);
        CHECK(std::abs(sys.invariant(rc.state) - h0) <= 1e-8);
    }
}

TEST_CASE("emitted section points carry unit projected vectors") {
    const HenonHeilesSpec spec{1.0, 0.037};
    const SystemDefinition sys = make_henon_heiles(spec);
    const auto ics = sample_energy_surface(spec, 2, 5);
    const auto portraits =
        section_portrait(sys, SectionSpec{}, ics, {Scheme::leapfrog, 1e-3}, 300.0, 1);
    for (const auto& p : portraits) {
        REQUIRE_FALSE(p.failed);
        REQUIRE(!p.points.empty());
        for (const auto& pt : p.points)
            CHECK(std::abs(pt.clv[0] * pt.clv[0] + pt.clv[1] * pt.clv[1] - 1.0) < 1e-12);
    }
}

TEST_CASE("crossing counts are stable under halving the step") {
    const HenonHeilesSpec spec{1.0, 0.037};
    const SystemDefinition sys = make_henon_heiles(spec);
    const StateVector x0 = henon_heiles_state(spec, 0.1, 0.05);
    auto count_at = [&](double dt) {
        const auto traj = evolve(sys, x0, Matrix{}, {Scheme::leapfrog, dt}, 2000.0, dt);
        return detect_crossings(traj, SectionSpec{}).size();
    };
    const double c1 = static_cast<double>(count_at(1e-3));
    const double c2 = static_cast<double>(count_at(5e-4));
    CHECK(std::abs(c1 - c2) / c1 < 0.05);
}

TEST_CASE("portrait isolates per-orbit failures") {
    const HenonHeilesSpec spec{1.0, 0.037};
    const SystemDefinition sys = make_henon_heiles(spec);
    std::vector<StateVector> ics = {henon_heiles_state(spec, 0.1, 0.05),
                                    {1e6, 1e6, 1e6, 1e6}};  // diverges immediately
    const auto portraits = section_portrait(sys, SectionSpec{}, ics, {Scheme::leapfrog, 1e-3},
                                            50.0, 1);
    CHECK_FALSE(portraits[0].failed);
    CHECK(portraits[1].failed);
    CHECK(!portraits[1].error.empty());
}

TEST_CASE("serial and OpenMP portraits are identical") {
    const HenonHeilesSpec spec{1.0, 0.037};
    const SystemDefinition sys = make_henon_heiles(spec);
    const auto ics = sample_energy_surface(spec, 4, 5);
    const IntegratorConfig cfg{Scheme::leapfrog, 1e-3};
    const auto serial = section_portrait(sys, SectionSpec{}, ics, cfg, 200.0, 1);
    const auto parallel = section_portrait(sys, SectionSpec{}, ics, cfg, 200.0, 2);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].lambda1 == parallel[i].lambda1);
        REQUIRE(serial[i].points.size() == parallel[i].points.size());
        for (std::size_t k = 0; k < serial[i].points.size(); ++k) {
            CHECK(serial[i].points[k].time == parallel[i].points[k].time);
            CHECK(serial[i].points[k].coords[0] == parallel[i].points[k].coords[0]);
            CHECK(serial[i].points[k].clv[0] == parallel[i].points[k].clv[0]);
        }
    }
}

TEST_CASE("section CSV layout") {
    OrbitPortrait p;
    p.orbit_id = 3;
    SectionPoint pt;
    pt.orbit_id = 3;
    pt.time = 1.5;
    pt.coords = {0.25, -0.5};
    pt.clv = {1.0, 0.0};
    pt.exponent = 0.002;
    p.points.push_back(pt);
    const auto path = std::filesystem::temp_directory_path() / "clvlab_section_test.csv";
    write_section_csv(path, {p});
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "orbit_id,t,q1,q2,v1,v2,exponent_label");
    CHECK(row == "3,1.5,0.25,-0.5,1,0,0.002");
    std::filesystem::remove(path);
}
