#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "phasedam/stepper.hpp"

#include <cmath>

using namespace phasedam;

namespace {

const double PI = 3.14159265358979323846;

MaterialParams make_params(int dim, int ncomp = 2) {
    MaterialParams mp;
    mp.ncomp = ncomp;
    mp.dim = dim;
    mp.gamma = GradientTensor::isotropic(1.0, ncomp);
    mp.mobility = Mobility::standard(ncomp);
    mp.A = DenseMat(ncomp);
    mp.mu.assign(ncomp, 0.5);
    mp.lambda.assign(ncomp, 0.0);
    mp.estar.assign(ncomp, SymTensor{0.0, 0.0, 0.0});
    return mp;
}

State constant_state(const Grid& g, const MaterialParams& mp, double c0, double z0) {
    State s;
    s.t = 0.0;
    s.u = vector_field(g);
    s.c = concentration_field(g, mp.ncomp);
    s.z = scalar_field(g);
    s.w = concentration_field(g, mp.ncomp);
    for (int cell = 0; cell < g.cells(); ++cell) {
        s.c(cell, 0) = c0;
        s.c(cell, 1) = 1.0 - c0;
        s.z(cell) = z0;
    }
    return s;
}

} // namespace

TEST_CASE("initial displacement") {
    Grid g = make_grid(1, {12}, {1.0}, {true, true, false, false});
    MaterialParams mp = make_params(1);

    SUBCASE("zero eigenstrain and zero boundary give zero") {
        State s = constant_state(g, mp, 0.5, 1.0);
        Field u = initial_displacement(s.c, s.z, BoundaryValues::zero(), mp, g, 1e-11);
        CHECK(max_abs(u) <= 1e-10);
    }

    SUBCASE("two different initial guesses reach the same minimizer") {
        mp.estar[0] = SymTensor{0.1, 0.0, 0.0};
        mp.epsilon = 0.05; // exercise the quartic branch too
        State s = constant_state(g, mp, 0.5, 0.8);
        Field guess1 = vector_field(g);
        Field guess2 = vector_field(g);
        for (int i = 0; i < g.nx; ++i) guess2(i, 0) = 0.05 * std::sin(7.0 * i);
        Field u1 = initial_displacement(s.c, s.z, BoundaryValues::zero(), mp, g, 1e-11, &guess1);
        Field u2 = initial_displacement(s.c, s.z, BoundaryValues::zero(), mp, g, 1e-11, &guess2);
        CHECK(max_abs_diff(u1, u2) <= 1e-8);
    }

    SUBCASE("requires a Dirichlet boundary part") {
        Grid free = make_grid(1, {8}, {1.0}, {false, false, false, false});
        State s = constant_state(free, mp, 0.5, 1.0);
        CHECK_THROWS(initial_displacement(s.c, s.z, BoundaryValues::zero(), mp, free, 1e-10));
    }
}

TEST_CASE("incremental step") {
    Grid g = make_grid(1, {8}, {1.0}, {true, true, false, false});
    MaterialParams mp = make_params(1);
    SolverSettings st;
    st.tol = 1e-9;

    SUBCASE("a stationary state is a fixed point") {
        State prev = constant_state(g, mp, 0.5, 1.0);
        prev.u = initial_displacement(prev.c, prev.z, BoundaryValues::zero(), mp, g, 1e-11);
        State next = incremental_step(prev, 0.1, BoundaryValues::zero(), BoundaryValues::zero(),
                                      mp, Mode::CahnHilliard, g, st);
        CHECK(max_abs_diff(next.u, prev.u) <= 1e-8);
        CHECK(max_abs_diff(next.c, prev.c) <= 1e-8);
        CHECK(max_abs_diff(next.z, prev.z) <= 1e-8);
    }

    SUBCASE("damage can only decrease, and decreases under strong driving force") {
        MaterialParams mpd = make_params(1);
        mpd.estar[0] = SymTensor{0.3, 0.0, 0.0};
        mpd.alpha = 0.01;
        mpd.beta = 1.0;
        State prev = constant_state(g, mpd, 1.0, 0.5);
        prev.u = initial_displacement(prev.c, prev.z, BoundaryValues::zero(), mpd, g, 1e-11);
        StepDiagnostics diag;
        State next = incremental_step(prev, 0.1, BoundaryValues::zero(), BoundaryValues::zero(),
                                      mpd, Mode::AllenCahn, g, st, &diag);
        for (int cell = 0; cell < g.cells(); ++cell) {
            CHECK(next.z(cell) <= 0.5 + 1e-12);
            CHECK(next.z(cell) < 0.5 - 1e-6); // obstacle inactive, strict decrease
        }
        CHECK(diag.functional_value <= diag.functional_lifted_prev + 1e-12);
        CHECK(diag.functional_value <= diag.functional_lifted_u + 1e-12);
    }

    SUBCASE("infeasible constraint set is rejected") {
        State prev = constant_state(g, mp, 0.5, 1.0);
        prev.z(3) = -0.2;
        CHECK_THROWS_AS(incremental_step(prev, 0.1, BoundaryValues::zero(), BoundaryValues::zero(),
                                         mp, Mode::CahnHilliard, g, st),
                        std::invalid_argument);
    }
}

TEST_CASE("recover_potential") {
    Grid g = make_grid(1, {16}, {1.0}, {true, true, false, false});
    MaterialParams mp = make_params(1);
    SolverSettings st;

    SUBCASE("zero rate gives the multiplier (C-H) or zero (A-C)") {
        State s = constant_state(g, mp, 0.3, 1.0);
        Field w_ch = recover_potential(s.c, s.c, 0.1, s.u, s.z, mp, Mode::CahnHilliard, g,
                                       BoundaryValues::zero(), st);
        const auto lam = lagrange_multiplier(s.u, s.c, s.z, mp, Mode::CahnHilliard, g,
                                             BoundaryValues::zero());
        for (int cell = 0; cell < g.cells(); ++cell) {
            CHECK(w_ch(cell, 0) == doctest::Approx(lam[0]).epsilon(1e-12));
            CHECK(w_ch(cell, 1) == doctest::Approx(lam[1]).epsilon(1e-12));
        }
        Field w_ac = recover_potential(s.c, s.c, 0.1, s.u, s.z, mp, Mode::AllenCahn, g,
                                       BoundaryValues::zero(), st);
        CHECK(max_abs(w_ac) == 0.0);
    }

    SUBCASE("Allen-Cahn pointwise pseudo-inverse") {
        State prev = constant_state(g, mp, 0.4, 1.0);
        const double tau = 0.1;
        Field c_new = prev.c;
        for (int cell = 0; cell < g.cells(); ++cell) {
            c_new(cell, 0) += tau * 1.0;
            c_new(cell, 1) -= tau * 1.0;
        }
        Field w = recover_potential(c_new, prev.c, tau, prev.u, prev.z, mp, Mode::AllenCahn, g,
                                    BoundaryValues::zero(), st);
        for (int cell = 0; cell < g.cells(); ++cell) {
            CHECK(w(cell, 0) == doctest::Approx(-0.5).epsilon(1e-12));
            CHECK(w(cell, 1) == doctest::Approx(0.5).epsilon(1e-12));
        }
    }

    SUBCASE("Cahn-Hilliard eigenfunction") {
        // symmetric profile makes the multiplier vanish; w = -cos(pi x)/(2 lam)(1,-1)
        State prev = constant_state(g, mp, 0.5, 1.0);
        const double tau = 0.01;
        Field c_new = prev.c;
        for (int i = 0; i < g.nx; ++i) {
            const double v = std::cos(PI * g.xc(i));
            c_new(i, 0) += tau * v;
            c_new(i, 1) -= tau * v;
        }
        Field w = recover_potential(c_new, prev.c, tau, prev.u, prev.z, mp, Mode::CahnHilliard, g,
                                    BoundaryValues::zero(), st);
        const double lam_h = 2.0 * (2.0 - 2.0 * std::cos(PI * g.hx)) / (g.hx * g.hx);
        for (int i = 0; i < g.nx; ++i) {
            const double expect = -std::cos(PI * g.xc(i)) / lam_h;
            CHECK(std::abs(w(i, 0) - expect) <= 1e-8);
            CHECK(std::abs(w(i, 1) + expect) <= 1e-8);
        }
    }
}

TEST_CASE("run_simulation") {
    MaterialParams mp = make_params(1);
    SolverSettings st;
    st.tol = 1e-9;

    SUBCASE("zero steps returns just the initial state") {
        Grid g = make_grid(1, {8}, {1.0}, {true, true, false, false});
        RunSetup setup{g, mp, Mode::CahnHilliard, BoundarySpec::zero(),
                       concentration_field(g, 2), scalar_field(g), 1.0, 0, st};
        for (int cell = 0; cell < g.cells(); ++cell) {
            setup.c0(cell, 0) = setup.c0(cell, 1) = 0.5;
            setup.z0(cell) = 1.0;
        }
        Trajectory traj = run_simulation(setup);
        CHECK(traj.states.size() == 1);
        CHECK_FALSE(traj.failed);
        CHECK(max_abs(traj.states[0].u) <= 1e-10);
    }

    SUBCASE("a stationary initial state stays put under constant boundary data") {
        Grid g = make_grid(1, {8}, {1.0}, {true, true, false, false});
        RunSetup setup{g, mp, Mode::CahnHilliard, BoundarySpec::zero(),
                       concentration_field(g, 2), scalar_field(g), 0.5, 5, st};
        for (int cell = 0; cell < g.cells(); ++cell) {
            setup.c0(cell, 0) = setup.c0(cell, 1) = 0.5;
            setup.z0(cell) = 1.0;
        }
        Trajectory traj = run_simulation(setup);
        REQUIRE(traj.states.size() == 6);
        for (size_t m = 1; m < traj.states.size(); ++m) {
            CHECK(max_abs_diff(traj.states[m].c, traj.states[0].c) <= 1e-8);
            CHECK(max_abs_diff(traj.states[m].z, traj.states[0].z) <= 1e-8);
            CHECK(max_abs_diff(traj.states[m].u, traj.states[0].u) <= 1e-8);
        }
    }

    SUBCASE("1D spinodal run dissipates energy and conserves structure") {
        Grid g = make_grid(1, {16}, {1.0}, {true, true, false, false});
        MaterialParams mps = make_params(1);
        mps.gamma = GradientTensor::isotropic(1e-3, 2);
        RunSetup setup{g, mps, Mode::CahnHilliard, BoundarySpec::zero(),
                       concentration_field(g, 2), scalar_field(g), 0.5, 10, st};
        for (int i = 0; i < g.nx; ++i) {
            const double pert = 0.05 * std::cos(2.0 * PI * g.xc(i));
            setup.c0(i, 0) = 0.5 + pert;
            setup.c0(i, 1) = 0.5 - pert;
            setup.z0(i) = 1.0;
        }
        Trajectory traj = run_simulation(setup);
        REQUIRE_FALSE(traj.failed);
        REQUIRE(traj.states.size() == 11);
        const double m0 = integrate(traj.states[0].c, g, 0);
        for (size_t m = 1; m < traj.states.size(); ++m) {
            CHECK(traj.ledgers[m].total <= traj.ledgers[m - 1].total + 1e-12);
            CHECK(traj.states[m].simplex_defect() <= 1e-12);
            CHECK(std::abs(integrate(traj.states[m].c, g, 0) - m0) <= 1e-10);
            for (int cell = 0; cell < g.cells(); ++cell)
                CHECK(traj.states[m].z(cell) <= traj.states[m - 1].z(cell) + 1e-12);
        }
        // the perturbation must actually have grown (spinodal instability)
        double spread = 0.0;
        for (int i = 0; i < g.nx; ++i)
            spread = std::max(spread, std::abs(traj.states.back().c(i, 0) - 0.5));
        CHECK(spread > 0.06);
    }
}

TEST_CASE("interpolants") {
    Grid g = make_grid(1, {4}, {1.0}, {true, true, false, false});
    MaterialParams mp = make_params(1);
    Trajectory traj;
    traj.horizon = 1.0;
    traj.tau = 0.25;
    for (int m = 0; m <= 4; ++m) {
        State s = constant_state(g, mp, 0.5, 1.0);
        s.t = m * 0.25;
        for (int cell = 0; cell < g.cells(); ++cell) s.z(cell) = 1.0 - 0.1 * m;
        traj.states.push_back(s);
    }

    SUBCASE("all kinds agree at the nodes") {
        for (int m = 0; m <= 4; ++m) {
            const double t = m * 0.25;
            CHECK(interpolant_eval(traj, t, InterpKind::Left).z(0) == doctest::Approx(1.0 - 0.1 * m));
            CHECK(interpolant_eval(traj, t, InterpKind::Right).z(0) == doctest::Approx(1.0 - 0.1 * m));
            CHECK(interpolant_eval(traj, t, InterpKind::Linear).z(0) == doctest::Approx(1.0 - 0.1 * m));
        }
    }

    SUBCASE("between nodes") {
        const double t = 0.25 + 0.125; // midway in the second interval
        CHECK(interpolant_eval(traj, t, InterpKind::Left).z(0) == doctest::Approx(0.9));
        CHECK(interpolant_eval(traj, t, InterpKind::Right).z(0) == doctest::Approx(0.8));
        CHECK(interpolant_eval(traj, t, InterpKind::Linear).z(0) == doctest::Approx(0.85));
        // beta for t = (m-1) tau + 0.25 tau
        const double tq = 0.25 + 0.25 * 0.25;
        CHECK(interpolant_eval(traj, tq, InterpKind::Linear).z(0) ==
              doctest::Approx(0.25 * 0.8 + 0.75 * 0.9));
    }

    SUBCASE("out of range is rejected") {
        CHECK_THROWS(interpolant_eval(traj, -0.1, InterpKind::Left));
        CHECK_THROWS(interpolant_eval(traj, 1.1, InterpKind::Left));
    }
}
