#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "phasedam/energy.hpp"

#include <cmath>
#include <random>

using namespace phasedam;

namespace {

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

std::mt19937_64 rng_global(42);

Field random_simplex_field(const Grid& g, int ncomp, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    Field c(g, ncomp);
    for (int cell = 0; cell < g.cells(); ++cell) {
        double s = 0.0;
        for (int k = 0; k < ncomp; ++k) {
            c(cell, k) = uni(rng);
            s += c(cell, k);
        }
        for (int k = 0; k < ncomp; ++k) c(cell, k) /= s;
    }
    return c;
}

} // namespace

TEST_CASE("phi_delta branches") {
    CHECK(phi_delta(1.0, 0.1) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(phi_delta(0.0, 0.1) == doctest::Approx(-0.05).epsilon(1e-14));
    CHECK_THROWS(phi_delta(0.5, 0.0));
    CHECK_THROWS(phi_delta(0.5, -1.0));

    for (double delta : {1e-1, 1e-2, 1e-3}) {
        // value and slope of the quadratic continuation match x log x at x = delta
        const double v_log = delta * std::log(delta);
        const double v_quad = delta * std::log(delta) - 0.5 * delta + delta * delta / (2.0 * delta);
        CHECK(std::abs(v_log - v_quad) <= 1e-14 * (1.0 + std::abs(v_log)));
        const double d_log = std::log(delta) + 1.0;
        const double d_quad = std::log(delta) + delta / delta;
        CHECK(std::abs(d_log - d_quad) <= 1e-14 * (1.0 + std::abs(d_log)));
        CHECK(phi_delta_prime(delta, delta) == doctest::Approx(std::log(delta) + 1.0).epsilon(1e-14));
    }

    SUBCASE("convexity by random secants") {
        std::uniform_real_distribution<double> uni(-1.0, 3.0);
        std::uniform_real_distribution<double> tuni(0.0, 1.0);
        for (int trial = 0; trial < 1000; ++trial) {
            const double delta = std::pow(10.0, -1.0 - 3.0 * tuni(rng_global));
            const double x = uni(rng_global), y = uni(rng_global), t = tuni(rng_global);
            const double lhs = phi_delta(t * x + (1 - t) * y, delta);
            const double rhs = t * phi_delta(x, delta) + (1 - t) * phi_delta(y, delta);
            CHECK(lhs <= rhs + 1e-12 * (1.0 + std::abs(rhs)));
        }
    }
}

TEST_CASE("polynomial chemical density") {
    const double c_vertex[2] = {1.0, 0.0};
    CHECK(chem_poly(c_vertex, 2, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
    const double c_mid[2] = {0.5, 0.5};
    CHECK(chem_poly(c_mid, 2, 1.0) == doctest::Approx(0.125).epsilon(1e-15));
    double grad[2];
    chem_poly_grad(c_vertex, 2, 1.0, grad);
    CHECK(std::abs(grad[0]) <= 1e-15);
    CHECK(std::abs(grad[1]) <= 1e-15);
}

TEST_CASE("logarithmic chemical density") {
    MaterialParams mp = make_params(1);
    mp.chem = ChemKind::Log;
    mp.theta = 1.0;
    mp.delta = 0.1;

    const double c[2] = {1.0, 0.0};
    CHECK(chem_log_delta(c, mp) == doctest::Approx(-0.05).epsilon(1e-14));

    double grad[2];
    const double cd[2] = {0.1, 0.9};
    chem_log_delta_grad(cd, mp, grad);
    CHECK(grad[0] == doctest::Approx(std::log(0.1) + 1.0).epsilon(1e-13));

    MaterialParams mp2 = mp;
    mp2.A = DenseMat(2);
    mp2.A(0, 0) = -2.0;
    mp2.A(1, 1) = -2.0;
    const double ch[2] = {0.5, 0.5};
    const double quadratic_part = chem_log_delta(ch, mp2) - chem_log_delta(ch, mp);
    CHECK(quadratic_part == doctest::Approx(-0.5).epsilon(1e-13));
}

TEST_CASE("elastic density and derivatives") {
    MaterialParams mp = make_params(2);

    SUBCASE("stress-free at the eigenstrain") {
        mp.estar[0] = SymTensor{0.02, 0.02, 0.0};
        const double c[2] = {0.7, 0.3};
        const SymTensor estar = mp.estar_of(c);
        CHECK(elastic_density(estar, c, 0.5, mp) == doctest::Approx(0.0).epsilon(1e-15));
        const SymTensor sig = elastic_d_e(estar, c, 0.5, mp);
        CHECK(std::abs(sig[0]) <= 1e-15);
        CHECK(std::abs(sig[1]) <= 1e-15);
        CHECK(std::abs(sig[2]) <= 1e-15);
    }

    SUBCASE("identity stiffness closed forms") {
        const double c[2] = {1.0, 0.0};
        const SymTensor eye{1.0, 1.0, 0.0};
        CHECK(elastic_density(eye, c, 1.0, mp) == doctest::Approx(1.01).epsilon(1e-14));
        CHECK(elastic_density(eye, c, 0.0, mp) == doctest::Approx(0.01).epsilon(1e-14));
        CHECK(elastic_d_z(eye, c, 0.0, mp) == doctest::Approx(0.0).epsilon(1e-15));
    }

    SUBCASE("uniform convexity of the stress") {
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        const double eta_min = mp.eta_tilde * mp.stiffness_min_eigenvalue();
        for (int trial = 0; trial < 200; ++trial) {
            double craw[2] = {std::abs(uni(rng_global)) + 0.01, std::abs(uni(rng_global)) + 0.01};
            const double s = craw[0] + craw[1];
            craw[0] /= s;
            craw[1] /= s;
            const double z = 0.5 * (uni(rng_global) + 1.0);
            const SymTensor e1{uni(rng_global), uni(rng_global), uni(rng_global)};
            const SymTensor e2{uni(rng_global), uni(rng_global), uni(rng_global)};
            const SymTensor s1 = elastic_d_e(e1, craw, z, mp);
            const SymTensor s2 = elastic_d_e(e2, craw, z, mp);
            SymTensor ds, de;
            for (int m = 0; m < 3; ++m) {
                ds[m] = s1[m] - s2[m];
                de[m] = e1[m] - e2[m];
            }
            CHECK(sym_contract(ds, de) >= eta_min * sym_contract(de, de) - 1e-13);
        }
    }
}

TEST_CASE("total energy closed forms") {
    SUBCASE("constant chemistry on the unit interval") {
        Grid g = make_grid(1, {8}, {1.0}, {true, true, false, false});
        MaterialParams mp = make_params(1);
        Field u = vector_field(g);
        Field c(g, 2);
        for (int cell = 0; cell < g.cells(); ++cell) {
            c(cell, 0) = 0.5;
            c(cell, 1) = 0.5;
        }
        Field z = scalar_field(g);
        for (int cell = 0; cell < g.cells(); ++cell) z(cell) = 1.0;
        EnergyLedger led = total_energy(u, c, z, mp, g, BoundaryValues::zero());
        CHECK(led.total == doctest::Approx(0.125).epsilon(1e-13));
        CHECK(led.chemical == doctest::Approx(0.125).epsilon(1e-13));
        CHECK(led.elastic == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(led.validate(mp, g).empty());
    }

    SUBCASE("zero at a well with matched eigenstrain") {
        Grid g = make_grid(1, {8}, {1.0}, {true, true, false, false});
        MaterialParams mp = make_params(1);
        mp.estar[0] = SymTensor{0.02, 0.0, 0.0};
        BoundaryValues b;
        b.affine = true;
        b.B = {0.02, 0.0, 0.0, 0.0};
        Field u = vector_field(g);
        for (int i = 0; i < g.nx; ++i) u(i, 0) = 0.02 * g.xc(i);
        Field c(g, 2);
        for (int cell = 0; cell < g.cells(); ++cell) c(cell, 0) = 1.0;
        Field z = scalar_field(g);
        for (int cell = 0; cell < g.cells(); ++cell) z(cell) = 1.0;
        EnergyLedger led = total_energy(u, c, z, mp, g, b);
        CHECK(std::abs(led.total) <= 1e-14);
    }
}

TEST_CASE("total energy matches an independent dense re-evaluation") {
    // 1D, 4 cells, straight-line re-implementation of the same quadrature
    Grid g = make_grid(1, {4}, {1.0}, {true, false, false, false});
    MaterialParams mp = make_params(1);
    mp.epsilon = 0.1;
    mp.p = 4.0;
    mp.estar[0] = SymTensor{0.05, 0.0, 0.0};
    mp.mu = {0.5, 0.8};
    mp.lambda = {0.0, 0.2};

    std::uniform_real_distribution<double> uni(-0.3, 0.3);
    Field u = vector_field(g);
    Field z = scalar_field(g);
    Field c = random_simplex_field(g, 2, rng_global);
    for (int i = 0; i < g.nx; ++i) {
        u(i, 0) = uni(rng_global);
        z(i) = 0.2 + 0.6 * (uni(rng_global) + 0.3) / 0.6 * 0.5;
        z(i) = std::min(std::max(z(i), 0.0), 1.0);
    }
    const double bL = 0.07;
    BoundaryValues b;
    b.face[FaceXLo] = {bL, 0.0};

    const double h = g.hx;
    double e_gc = 0.0, e_gz = 0.0, e_pz = 0.0, e_ch = 0.0, e_el = 0.0, e_qu = 0.0;
    auto stiff = [&](double c0, double c1) {
        return c0 * (2.0 * mp.mu[0] + mp.lambda[0]) + c1 * (2.0 * mp.mu[1] + mp.lambda[1]);
    };
    auto wel = [&](double e, double c0, double c1, double zz) {
        const double es = c0 * 0.05;
        return (zz * zz + mp.eta_tilde) * 0.5 * stiff(c0, c1) * (e - es) * (e - es);
    };
    for (int i = 0; i + 1 < 4; ++i) {
        const double dc0 = (c(i + 1, 0) - c(i, 0)) / h;
        const double dc1 = (c(i + 1, 1) - c(i, 1)) / h;
        e_gc += 0.5 * h * (dc0 * dc0 + dc1 * dc1);
        const double dz = (z(i + 1) - z(i)) / h;
        e_gz += 0.5 * h * dz * dz;
        e_pz += h * (mp.epsilon / mp.p) * std::pow(dz * dz, 0.5 * mp.p);
        const double e = (u(i + 1, 0) - u(i, 0)) / h;
        const double cf0 = 0.5 * (c(i, 0) + c(i + 1, 0));
        const double cf1 = 0.5 * (c(i, 1) + c(i + 1, 1));
        const double zf = 0.5 * (z(i) + z(i + 1));
        e_el += h * wel(e, cf0, cf1, zf);
        e_qu += h * 0.25 * mp.epsilon * e * e * e * e;
    }
    { // Dirichlet boundary face at x = 0: half-cell strain, half weight
        const double e = 2.0 * (u(0, 0) - bL) / h;
        e_el += 0.5 * h * wel(e, c(0, 0), c(0, 1), z(0));
        e_qu += 0.5 * h * 0.25 * mp.epsilon * e * e * e * e;
    }
    for (int i = 0; i < 4; ++i) {
        const double t0 = c(i, 0) * (1.0 - c(i, 0));
        const double t1 = c(i, 1) * (1.0 - c(i, 1));
        e_ch += h * (t0 * t0 + t1 * t1);
    }

    EnergyLedger led = total_energy(u, c, z, mp, g, b);
    CHECK(led.gradient_c == doctest::Approx(e_gc).epsilon(1e-13));
    CHECK(led.gradient_z == doctest::Approx(e_gz).epsilon(1e-13));
    CHECK(led.reg_z == doctest::Approx(e_pz).epsilon(1e-13));
    CHECK(led.chemical == doctest::Approx(e_ch).epsilon(1e-13));
    CHECK(led.elastic == doctest::Approx(e_el).epsilon(1e-13));
    CHECK(led.reg_u == doctest::Approx(e_qu).epsilon(1e-13));
    CHECK(led.total == doctest::Approx(e_gc + e_gz + e_pz + e_ch + e_el + e_qu).epsilon(1e-13));
}

TEST_CASE("analytic gradients match central finite differences") {
    auto run_check = [&](const Grid& g, MaterialParams mp, const BoundaryValues& b) {
        std::uniform_real_distribution<double> uni(-0.2, 0.2);
        Field u = vector_field(g);
        Field c = random_simplex_field(g, mp.ncomp, rng_global);
        Field z = scalar_field(g);
        for (int cell = 0; cell < g.cells(); ++cell) {
            for (int k = 0; k < g.dim; ++k) u(cell, k) = uni(rng_global);
            z(cell) = 0.2 + 0.5 * (uni(rng_global) + 0.2);
        }

        const double step = 1e-5;
        auto energy = [&](const Field& uu, const Field& cc, const Field& zz) {
            return total_energy(uu, cc, zz, mp, g, b).total;
        };

        // u directions
        Field gu = grad_u_energy(u, c, z, mp, g, b);
        Field du = vector_field(g);
        for (auto& x : du.data) x = uni(rng_global);
        double analytic = inner_l2(gu, du, g);
        Field up = u, um = u;
        for (size_t i = 0; i < u.data.size(); ++i) {
            up.data[i] += step * du.data[i];
            um.data[i] -= step * du.data[i];
        }
        double fd = (energy(up, c, z) - energy(um, c, z)) / (2.0 * step);
        CHECK(std::abs(analytic - fd) <= 1e-6 * std::max({std::abs(analytic), std::abs(fd), 1.0}));

        // c directions (unconstrained test of the full bulk derivative)
        Field gc = grad_c_bulk(u, c, z, mp, g, b);
        Field dc(g, mp.ncomp);
        for (auto& x : dc.data) x = uni(rng_global);
        analytic = inner_l2(gc, dc, g);
        Field cp = c, cm = c;
        for (size_t i = 0; i < c.data.size(); ++i) {
            cp.data[i] += step * dc.data[i];
            cm.data[i] -= step * dc.data[i];
        }
        fd = (energy(u, cp, z) - energy(u, cm, z)) / (2.0 * step);
        CHECK(std::abs(analytic - fd) <= 1e-6 * std::max({std::abs(analytic), std::abs(fd), 1.0}));

        // z directions
        Field gz = grad_z_bulk(u, c, z, mp, g, b);
        Field dz = scalar_field(g);
        for (auto& x : dz.data) x = uni(rng_global);
        analytic = inner_l2(gz, dz, g);
        Field zp = z, zm = z;
        for (size_t i = 0; i < z.data.size(); ++i) {
            zp.data[i] += step * dz.data[i];
            zm.data[i] -= step * dz.data[i];
        }
        fd = (energy(u, c, zp) - energy(u, c, zm)) / (2.0 * step);
        CHECK(std::abs(analytic - fd) <= 1e-6 * std::max({std::abs(analytic), std::abs(fd), 1.0}));
    };

    SUBCASE("1D, polynomial, regularized") {
        Grid g = make_grid(1, {6}, {1.0}, {true, false, false, false});
        MaterialParams mp = make_params(1);
        mp.epsilon = 0.1;
        mp.estar[0] = SymTensor{0.03, 0.0, 0.0};
        BoundaryValues b;
        b.face[FaceXLo] = {0.01, 0.0};
        for (int rep = 0; rep < 5; ++rep) run_check(g, mp, b);
    }

    SUBCASE("2D, polynomial, mixed boundary") {
        Grid g = make_grid(2, {4, 3}, {1.0, 0.8}, {true, false, true, false});
        MaterialParams mp = make_params(2);
        mp.epsilon = 0.05;
        mp.estar[0] = SymTensor{0.02, 0.02, 0.01};
        mp.mu = {0.6, 0.4};
        mp.lambda = {0.3, 0.1};
        BoundaryValues b;
        b.face[FaceXLo] = {0.0, 0.01};
        b.face[FaceYLo] = {0.0, 0.01};
        for (int rep = 0; rep < 5; ++rep) run_check(g, mp, b);
    }

    SUBCASE("2D, logarithmic, unregularized") {
        Grid g = make_grid(2, {4, 4}, {1.0, 1.0}, {true, true, true, true});
        MaterialParams mp = make_params(2);
        mp.chem = ChemKind::Log;
        mp.theta = 0.5;
        mp.delta = 0.05;
        mp.A = DenseMat(2);
        mp.A(0, 1) = mp.A(1, 0) = 1.0;
        for (int rep = 0; rep < 5; ++rep) run_check(g, mp, BoundaryValues::zero());
    }

    SUBCASE("1D, linear degradation") {
        Grid g = make_grid(1, {6}, {1.0}, {true, true, false, false});
        MaterialParams mp = make_params(1);
        mp.phi_kind = PhiKind::Linear;
        mp.estar[0] = SymTensor{0.05, 0.0, 0.0};
        for (int rep = 0; rep < 3; ++rep) run_check(g, mp, BoundaryValues::zero());
    }
}

TEST_CASE("dissipation functional") {
    Grid g = make_grid(1, {8}, {1.0}, {});
    MaterialParams mp = make_params(1);
    Field rate = scalar_field(g);
    CHECK(dissipation_r(rate, mp, g) == 0.0);

    for (int cell = 0; cell < g.cells(); ++cell) rate(cell) = -1.0;
    CHECK(dissipation_r(rate, mp, g) == doctest::Approx(1.5).epsilon(1e-14));

    rate(3) = 0.1;
    CHECK_THROWS(dissipation_r(rate, mp, g));
}

TEST_CASE("mass-constraint multiplier") {
    Grid g = make_grid(1, {8}, {1.0}, {true, true, false, false});
    MaterialParams mp = make_params(1);
    Field u = vector_field(g);
    Field z = scalar_field(g);
    for (int cell = 0; cell < g.cells(); ++cell) z(cell) = 1.0;

    SUBCASE("constant chemical derivative is returned exactly") {
        Field c(g, 2);
        for (int cell = 0; cell < g.cells(); ++cell) {
            c(cell, 0) = 0.3;
            c(cell, 1) = 0.7;
        }
        double expect[2];
        const double cv[2] = {0.3, 0.7};
        chem_poly_grad(cv, 2, 1.0, expect);
        auto lam = lagrange_multiplier(u, c, z, mp, Mode::CahnHilliard, g, BoundaryValues::zero());
        CHECK(lam[0] == doctest::Approx(expect[0]).epsilon(1e-12));
        CHECK(lam[1] == doctest::Approx(expect[1]).epsilon(1e-12));
    }

    SUBCASE("vanishing derivatives give zero") {
        Field c(g, 2);
        for (int cell = 0; cell < g.cells(); ++cell) c(cell, 0) = 1.0;
        auto lam = lagrange_multiplier(u, c, z, mp, Mode::CahnHilliard, g, BoundaryValues::zero());
        CHECK(std::abs(lam[0]) <= 1e-14);
        CHECK(std::abs(lam[1]) <= 1e-14);
    }

    SUBCASE("the half-half well is stationary") {
        Field c(g, 2);
        for (int cell = 0; cell < g.cells(); ++cell) c(cell, 0) = c(cell, 1) = 0.5;
        auto lam = lagrange_multiplier(u, c, z, mp, Mode::CahnHilliard, g, BoundaryValues::zero());
        CHECK(std::abs(lam[0]) <= 1e-14);
    }

    SUBCASE("rejected in Allen-Cahn mode") {
        Field c = random_simplex_field(g, 2, rng_global);
        CHECK_THROWS(lagrange_multiplier(u, c, z, mp, Mode::AllenCahn, g, BoundaryValues::zero()));
    }
}

TEST_CASE("regularized logarithmic density is uniformly bounded below") {
    MaterialParams mp = make_params(1);
    mp.chem = ChemKind::Log;
    mp.theta = 1.0;
    mp.A = DenseMat(2);
    mp.A(0, 0) = mp.A(1, 1) = -2.0;

    const double bound = -mp.chem_lower_bound();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double global_min = 1e300;
    for (double delta : {1e-1, 1e-2, 1e-3, 1e-4}) {
        mp.delta = delta;
        for (int s = 0; s < 10000; ++s) {
            const double a = uni(rng_global);
            const double c[2] = {a, 1.0 - a};
            global_min = std::min(global_min, chem_log_delta(c, mp));
        }
    }
    CHECK(global_min >= bound - 1e-12);
}

TEST_CASE("material validation catches contract violations") {
    MaterialParams mp = make_params(1);
    CHECK(mp.validate().empty());

    MaterialParams bad = mp;
    bad.alpha = 0.0;
    CHECK_FALSE(bad.validate().empty());

    bad = mp;
    bad.p = 1.5;
    CHECK_FALSE(bad.validate().empty());

    bad = mp;
    bad.mu = {0.5, -0.1};
    CHECK_FALSE(bad.validate().empty());

    bad = mp;
    bad.chem = ChemKind::Log;
    bad.delta = 0.5; // above delta0
    CHECK_FALSE(bad.validate().empty());
}
