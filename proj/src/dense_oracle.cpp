#include "phasedam/dense_oracle.hpp"

#include "phasedam/linalg.hpp"
#include "phasedam/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace phasedam {

namespace {

// zero-mean solve of (m * compact Neumann Laplacian) v = rho via an augmented
// dense system with a mean-gauge row
std::vector<double> dense_sinv_coefficient(const DenseInstance& inst, const std::vector<double>& rho) {
    const int n = inst.cells;
    const double h = inst.h();
    DenseMat A(n + 1);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        if (i > 0) {
            A(i, i - 1) = -inst.mobility_tsigma / (h * h);
            diag += inst.mobility_tsigma / (h * h);
        }
        if (i < n - 1) {
            A(i, i + 1) = -inst.mobility_tsigma / (h * h);
            diag += inst.mobility_tsigma / (h * h);
        }
        A(i, i) = diag;
        A(i, n) = 1.0;
        A(n, i) = 1.0;
    }
    std::vector<double> rhs(n + 1, 0.0);
    for (int i = 0; i < n; ++i) rhs[i] = rho[i];
    auto sol = lu_solve(A, rhs);
    sol.resize(n);
    return sol;
}

double phi_of(PhiKind k, double z) { return k == PhiKind::Quadratic ? z * z : z; }

} // namespace

double dense_functional(const DenseInstance& inst, const std::vector<double>& x) {
    const int n = inst.cells;
    const double h = inst.h();
    const double* u = x.data();
    const double* y = x.data() + n;
    const double* z = x.data() + 2 * n;

    auto c0_at = [&](int i) { return inst.c_prev[i] + y[i]; };
    auto stiff_at = [&](double c0) {
        return c0 * inst.stiffness[0] + (1.0 - c0) * inst.stiffness[1];
    };
    auto estar_at = [&](double c0) {
        return c0 * inst.eigenstrain[0] + (1.0 - c0) * inst.eigenstrain[1];
    };

    double e_grad_c = 0.0, e_grad_z = 0.0, e_pz = 0.0, e_ch = 0.0, e_el = 0.0, e_qu = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        const double dc0 = (c0_at(i + 1) - c0_at(i)) / h; // second component differs by sign
        e_grad_c += 0.5 * inst.gamma * h * 2.0 * dc0 * dc0;
        const double dz = (z[i + 1] - z[i]) / h;
        e_grad_z += 0.5 * h * dz * dz;
        if (inst.epsilon > 0.0) e_pz += h * (inst.epsilon / inst.p) * std::pow(std::abs(dz), inst.p);

        const double e = (u[i + 1] - u[i]) / h;
        const double cf = 0.5 * (c0_at(i) + c0_at(i + 1));
        const double zf = 0.5 * (z[i] + z[i + 1]);
        const double d = e - estar_at(cf);
        e_el += h * (phi_of(inst.phi, zf) + inst.eta_tilde) * 0.5 * stiff_at(cf) * d * d;
        if (inst.epsilon > 0.0) e_qu += h * 0.25 * inst.epsilon * e * e * e * e;
    }
    if (inst.dirichlet_left) {
        const double e = 2.0 * (u[0] - inst.b_left) / h;
        const double d = e - estar_at(c0_at(0));
        e_el += 0.5 * h * (phi_of(inst.phi, z[0]) + inst.eta_tilde) * 0.5 * stiff_at(c0_at(0)) * d * d;
        if (inst.epsilon > 0.0) e_qu += 0.5 * h * 0.25 * inst.epsilon * e * e * e * e;
    }
    if (inst.dirichlet_right) {
        const double e = 2.0 * (inst.b_right - u[n - 1]) / h;
        const double d = e - estar_at(c0_at(n - 1));
        e_el += 0.5 * h * (phi_of(inst.phi, z[n - 1]) + inst.eta_tilde) * 0.5 * stiff_at(c0_at(n - 1)) * d * d;
        if (inst.epsilon > 0.0) e_qu += 0.5 * h * 0.25 * inst.epsilon * e * e * e * e;
    }
    for (int i = 0; i < n; ++i) {
        const double c0 = c0_at(i), c1 = 1.0 - c0;
        const double t0 = c0 * (1.0 - c0), t1 = c1 * (1.0 - c1);
        e_ch += h * inst.theta_w * (t0 * t0 + t1 * t1);
    }

    double diss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dz = z[i] - inst.z_prev[i];
        diss += h * (-inst.alpha * dz + 0.5 * inst.beta * dz * dz / inst.tau);
    }

    // proximal terms; rates live on the tangent line (1,-1) scaled by y/tau
    std::vector<double> rho(n);
    for (int i = 0; i < n; ++i) rho[i] = y[i] / inst.tau;
    double prox_x = 0.0;
    if (inst.mode == Mode::AllenCahn) {
        for (int i = 0; i < n; ++i) prox_x += h * 2.0 * rho[i] * rho[i] / inst.mobility_tsigma;
    } else {
        const auto v = dense_sinv_coefficient(inst, rho);
        for (int i = 0; i < n; ++i) prox_x += h * 2.0 * rho[i] * v[i];
    }
    double prox_l2 = 0.0;
    for (int i = 0; i < n; ++i) prox_l2 += h * 2.0 * rho[i] * rho[i];

    return e_grad_c + e_grad_z + e_pz + e_ch + e_el + e_qu + diss + 0.5 * inst.tau * prox_x +
           0.5 * inst.epsilon * inst.tau * prox_l2;
}

DenseResult dense_minimize(const DenseInstance& inst, double tol, int max_iter) {
    const int n = inst.cells;
    std::vector<double> x(3 * n, 0.0);
    for (int i = 0; i < n; ++i) {
        x[i] = inst.u_prev[i];
        x[n + i] = 0.0;
        x[2 * n + i] = inst.z_prev[i];
    }

    auto project = [&](std::vector<double>& v) {
        if (inst.mode == Mode::CahnHilliard) {
            double m = 0.0;
            for (int i = 0; i < n; ++i) m += v[n + i];
            m /= n;
            for (int i = 0; i < n; ++i) v[n + i] -= m;
        }
        for (int i = 0; i < n; ++i)
            v[2 * n + i] = std::clamp(v[2 * n + i], 0.0, inst.z_prev[i]);
    };
    project(x);

    auto numeric_grad = [&](const std::vector<double>& v) {
        std::vector<double> grad(3 * n, 0.0);
        std::vector<double> w = v;
        const double step = 1e-7;
        for (int i = 0; i < 3 * n; ++i) {
            const double keep = w[i];
            w[i] = keep + step;
            const double fp = dense_functional(inst, w);
            w[i] = keep - step;
            const double fm = dense_functional(inst, w);
            w[i] = keep;
            grad[i] = (fp - fm) / (2.0 * step);
        }
        return grad;
    };

    auto kkt_norm = [&](const std::vector<double>& v, const std::vector<double>& grad) {
        double s = 0.0;
        double mean_cy = 0.0;
        if (inst.mode == Mode::CahnHilliard) {
            for (int i = 0; i < n; ++i) mean_cy += grad[n + i];
            mean_cy /= n;
        }
        for (int i = 0; i < 3 * n; ++i) {
            double r = grad[i];
            if (i >= n && i < 2 * n && inst.mode == Mode::CahnHilliard) r -= mean_cy;
            if (i >= 2 * n) {
                const int cell = i - 2 * n;
                const double lo = 0.0, up = inst.z_prev[cell];
                if (up - lo < 2e-12)
                    r = 0.0;
                else if (v[i] <= lo + 1e-12)
                    r = std::min(r, 0.0);
                else if (v[i] >= up - 1e-12)
                    r = std::max(r, 0.0);
            }
            s += r * r;
        }
        return inst.h() * std::sqrt(s);
    };

    DenseResult res;
    double fx = dense_functional(inst, x);
    double step = 1.0;
    std::vector<double> x_old, g_old;
    int it = 0;
    double resn = 0.0;
    for (; it < max_iter; ++it) {
        auto grad = numeric_grad(x);
        resn = kkt_norm(x, grad);
        if (resn <= tol) break;
        double s = std::clamp(step, 1e-14, 1e8);
        bool accepted = false;
        for (int bt = 0; bt < 64; ++bt) {
            std::vector<double> cand = x;
            for (int i = 0; i < 3 * n; ++i) cand[i] -= s * grad[i];
            project(cand);
            double move2 = 0.0;
            for (int i = 0; i < 3 * n; ++i) {
                const double d = cand[i] - x[i];
                move2 += d * d;
            }
            if (move2 == 0.0) break;
            const double fc = dense_functional(inst, cand);
            if (fc <= fx - (1e-4 / s) * move2) {
                x_old = x;
                g_old = grad;
                x = std::move(cand);
                fx = fc;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) break;
        if (!x_old.empty()) {
            auto grad_new = numeric_grad(x);
            double dxg = 0.0, dgg = 0.0;
            for (int i = 0; i < 3 * n; ++i) {
                const double dx = x[i] - x_old[i];
                const double dg = grad_new[i] - g_old[i];
                dxg += dx * dg;
                dgg += dg * dg;
            }
            step = (dgg > 0.0 && dxg > 0.0) ? dxg / dgg : s;
        }
    }

    res.iterations = it;
    res.functional = fx;
    res.residual = resn;
    res.u.assign(x.begin(), x.begin() + n);
    res.c0.resize(n);
    for (int i = 0; i < n; ++i) res.c0[i] = inst.c_prev[i] + x[n + i];
    res.z.assign(x.begin() + 2 * n, x.end());
    return res;
}

std::vector<double> dense_elastic_1d(int cells, double h, const std::vector<double>& K_face,
                                     const std::vector<double>& s_face, bool dirichlet_left,
                                     bool dirichlet_right, double b_left, double b_right) {
    // unknown cell displacements; faces 0..cells hold stiffness and stress-free
    // strain; free boundary faces carry no term
    DenseMat A(cells);
    std::vector<double> rhs(cells, 0.0);
    // interior faces f = i+1/2 between cells i and i+1: strain (u_{i+1}-u_i)/h,
    // energy h * K/2 (e-s)^2 -> rows i and i+1
    for (int i = 0; i + 1 < cells; ++i) {
        const double K = K_face[i + 1];
        const double s = s_face[i + 1];
        // d/du_i: -K (e - s); d/du_{i+1}: +K (e - s); e = (u_{i+1}-u_i)/h; weight h
        A(i, i) += K / h;
        A(i, i + 1) -= K / h;
        A(i + 1, i + 1) += K / h;
        A(i + 1, i) -= K / h;
        rhs[i] += -K * s;
        rhs[i + 1] += K * s;
    }
    if (dirichlet_left) {
        const double K = K_face[0], s = s_face[0];
        // e = 2(u_0 - bL)/h, weight h/2: d/du_0 = (h/2) K (e - s) * 2/h = K(e - s)
        A(0, 0) += 2.0 * K / h;
        rhs[0] += K * (s + 2.0 * b_left / h);
    }
    if (dirichlet_right) {
        const double K = K_face[cells], s = s_face[cells];
        // e = 2(bR - u_{n-1})/h: d/du = -K(e-s)
        A(cells - 1, cells - 1) += 2.0 * K / h;
        rhs[cells - 1] += K * (2.0 * b_right / h - s);
    }
    return lu_solve(A, rhs);
}

// --- the cross-check suite ---------------------------------------------------

namespace {

struct CheckPrinter {
    std::ostream& out;
    int failures = 0;
    void operator()(const std::string& name, bool ok, const std::string& detail) {
        out << (ok ? "PASS" : "FAIL") << "  " << name;
        if (!detail.empty()) out << "  (" << detail << ")";
        out << "\n";
        if (!ok) ++failures;
    }
};

MaterialParams params_from_instance(const DenseInstance& inst) {
    MaterialParams mp;
    mp.ncomp = 2;
    mp.dim = 1;
    mp.gamma = GradientTensor::isotropic(inst.gamma, 2);
    mp.mobility = Mobility::standard(2);
    mp.A = DenseMat(2);
    mp.theta_w = inst.theta_w;
    mp.alpha = inst.alpha;
    mp.beta = inst.beta;
    mp.eta_tilde = inst.eta_tilde;
    mp.epsilon = inst.epsilon;
    mp.p = inst.p;
    mp.phi_kind = inst.phi;
    mp.mu = {0.5 * inst.stiffness[0], 0.5 * inst.stiffness[1]};
    mp.lambda = {0.0, 0.0};
    mp.estar = {SymTensor{inst.eigenstrain[0], 0.0, 0.0}, SymTensor{inst.eigenstrain[1], 0.0, 0.0}};
    return mp;
}

} // namespace

OracleComparison compare_step_with_dense(const DenseInstance& inst) {
    const Grid g = make_grid(1, {inst.cells}, {inst.length},
                             {inst.dirichlet_left, inst.dirichlet_right, false, false});
    const MaterialParams mp = params_from_instance(inst);

    State prev;
    prev.t = 0.0;
    prev.u = vector_field(g);
    prev.c = concentration_field(g, 2);
    prev.z = scalar_field(g);
    prev.w = concentration_field(g, 2);
    for (int i = 0; i < inst.cells; ++i) {
        prev.u(i, 0) = inst.u_prev[i];
        prev.c(i, 0) = inst.c_prev[i];
        prev.c(i, 1) = 1.0 - inst.c_prev[i];
        prev.z(i) = inst.z_prev[i];
    }
    BoundaryValues bv;
    bv.face[FaceXLo] = {inst.b_left, 0.0};
    bv.face[FaceXHi] = {inst.b_right, 0.0};

    SolverSettings st;
    st.tol = 1e-9;
    st.max_outer = 400;

    StepDiagnostics diag;
    const State next = incremental_step(prev, inst.tau, bv, bv, mp, inst.mode, g, st, &diag);
    const DenseResult dense = dense_minimize(inst);

    OracleComparison cmp;
    for (int i = 0; i < inst.cells; ++i) {
        cmp.du = std::max(cmp.du, std::abs(next.u(i, 0) - dense.u[i]));
        cmp.dc = std::max(cmp.dc, std::abs(next.c(i, 0) - dense.c0[i]));
        cmp.dz = std::max(cmp.dz, std::abs(next.z(i) - dense.z[i]));
    }
    cmp.d_energy = std::abs(diag.functional_value - dense.functional);
    cmp.pass = cmp.d_energy <= 1e-6 && cmp.du <= 1e-4 && cmp.dc <= 1e-4 && cmp.dz <= 1e-4;
    return cmp;
}

DenseInstance make_reference_instance(Mode mode, double epsilon) {
    DenseInstance inst;
    inst.cells = 4;
    inst.mode = mode;
    inst.tau = 0.05;
    inst.epsilon = epsilon;
    inst.p = 4.0;
    inst.gamma = 0.02;
    inst.alpha = 0.05;
    inst.beta = 0.5;
    inst.stiffness = {1.0, 1.4};
    inst.eigenstrain = {0.1, 0.0};
    inst.b_left = 0.0;
    inst.b_right = 0.01;
    inst.u_prev = {0.0, 0.002, 0.005, 0.008};
    inst.c_prev = {0.42, 0.55, 0.61, 0.45};
    inst.z_prev = {1.0, 0.9, 0.85, 1.0};
    return inst;
}

int run_oracle_suite(std::ostream& out) {
    CheckPrinter check{out};

    for (Mode mode : {Mode::AllenCahn, Mode::CahnHilliard}) {
        for (double eps : {0.0, 0.1}) {
            DenseInstance inst = make_reference_instance(mode, eps);
            std::string detail;
            bool ok = false;
            try {
                const OracleComparison cmp = compare_step_with_dense(inst);
                char buf[160];
                std::snprintf(buf, sizeof(buf), "dE=%.2e du=%.2e dc=%.2e dz=%.2e", cmp.d_energy,
                              cmp.du, cmp.dc, cmp.dz);
                detail = buf;
                ok = cmp.pass;
            } catch (const std::exception& e) {
                detail = e.what();
            }
            std::string name = std::string("incremental step vs dense minimization [") +
                               mode_name(mode) + ", eps=" + (eps == 0.0 ? "0" : "0.1") + "]";
            check(name, ok, detail);
        }
    }

    // initial displacement against the direct tridiagonal solve
    {
        const int n = 12;
        Grid g = make_grid(1, {n}, {1.0}, {true, true, false, false});
        MaterialParams mp;
        mp.ncomp = 2;
        mp.dim = 1;
        mp.gamma = GradientTensor::isotropic(1.0, 2);
        mp.mobility = Mobility::standard(2);
        mp.A = DenseMat(2);
        mp.mu = {0.5, 0.5};
        mp.lambda = {0.0, 0.0};
        mp.estar = {SymTensor{0.08, 0.0, 0.0}, SymTensor{0.0, 0.0, 0.0}};

        Field c(g, 2), z = scalar_field(g);
        for (int i = 0; i < n; ++i) {
            c(i, 0) = 0.5;
            c(i, 1) = 0.5;
            z(i) = 1.0;
        }
        Field u = initial_displacement(c, z, BoundaryValues::zero(), mp, g, 1e-12);

        std::vector<double> K(n + 1), s(n + 1);
        for (int f = 0; f <= n; ++f) {
            K[f] = (1.0 + mp.eta_tilde); // phi(1) + eta, unit stiffness
            s[f] = 0.5 * 0.08;           // eigenstrain at c = (1/2, 1/2)
        }
        auto ud = dense_elastic_1d(n, g.hx, K, s, true, true, 0.0, 0.0);
        double du = 0.0;
        for (int i = 0; i < n; ++i) du = std::max(du, std::abs(u(i, 0) - ud[i]));

        // residual stress state: the face stresses must be constant
        double smin = 1e300, smax = -1e300;
        auto stress = [&](double e) { return (1.0 + mp.eta_tilde) * (e - 0.04); };
        for (int i = 0; i + 1 < n; ++i) {
            const double e = (u(i + 1, 0) - u(i, 0)) / g.hx;
            smin = std::min(smin, stress(e));
            smax = std::max(smax, stress(e));
        }
        char buf[120];
        std::snprintf(buf, sizeof(buf), "du=%.2e stress spread=%.2e", du, smax - smin);
        check("initial displacement vs dense 1D solve", du <= 1e-9 && (smax - smin) <= 1e-9, buf);
    }

    // eigenfunction inversion order for the Cahn-Hilliard operator
    {
        const double PI = 3.14159265358979323846;
        Mobility mob = Mobility::standard(2);
        std::array<double, 3> errs{};
        std::array<int, 3> sizes{8, 16, 32};
        for (int k = 0; k < 3; ++k) {
            Grid g = make_grid(1, {sizes[k]}, {1.0}, {});
            Field f(g, 2);
            for (int i = 0; i < g.nx; ++i) {
                f(i, 0) = std::cos(PI * g.xc(i));
                f(i, 1) = -f(i, 0);
            }
            Field v = solve_s_inverse(f, Mode::CahnHilliard, g, mob, 1e-13);
            double err = 0.0;
            for (int i = 0; i < g.nx; ++i)
                err = std::max(err, std::abs(v(i, 0) - f(i, 0) / (2.0 * PI * PI)));
            errs[k] = err;
        }
        const double order1 = std::log2(errs[0] / errs[1]);
        const double order2 = std::log2(errs[1] / errs[2]);
        char buf[120];
        std::snprintf(buf, sizeof(buf), "orders %.2f, %.2f", order1, order2);
        check("eigenfunction inverse converges at second order", order1 >= 1.9 && order2 >= 1.9, buf);
    }

    return check.failures;
}

} // namespace phasedam
