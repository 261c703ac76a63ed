#include "phasedam/stepper.hpp"

#include <algorithm>
#include <cmath>

namespace phasedam {

namespace {

double dot_plain(const Field& a, const Field& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

// V-scaled l2 norm of a residual vector; shared with the audits
double vnorm(const Field& f, const Grid& g) {
    return g.cell_volume() * std::sqrt(dot_plain(f, f));
}

void axpy(Field& y, double a, const Field& x) {
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

template <size_t N>
std::array<double, N> interp_breakpoints(const std::vector<std::pair<double, std::array<double, N>>>& bp,
                                         double t, bool slope) {
    std::array<double, N> out{};
    if (bp.empty()) return out;
    if (t <= bp.front().first) return slope ? out : bp.front().second;
    if (t >= bp.back().first) return slope ? out : bp.back().second;
    size_t i = 0;
    while (i + 1 < bp.size() && bp[i + 1].first <= t) ++i;
    const double t0 = bp[i].first, t1 = bp[i + 1].first;
    const double f = (t - t0) / (t1 - t0);
    for (size_t k = 0; k < N; ++k) {
        const double a = bp[i].second[k], b = bp[i + 1].second[k];
        out[k] = slope ? (b - a) / (t1 - t0) : a + f * (b - a);
    }
    return out;
}

} // namespace

// --- boundary data -----------------------------------------------------------

BoundarySpec BoundarySpec::zero() {
    BoundarySpec s;
    for (auto& f : s.face_bp) f.push_back({0.0, {0.0, 0.0}});
    return s;
}

BoundarySpec BoundarySpec::constant_faces(const std::array<std::array<double, 2>, 4>& v) {
    BoundarySpec s;
    for (int f = 0; f < 4; ++f) s.face_bp[f].push_back({0.0, v[f]});
    return s;
}

BoundaryValues BoundarySpec::at(double t) const {
    BoundaryValues v;
    if (affine) {
        v.affine = true;
        const auto ab = interp_breakpoints<6>(affine_bp, t, false);
        v.a = {ab[0], ab[1]};
        v.B = {ab[2], ab[3], ab[4], ab[5]};
        return v;
    }
    for (int f = 0; f < 4; ++f) v.face[f] = interp_breakpoints<2>(face_bp[f], t, false);
    return v;
}

BoundaryValues BoundarySpec::rate(double t) const {
    BoundaryValues v;
    if (affine) {
        v.affine = true;
        const auto ab = interp_breakpoints<6>(affine_bp, t, true);
        v.a = {ab[0], ab[1]};
        v.B = {ab[2], ab[3], ab[4], ab[5]};
        return v;
    }
    for (int f = 0; f < 4; ++f) v.face[f] = interp_breakpoints<2>(face_bp[f], t, true);
    return v;
}

std::vector<double> BoundarySpec::time_nodes() const {
    std::vector<double> t;
    if (affine)
        for (const auto& p : affine_bp) t.push_back(p.first);
    else
        for (const auto& f : face_bp)
            for (const auto& p : f) t.push_back(p.first);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-14; }),
            t.end());
    return t;
}

// --- state -------------------------------------------------------------------

double State::simplex_defect() const {
    double m = 0.0;
    for (int cell = 0; cell < c.cells(); ++cell) {
        double s = -1.0;
        for (int k = 0; k < c.ncomp; ++k) s += c(cell, k);
        m = std::max(m, std::abs(s));
    }
    return m;
}

std::vector<std::string> State::validate(const MaterialParams& mp, const Grid& g) const {
    std::vector<std::string> bad;
    if (u.ncomp != g.dim || u.cells() != g.cells()) bad.push_back("displacement shape mismatch");
    if (c.ncomp != mp.ncomp || c.cells() != g.cells()) bad.push_back("concentration shape mismatch");
    if (z.ncomp != 1 || z.cells() != g.cells()) bad.push_back("damage shape mismatch");
    if (!u.all_finite() || !c.all_finite() || !z.all_finite() || !w.all_finite())
        bad.push_back("state contains non-finite values");
    if (simplex_defect() > 1e-9) bad.push_back("concentrations leave the simplex");
    for (int cell = 0; cell < z.cells(); ++cell)
        if (z(cell) < -1e-12 || z(cell) > 1.0 + 1e-12) {
            bad.push_back("damage leaves [0,1]");
            break;
        }
    if (mp.chem == ChemKind::Log) {
        for (int cell = 0; cell < c.cells(); ++cell)
            for (int k = 0; k < c.ncomp; ++k)
                if (c(cell, k) <= 0.0) {
                    bad.push_back("logarithmic chemistry requires strictly positive concentrations");
                    cell = c.cells();
                    break;
                }
    }
    return bad;
}

// --- displacement solve ------------------------------------------------------

namespace {

double u_objective(const Field& u, const Field& c, const Field& z, const MaterialParams& mp,
                   const Grid& g, const BoundaryValues& b) {
    EnergyLedger led = total_energy(u, c, z, mp, g, b);
    return led.elastic + led.reg_u;
}

// minimize the displacement part; conjugate gradients on the quadratic problem
// (eps = 0), descent with curvature steps otherwise
double solve_u_block(Field& u, const Field& c, const Field& z, const MaterialParams& mp,
                     const Grid& g, const BoundaryValues& b, double tol, int max_iter,
                     int* iters = nullptr) {
    int used = 0;
    Field grad = grad_u_energy(u, c, z, mp, g, b);
    double res = vnorm(grad, g);

    if (mp.epsilon == 0.0) {
        for (int round = 0; round < 8 && res > tol; ++round) {
            // K d = -grad, with K p = grad(u + p) - grad(u) (the map is affine)
            Field d(g, g.dim);
            Field r = grad;
            for (double& x : r.data) x = -x;
            Field p = r;
            double rr = dot_plain(r, r);
            const double stop2 = std::pow(0.05 * tol / std::max(g.cell_volume(), 1e-300), 2);
            const int maxcg = std::max(200, 12 * g.cells());
            for (int it = 0; it < maxcg && rr > stop2; ++it) {
                Field up = u;
                axpy(up, 1.0, p);
                Field kp = grad_u_energy(up, c, z, mp, g, b);
                axpy(kp, -1.0, grad);
                const double pkp = dot_plain(p, kp);
                if (pkp <= 0.0) break;
                const double a = rr / pkp;
                axpy(d, a, p);
                axpy(r, -a, kp);
                const double rr2 = dot_plain(r, r);
                for (size_t i = 0; i < p.data.size(); ++i) p.data[i] = r.data[i] + (rr2 / rr) * p.data[i];
                rr = rr2;
                ++used;
            }
            axpy(u, 1.0, d);
            grad = grad_u_energy(u, c, z, mp, g, b);
            res = vnorm(grad, g);
        }
        if (iters) *iters = used;
        return res;
    }

    // eps > 0: Barzilai-Borwein descent with Armijo backtracking
    double fx = u_objective(u, c, z, mp, g, b);
    double step = 1.0;
    Field x_old = u, g_old = grad;
    for (int it = 0; it < max_iter && res > tol; ++it, ++used) {
        double s = step;
        bool accepted = false;
        const double noise = 1e-14 * (1.0 + std::abs(fx));
        for (int bt = 0; bt < 60; ++bt) {
            const double dec = 1e-4 * s * dot_plain(grad, grad) * g.cell_volume();
            Field cand = u;
            axpy(cand, -s, grad);
            const double fc = u_objective(cand, c, z, mp, g, b);
            // below the evaluation noise floor a plain non-increase is accepted
            if (fc <= fx - dec || (dec < noise && fc <= fx + noise)) {
                x_old = u;
                g_old = grad;
                u = cand;
                fx = fc;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) break;
        grad = grad_u_energy(u, c, z, mp, g, b);
        res = vnorm(grad, g);
        Field dx = u, dg = grad;
        axpy(dx, -1.0, x_old);
        axpy(dg, -1.0, g_old);
        const double dgg = dot_plain(dg, dg);
        const double dxg = dot_plain(dx, dg);
        step = (dgg > 0.0 && dxg > 0.0) ? std::clamp(dxg / dgg, 1e-12, 1e6) : s;
    }
    if (iters) *iters = used;
    return res;
}

// projected KKT residual of the damage block
Field z_kkt_residual(const Field& z, const Field& grad, const Field& z_upper, double lo_tol) {
    Field r = grad;
    for (int cell = 0; cell < z.cells(); ++cell) {
        const double lo = 0.0, up = z_upper(cell);
        if (up - lo < 2.0 * lo_tol) {
            r(cell) = 0.0;
        } else if (z(cell) <= lo + lo_tol) {
            r(cell) = std::min(grad(cell), 0.0);
        } else if (z(cell) >= up - lo_tol) {
            r(cell) = std::max(grad(cell), 0.0);
        }
    }
    return r;
}

struct ZBlockContext {
    const Field& u;
    const Field& c;
    const Field& z_prev;
    double tau;
    const MaterialParams& mp;
    const Grid& g;
    const BoundaryValues& b;
};

double z_objective(const Field& z, const ZBlockContext& ctx) {
    EnergyLedger led = total_energy(ctx.u, ctx.c, z, ctx.mp, ctx.g, ctx.b);
    double diss = 0.0;
    for (int cell = 0; cell < z.cells(); ++cell) {
        const double dz = z(cell) - ctx.z_prev(cell);
        diss += -ctx.mp.alpha * dz + 0.5 * ctx.mp.beta * dz * dz / ctx.tau;
    }
    return led.gradient_z + led.reg_z + led.elastic + diss * ctx.g.cell_volume();
}

Field z_gradient(const Field& z, const ZBlockContext& ctx) {
    Field grad = grad_z_bulk(ctx.u, ctx.c, z, ctx.mp, ctx.g, ctx.b);
    for (int cell = 0; cell < z.cells(); ++cell)
        grad(cell) += -ctx.mp.alpha + ctx.mp.beta * (z(cell) - ctx.z_prev(cell)) / ctx.tau;
    return grad;
}

double solve_z_block(Field& z, const ZBlockContext& ctx, double tol, int max_iter,
                     double lo_tol) {
    auto clamp_box = [&](Field& f) {
        for (int cell = 0; cell < f.cells(); ++cell)
            f(cell) = std::clamp(f(cell), 0.0, ctx.z_prev(cell));
    };
    clamp_box(z);
    Field grad = z_gradient(z, ctx);
    double res = vnorm(z_kkt_residual(z, grad, ctx.z_prev, lo_tol), ctx.g);
    if (res <= tol) return res;

    double fx = z_objective(z, ctx);
    double step = ctx.tau / std::max(ctx.mp.beta, 1e-12);
    Field x_old = z, g_old = grad;
    for (int it = 0; it < max_iter && res > tol; ++it) {
        double s = std::clamp(step, 1e-14, 1e10);
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            Field cand = z;
            axpy(cand, -s, grad);
            clamp_box(cand);
            Field diff = cand;
            axpy(diff, -1.0, z);
            const double move2 = dot_plain(diff, diff);
            if (move2 == 0.0) { accepted = false; break; }
            const double dec = (1e-4 / s) * move2 * ctx.g.cell_volume();
            const double noise = 1e-14 * (1.0 + std::abs(fx));
            const double fc = z_objective(cand, ctx);
            if (fc <= fx - dec || (dec < noise && fc <= fx + noise)) {
                x_old = z;
                g_old = grad;
                z = cand;
                fx = fc;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) break;
        grad = z_gradient(z, ctx);
        res = vnorm(z_kkt_residual(z, grad, ctx.z_prev, lo_tol), ctx.g);
        Field dx = z, dg = grad;
        axpy(dx, -1.0, x_old);
        axpy(dg, -1.0, g_old);
        const double dgg = dot_plain(dg, dg);
        const double dxg = dot_plain(dx, dg);
        step = (dgg > 0.0 && dxg > 0.0) ? dxg / dgg : s;
    }
    return res;
}

struct CBlockContext {
    const Field& u;
    const Field& z;
    const Field& c_prev;
    double tau;
    const MaterialParams& mp;
    Mode mode;
    const Grid& g;
    const BoundaryValues& b;
    const SolverSettings& st;
    DenseMat proj;
};

double c_bulk_objective(const Field& c, const CBlockContext& ctx) {
    EnergyLedger led = total_energy(ctx.u, c, ctx.z, ctx.mp, ctx.g, ctx.b);
    return led.gradient_c + led.chemical + led.elastic;
}

// admissible-direction projection: pointwise tangent space, and mean-free for
// the mass-constrained Cahn-Hilliard step
void project_c_direction(Field& f, const CBlockContext& ctx) {
    project_tsigma(f, ctx.proj);
    if (ctx.mode == Mode::CahnHilliard) remove_component_means(f, ctx.g);
}

double solve_c_block(Field& c, const CBlockContext& ctx, double tol, int max_iter) {
    const double tau = ctx.tau;
    const double eps = ctx.mp.epsilon;

    Field cdot = c;
    axpy(cdot, -1.0, ctx.c_prev);
    for (double& x : cdot.data) x /= tau;

    Field r = solve_s_inverse(cdot, ctx.mode, ctx.g, ctx.mp.mobility, ctx.st.cg_tol,
                              ctx.st.cg_max_iter);
    double fx = c_bulk_objective(c, ctx) + 0.5 * tau * inner_l2(cdot, r, ctx.g) +
                0.5 * eps * tau * inner_l2(cdot, cdot, ctx.g);
    double step = tau; // proximal curvature scale
    Field g_old(ctx.g, ctx.mp.ncomp);
    bool have_old = false;
    Field x_old = c;
    double res = 0.0;

    for (int it = 0; it < max_iter; ++it) {
        Field grad = grad_c_bulk(ctx.u, c, ctx.z, ctx.mp, ctx.g, ctx.b);
        axpy(grad, eps, cdot);
        axpy(grad, 1.0, r);
        project_c_direction(grad, ctx);
        res = vnorm(grad, ctx.g);
        if (res <= tol) return res;

        if (have_old) {
            Field dx = c, dg = grad;
            axpy(dx, -1.0, x_old);
            axpy(dg, -1.0, g_old);
            const double dgg = dot_plain(dg, dg);
            const double dxg = dot_plain(dx, dg);
            if (dgg > 0.0 && dxg > 0.0) step = std::clamp(dxg / dgg, 1e-14, 1e10);
        }

        Field q = solve_s_inverse(grad, ctx.mode, ctx.g, ctx.mp.mobility, ctx.st.cg_tol,
                                  ctx.st.cg_max_iter);
        const double gg = inner_l2(grad, grad, ctx.g);
        const double gr = inner_l2(grad, r, ctx.g);
        const double gq = inner_l2(grad, q, ctx.g);
        const double gc_dot = inner_l2(grad, cdot, ctx.g);
        const double cr = inner_l2(cdot, r, ctx.g);
        const double cc = inner_l2(cdot, cdot, ctx.g);

        double s = step;
        bool accepted = false;
        const double noise = 1e-14 * (1.0 + std::abs(fx));
        for (int bt = 0; bt < 60; ++bt) {
            const double dec = 1e-4 * s * gg;
            Field cand = c;
            axpy(cand, -s, grad);
            const double st_ = s / tau;
            const double prox_x = cr - 2.0 * st_ * gr + st_ * st_ * gq;
            const double prox_l2 = cc - 2.0 * st_ * gc_dot + st_ * st_ * gg;
            const double fc = c_bulk_objective(cand, ctx) + 0.5 * tau * prox_x +
                              0.5 * eps * tau * prox_l2;
            if (fc <= fx - dec || (dec < noise && fc <= fx + noise)) {
                x_old = c;
                g_old = grad;
                have_old = true;
                c = cand;
                fx = fc;
                // update cdot and its inverse image by linearity of S^{-1}
                axpy(cdot, -s / tau, grad);
                axpy(r, -s / tau, q);
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) return res;

        if ((it + 1) % 25 == 0) {
            r = solve_s_inverse(cdot, ctx.mode, ctx.g, ctx.mp.mobility, ctx.st.cg_tol,
                                ctx.st.cg_max_iter);
            fx = c_bulk_objective(c, ctx) + 0.5 * tau * inner_l2(cdot, r, ctx.g) +
                 0.5 * eps * tau * inner_l2(cdot, cdot, ctx.g);
        }
    }
    return res;
}

// residuals of the three blocks at the current iterate (audit-norm definitions)
struct JointResidual {
    double u = 0.0, c = 0.0, z = 0.0;
    double max() const { return std::max(u, std::max(c, z)); }
};

JointResidual joint_residual(const Field& u, const Field& c, const Field& z, const State& prev,
                             double tau, const MaterialParams& mp, Mode mode, const Grid& g,
                             const BoundaryValues& b, const SolverSettings& st) {
    JointResidual jr;
    jr.u = vnorm(grad_u_energy(u, c, z, mp, g, b), g);

    Field cdot = c;
    axpy(cdot, -1.0, prev.c);
    for (double& x : cdot.data) x /= tau;
    Field r = solve_s_inverse(cdot, mode, g, mp.mobility, st.cg_tol, st.cg_max_iter);
    Field gc = grad_c_bulk(u, c, z, mp, g, b);
    axpy(gc, mp.epsilon, cdot);
    axpy(gc, 1.0, r);
    project_tsigma(gc, projection_matrix(mp.ncomp));
    if (mode == Mode::CahnHilliard) remove_component_means(gc, g);
    jr.c = vnorm(gc, g);

    Field gz = grad_z_bulk(u, c, z, mp, g, b);
    for (int cell = 0; cell < z.cells(); ++cell)
        gz(cell) += -mp.alpha + mp.beta * (z(cell) - prev.z(cell)) / tau;
    jr.z = vnorm(z_kkt_residual(z, gz, prev.z, st.z_zero_tol), g);
    return jr;
}

Field lift_field(const Grid& g, const BoundaryValues& b_next, const BoundaryValues& b_prev) {
    Field lift = vector_field(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const auto en = b_next.extension(g, g.xc(i), g.yc(j));
            const auto ep = b_prev.extension(g, g.xc(i), g.yc(j));
            for (int p = 0; p < g.dim; ++p) lift(g.id(i, j), p) = en[p] - ep[p];
        }
    return lift;
}

} // namespace

double incremental_functional(const Field& u, const Field& c, const Field& z, const State& prev,
                              double tau, const MaterialParams& mp, Mode mode, const Grid& g,
                              const BoundaryValues& b_next, const SolverSettings& st) {
    EnergyLedger led = total_energy(u, c, z, mp, g, b_next);
    double diss = 0.0;
    for (int cell = 0; cell < z.cells(); ++cell) {
        const double dz = z(cell) - prev.z(cell);
        diss += -mp.alpha * dz + 0.5 * mp.beta * dz * dz / tau;
    }
    diss *= g.cell_volume();
    Field cdot = c;
    axpy(cdot, -1.0, prev.c);
    for (double& x : cdot.data) x /= tau;
    double prox = 0.0, prox_l2 = 0.0;
    if (max_abs(cdot) > 0.0) {
        Field r = solve_s_inverse(cdot, mode, g, mp.mobility, st.cg_tol, st.cg_max_iter);
        prox = 0.5 * tau * inner_l2(cdot, r, g);
        prox_l2 = 0.5 * mp.epsilon * tau * inner_l2(cdot, cdot, g);
    }
    return led.total + diss + prox + prox_l2;
}

Field initial_displacement(const Field& c0, const Field& z0, const BoundaryValues& b0,
                           const MaterialParams& mp, const Grid& g, double tol,
                           const Field* initial_guess, int max_iter) {
    if (!g.any_dirichlet())
        throw std::invalid_argument("initial_displacement: elasticity needs a Dirichlet boundary part");
    Field u = vector_field(g);
    if (initial_guess) {
        u = *initial_guess;
    } else {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const auto e = b0.extension(g, g.xc(i), g.yc(j));
                for (int p = 0; p < g.dim; ++p) u(g.id(i, j), p) = e[p];
            }
    }
    const double res = solve_u_block(u, c0, z0, mp, g, b0, tol, max_iter);
    if (res > tol)
        throw StepFailure("initial_displacement: solver stagnated at residual " + std::to_string(res));
    return u;
}

Field recover_potential(const Field& c_new, const Field& c_prev, double tau, const Field& u_new,
                        const Field& z_new, const MaterialParams& mp, Mode mode, const Grid& g,
                        const BoundaryValues& b_next, const SolverSettings& st) {
    Field cdot = c_new;
    axpy(cdot, -1.0, c_prev);
    for (double& x : cdot.data) x /= tau;

    Field w(g, mp.ncomp);
    if (max_abs(cdot) > 0.0) {
        Field v = solve_s_inverse(cdot, mode, g, mp.mobility, st.cg_tol, st.cg_max_iter);
        for (size_t i = 0; i < w.data.size(); ++i) w.data[i] = -v.data[i];
    }
    if (mode == Mode::CahnHilliard) {
        const auto lam = lagrange_multiplier(u_new, c_new, z_new, mp, mode, g, b_next);
        for (int cell = 0; cell < w.cells(); ++cell)
            for (int k = 0; k < mp.ncomp; ++k) w(cell, k) += lam[k];
    }
    return w;
}

State incremental_step(const State& prev, double tau, const BoundaryValues& b_prev,
                       const BoundaryValues& b_next, const MaterialParams& mp, Mode mode,
                       const Grid& g, const SolverSettings& st, StepDiagnostics* diag) {
    if (tau <= 0.0) throw std::invalid_argument("incremental_step: tau must be positive");
    for (int cell = 0; cell < prev.z.cells(); ++cell)
        if (prev.z(cell) < -1e-12)
            throw std::invalid_argument("incremental_step: infeasible constraint set (z_prev < 0)");

    // warm start: previous state with the boundary increment lifted into the domain
    Field u = prev.u;
    axpy(u, 1.0, lift_field(g, b_next, b_prev));
    Field c = prev.c;
    Field z = prev.z;
    for (int cell = 0; cell < z.cells(); ++cell) z(cell) = std::clamp(z(cell), 0.0, 1.0);

    const double f_lifted_prev = incremental_functional(u, c, z, prev, tau, mp, mode, g, b_next, st);

    StepDiagnostics d;
    d.functional_lifted_prev = f_lifted_prev;

    JointResidual jr = joint_residual(u, c, z, prev, tau, mp, mode, g, b_next, st);
    const double inner_tol = 0.3 * st.tol;
    bool converged = jr.max() <= st.tol;

    ZBlockContext zctx{u, c, prev.z, tau, mp, g, b_next};
    CBlockContext cctx{u, z, prev.c, tau, mp, mode, g, b_next, st, projection_matrix(mp.ncomp)};

    for (int outer = 0; !converged && outer < st.max_outer; ++outer) {
        solve_z_block(z, zctx, inner_tol, st.max_inner, st.z_zero_tol);
        solve_c_block(c, cctx, inner_tol, st.max_inner);
        solve_u_block(u, c, z, mp, g, b_next, inner_tol, st.max_inner);
        jr = joint_residual(u, c, z, prev, tau, mp, mode, g, b_next, st);
        d.outer_iterations = outer + 1;
        if (jr.max() <= st.tol) {
            converged = true;
            break;
        }
    }
    d.joint_residual = jr.max();
    d.converged = converged;
    if (!converged) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "incremental_step: alternating minimization stalled at residual %.3e "
                      "(target %.3e; blocks u=%.2e c=%.2e z=%.2e)",
                      jr.max(), st.tol, jr.u, jr.c, jr.z);
        throw StepFailure(buf);
    }

    // restore the constraints exactly (projections are exact up to round-off)
    for (int cell = 0; cell < c.cells(); ++cell) {
        double s = -1.0;
        for (int k = 0; k < mp.ncomp; ++k) s += c(cell, k);
        const double corr = -s / mp.ncomp;
        for (int k = 0; k < mp.ncomp; ++k) c(cell, k) += corr;
    }
    if (mode == Mode::CahnHilliard) {
        for (int k = 0; k < mp.ncomp; ++k) {
            const double drift = mean_value(prev.c, g, k) - mean_value(c, g, k);
            for (int cell = 0; cell < c.cells(); ++cell) c(cell, k) += drift;
        }
    }
    for (int cell = 0; cell < z.cells(); ++cell)
        z(cell) = std::clamp(z(cell), 0.0, std::min(prev.z(cell), 1.0));

    State next;
    next.t = prev.t + tau;
    next.u = u;
    next.c = c;
    next.z = z;
    next.w = recover_potential(c, prev.c, tau, u, z, mp, mode, g, b_next, st);

    if (diag) {
        d.functional_value = incremental_functional(u, c, z, prev, tau, mp, mode, g, b_next, st);
        d.functional_lifted_u = [&] {
            Field ul = prev.u;
            axpy(ul, 1.0, lift_field(g, b_next, b_prev));
            return incremental_functional(ul, c, z, prev, tau, mp, mode, g, b_next, st);
        }();
        d.s_dissipation = s_dissipation(next.w, mode, g, mp.mobility);
        Field zdot = z;
        axpy(zdot, -1.0, prev.z);
        for (double& x : zdot.data) x /= tau;
        for (double& x : zdot.data) x = std::min(x, 0.0);
        d.rate_dissipation = dissipation_r(zdot, mp, g);
        Field cdot = c;
        axpy(cdot, -1.0, prev.c);
        for (double& x : cdot.data) x /= tau;
        d.cdot_l2sq = inner_l2(cdot, cdot, g);
        *diag = d;
    }
    return next;
}

Trajectory run_simulation(const RunSetup& setup) {
    const Grid& g = setup.grid;
    const MaterialParams& mp = setup.params;
    mp.require_valid();
    if (setup.steps < 0) throw std::invalid_argument("run_simulation: negative step count");
    if (setup.horizon <= 0.0 && setup.steps > 0)
        throw std::invalid_argument("run_simulation: horizon must be positive");

    Trajectory traj;
    traj.horizon = setup.horizon;
    traj.tau = setup.steps > 0 ? setup.horizon / setup.steps : 0.0;

    const BoundaryValues b0 = setup.boundary.at(0.0);
    State s0;
    s0.t = 0.0;
    s0.c = setup.c0;
    s0.z = setup.z0;
    s0.u = initial_displacement(setup.c0, setup.z0, b0, mp, g, setup.solver.tol);
    s0.w = Field(g, mp.ncomp);
    if (setup.mode == Mode::CahnHilliard) {
        const auto lam = lagrange_multiplier(s0.u, s0.c, s0.z, mp, setup.mode, g, b0);
        for (int cell = 0; cell < s0.w.cells(); ++cell)
            for (int k = 0; k < mp.ncomp; ++k) s0.w(cell, k) = lam[k];
    }
    {
        auto bad = s0.validate(mp, g);
        if (!bad.empty()) {
            std::string msg = "run_simulation: invalid initial state:";
            for (const auto& m : bad) msg += " " + m + ";";
            throw std::invalid_argument(msg);
        }
    }
    traj.states.push_back(s0);
    traj.ledgers.push_back(total_energy(s0.u, s0.c, s0.z, mp, g, b0));

    for (int m = 1; m <= setup.steps; ++m) {
        const double t_prev = (m - 1) * traj.tau;
        const double t_next = m * traj.tau;
        const BoundaryValues bp = setup.boundary.at(t_prev);
        const BoundaryValues bn = setup.boundary.at(t_next);
        StepDiagnostics diag;
        try {
            State next = incremental_step(traj.states.back(), traj.tau, bp, bn, mp, setup.mode, g,
                                          setup.solver, &diag);
            traj.states.push_back(std::move(next));
            traj.diagnostics.push_back(diag);
            traj.ledgers.push_back(
                total_energy(traj.states.back().u, traj.states.back().c, traj.states.back().z, mp, g, bn));
        } catch (const StepFailure& e) {
            traj.failed = true;
            traj.failure = "step " + std::to_string(m) + ": " + e.what();
            break;
        }
    }
    return traj;
}

State interpolant_eval(const Trajectory& traj, double t, InterpKind kind) {
    if (traj.states.empty()) throw std::invalid_argument("interpolant_eval: empty trajectory");
    const double T = traj.horizon;
    if (t < -1e-12 || t > T + 1e-12)
        throw std::out_of_range("interpolant_eval: time outside [0, T]");
    t = std::clamp(t, 0.0, T);
    const int M = static_cast<int>(traj.states.size()) - 1;
    if (M == 0 || traj.tau <= 0.0) return traj.states[0];
    const double s = t / traj.tau;
    const double snap = std::round(s);
    const bool on_node = std::abs(s - snap) < 1e-9;

    switch (kind) {
        case InterpKind::Left: {
            const int m = on_node ? static_cast<int>(snap) : static_cast<int>(std::floor(s));
            return traj.states[std::clamp(m, 0, M)];
        }
        case InterpKind::Right: {
            const int m = on_node ? static_cast<int>(snap) : static_cast<int>(std::ceil(s));
            return traj.states[std::clamp(m, 0, M)];
        }
        case InterpKind::Linear: {
            if (on_node) return traj.states[std::clamp(static_cast<int>(snap), 0, M)];
            const int m = std::clamp(static_cast<int>(std::ceil(s)), 1, M);
            const double beta = s - (m - 1);
            State out = traj.states[m];
            const State& a = traj.states[m - 1];
            out.t = t;
            for (size_t i = 0; i < out.u.data.size(); ++i)
                out.u.data[i] = beta * out.u.data[i] + (1.0 - beta) * a.u.data[i];
            for (size_t i = 0; i < out.c.data.size(); ++i)
                out.c.data[i] = beta * out.c.data[i] + (1.0 - beta) * a.c.data[i];
            for (size_t i = 0; i < out.w.data.size(); ++i)
                out.w.data[i] = beta * out.w.data[i] + (1.0 - beta) * a.w.data[i];
            for (size_t i = 0; i < out.z.data.size(); ++i)
                out.z.data[i] = beta * out.z.data[i] + (1.0 - beta) * a.z.data[i];
            return out;
        }
    }
    throw std::logic_error("interpolant_eval: unknown kind");
}

} // namespace phasedam
