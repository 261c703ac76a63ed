#include "phasedam/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace phasedam {

namespace {

double dot_plain(const Field& a, const Field& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double vnorm(const Field& f, const Grid& g) {
    return g.cell_volume() * std::sqrt(dot_plain(f, f));
}

Field rate_field(const Field& now, const Field& before, double tau) {
    Field r = now;
    for (size_t i = 0; i < r.data.size(); ++i) r.data[i] = (r.data[i] - before.data[i]) / tau;
    return r;
}

SymTensor sym_of(const std::array<double, 4>& gmat) {
    return SymTensor{gmat[0], gmat[3], 0.5 * (gmat[1] + gmat[2])};
}

bool boundary_is_static(const BoundarySpec& bs) {
    if (bs.affine) return bs.affine_bp.size() <= 1;
    for (const auto& f : bs.face_bp)
        if (f.size() > 1) return false;
    return true;
}

// boundary-working rate at time s for the step ending at t_next:
//   int W^el_e(e(u_prev + b(s) - b_prev), c_prev, z_now) : e(db/dt)
// + eps int |grad(...)|^2 grad(...) : grad(db/dt)
double working_rate(double s, const State& prev, const Field& z_now, const AuditContext& ctx,
                    const BoundaryValues& b_prev, const std::array<double, 4>& grad_prev) {
    const BoundaryValues bs = ctx.boundary.at(s);
    const BoundaryValues br = ctx.boundary.rate(s);
    const auto grad_s = bs.extension_grad(ctx.grid);
    const auto grad_r = br.extension_grad(ctx.grid);
    std::array<double, 4> shift{};
    for (int k = 0; k < 4; ++k) shift[k] = grad_s[k] - grad_prev[k];
    double v = elastic_working(prev.u, prev.c, z_now, ctx.params, ctx.grid, b_prev, sym_of(shift),
                               sym_of(grad_r));
    if (ctx.params.epsilon > 0.0)
        v += quartic_working(prev.u, ctx.params, ctx.grid, b_prev, shift, grad_r);
    return v;
}

double step_working(const State& prev, const Field& z_now, double t0, double t1,
                    const AuditContext& ctx) {
    if (boundary_is_static(ctx.boundary)) return 0.0;
    const BoundaryValues b_prev = ctx.boundary.at(t0);
    const auto grad_prev = b_prev.extension_grad(ctx.grid);

    // split at breakpoints of b, Simpson on each piece (exact for the
    // piecewise-cubic integrand produced by piecewise-linear data)
    std::vector<double> nodes{t0, t1};
    for (double tn : ctx.boundary.time_nodes())
        if (tn > t0 + 1e-14 && tn < t1 - 1e-14) nodes.push_back(tn);
    std::sort(nodes.begin(), nodes.end());

    double total = 0.0;
    for (size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double a = nodes[k], b = nodes[k + 1];
        const double mid = 0.5 * (a + b);
        // interior sample times avoid the slope ambiguity at the nodes
        const double fa = working_rate(a + 1e-12 * (b - a), prev, z_now, ctx, b_prev, grad_prev);
        const double fm = working_rate(mid, prev, z_now, ctx, b_prev, grad_prev);
        const double fb = working_rate(b - 1e-12 * (b - a), prev, z_now, ctx, b_prev, grad_prev);
        total += (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }
    return total;
}

} // namespace

EnergySlack audit_energy(const Trajectory& traj, const AuditContext& ctx) {
    EnergySlack out;
    if (traj.states.empty()) return out;
    const Grid& g = ctx.grid;
    const MaterialParams& mp = ctx.params;
    const double tau = traj.tau;

    const EnergyLedger led0 = total_energy(traj.states[0].u, traj.states[0].c, traj.states[0].z,
                                           mp, g, ctx.boundary.at(0.0));
    double lhs_half_acc = 0.0, lhs_sharp_acc = 0.0, work_acc = 0.0;

    for (size_t m = 1; m < traj.states.size(); ++m) {
        const State& prev = traj.states[m - 1];
        const State& now = traj.states[m];
        const Field zdot = rate_field(now.z, prev.z, tau);
        const Field cdot = rate_field(now.c, prev.c, tau);

        double rate_half = 0.0, rate_sharp = 0.0;
        for (int cell = 0; cell < g.cells(); ++cell) {
            const double zd = zdot(cell);
            rate_half += -mp.alpha * zd + 0.5 * mp.beta * zd * zd;
            rate_sharp += -mp.alpha * zd + mp.beta * zd * zd;
        }
        double cd2 = 0.0;
        for (double x : cdot.data) cd2 += x * x;
        rate_half += 0.5 * mp.epsilon * cd2;
        rate_sharp += mp.epsilon * cd2;
        rate_half *= g.cell_volume();
        rate_sharp *= g.cell_volume();

        const double sw = s_dissipation(now.w, ctx.mode, g, mp.mobility);
        lhs_half_acc += tau * (rate_half + 0.5 * sw);
        lhs_sharp_acc += tau * (rate_sharp + sw);
        work_acc += step_working(prev, now.z, prev.t, now.t, ctx);

        const EnergyLedger led = total_energy(now.u, now.c, now.z, mp, g, ctx.boundary.at(now.t));
        out.half.push_back(led0.total + work_acc - led.total - lhs_half_acc);
        out.sharp.push_back(led0.total + work_acc - led.total - lhs_sharp_acc);
    }
    return out;
}

ElResiduals audit_el_residuals(const State& state, const State& prev, double tau,
                               const AuditContext& ctx) {
    const Grid& g = ctx.grid;
    const MaterialParams& mp = ctx.params;
    const BoundaryValues b = ctx.boundary.at(state.t);
    ElResiduals res;

    const Field cdot = rate_field(state.c, prev.c, tau);

    // (i): int cdot . zeta + <S w, zeta> for all test fields
    Field r1 = apply_s(state.w, ctx.mode, g, mp.mobility);
    for (size_t i = 0; i < r1.data.size(); ++i) r1.data[i] += cdot.data[i];
    res.r1 = vnorm(r1, g);

    // (ii): tangent-space part of w - (bulk derivative + eps cdot)
    Field r2 = state.w;
    {
        const Field gc = grad_c_bulk(state.u, state.c, state.z, mp, g, b);
        for (size_t i = 0; i < r2.data.size(); ++i)
            r2.data[i] -= gc.data[i] + mp.epsilon * cdot.data[i];
        project_tsigma(r2, projection_matrix(mp.ncomp));
    }
    res.r2 = vnorm(r2, g);

    // (iii): stationarity of the displacement
    res.r3 = vnorm(grad_u_energy(state.u, state.c, state.z, mp, g, b), g);
    return res;
}

ViAudit audit_vi(const State& state, const State& prev, double tau, const AuditContext& ctx) {
    const Grid& g = ctx.grid;
    const MaterialParams& mp = ctx.params;
    const BoundaryValues b = ctx.boundary.at(state.t);
    ViAudit out;

    Field gz = grad_z_bulk(state.u, state.c, state.z, mp, g, b);
    for (int cell = 0; cell < g.cells(); ++cell)
        gz(cell) += -mp.alpha + mp.beta * (state.z(cell) - prev.z(cell)) / tau;

    const Field wz = elastic_z_derivative(state.u, state.c, state.z, mp, g, b);
    out.r = scalar_field(g);
    out.r_support_violation = 0.0;
    for (int cell = 0; cell < g.cells(); ++cell) {
        if (state.z(cell) <= ctx.solver.z_zero_tol)
            out.r(cell) = -std::max(wz(cell), 0.0);
        else
            out.r(cell) = 0.0;
    }

    Field total = gz;
    for (int cell = 0; cell < g.cells(); ++cell) total(cell) += out.r(cell);

    const double V = g.cell_volume();
    double mn = std::numeric_limits<double>::max();
    // per-cell indicator bumps, L2-normalized
    for (int cell = 0; cell < g.cells(); ++cell)
        mn = std::min(mn, -std::sqrt(V) * total(cell));
    // seeded random nonpositive test fields
    std::mt19937_64 rng(ctx.vi_seed);
    std::uniform_real_distribution<double> uni(-1.0, 0.0);
    double pairing_min = std::numeric_limits<double>::max();
    for (int s = 0; s < ctx.vi_random_samples; ++s) {
        Field zeta = scalar_field(g);
        double n2 = 0.0;
        for (int cell = 0; cell < g.cells(); ++cell) {
            zeta(cell) = uni(rng);
            n2 += zeta(cell) * zeta(cell);
        }
        const double nrm = std::sqrt(n2 * V);
        if (nrm == 0.0) continue;
        double val = 0.0, pair = 0.0;
        for (int cell = 0; cell < g.cells(); ++cell) {
            const double zc = zeta(cell) / nrm;
            val += V * total(cell) * zc;
            pair += V * out.r(cell) * (state.z(cell) - (-zc)); // mirrored sample zeta >= 0
        }
        mn = std::min(mn, val);
        pairing_min = std::min(pairing_min, pair);
    }
    // positive bumps for the pairing condition
    for (int cell = 0; cell < g.cells(); ++cell) {
        double pair = 0.0;
        for (int c2 = 0; c2 < g.cells(); ++c2)
            pair += V * out.r(c2) * (state.z(c2) - (c2 == cell ? 1.0 / std::sqrt(V) : 0.0));
        pairing_min = std::min(pairing_min, pair);
        if (g.cells() > 4096) break; // quadratic sweep guard on large grids
    }
    out.min_slack = mn;
    out.r_pairing_min = pairing_min;
    return out;
}

ConservationAudit audit_conservation(const Trajectory& traj, const AuditContext& ctx) {
    ConservationAudit out;
    if (ctx.mode != Mode::CahnHilliard) {
        out.applicable = false;
        return out;
    }
    out.applicable = true;
    if (traj.states.size() <= 1) return out;
    const int n = ctx.params.ncomp;
    std::vector<double> m0(n);
    for (int k = 0; k < n; ++k) m0[k] = integrate(traj.states[0].c, ctx.grid, k);
    for (size_t m = 1; m < traj.states.size(); ++m) {
        std::vector<double> d(n);
        for (int k = 0; k < n; ++k)
            d[k] = std::abs(integrate(traj.states[m].c, ctx.grid, k) - m0[k]);
        out.drift.push_back(std::move(d));
    }
    return out;
}

std::vector<StrainIntegrabilityRow> strain_integrability_report(const Trajectory& traj,
                                                                const AuditContext& ctx,
                                                                const std::vector<double>& p_list) {
    std::vector<StrainIntegrabilityRow> rows;
    for (size_t m = 0; m < traj.states.size(); ++m) {
        const State& s = traj.states[m];
        const BoundaryValues b = ctx.boundary.at(s.t);
        const Field gmag = displacement_gradient_norm(s.u, ctx.grid, b);
        const double gl2 = lp_norm(gmag, ctx.grid, 2.0);
        for (double p : p_list) {
            if (p <= 2.0) continue;
            StrainIntegrabilityRow row;
            row.state_index = static_cast<int>(m);
            row.t = s.t;
            row.p = p;
            row.grad_lp = lp_norm(gmag, ctx.grid, p);
            row.grad_l2 = gl2;
            const double cn = lp_norm(s.c, ctx.grid, 2.0 * p);
            row.c_l2p_sq = cn * cn;
            row.ratio = row.grad_lp / (row.grad_l2 + row.c_l2p_sq + 1.0);
            rows.push_back(row);
        }
    }
    return rows;
}

AuditReport run_audit(const Trajectory& traj, const AuditContext& ctx) {
    AuditReport rep;
    const Grid& g = ctx.grid;
    const MaterialParams& mp = ctx.params;
    if (traj.states.empty()) {
        rep.pass = false;
        rep.notes.push_back("empty trajectory");
        return rep;
    }
    const double tolA = ctx.tol_factor * ctx.solver.tol;
    const EnergyLedger led0 = total_energy(traj.states[0].u, traj.states[0].c, traj.states[0].z,
                                           mp, g, ctx.boundary.at(0.0));
    const double e0_scale = 1.0 + std::abs(led0.total);

    const EnergySlack slack = audit_energy(traj, ctx);
    const ConservationAudit cons = audit_conservation(traj, ctx);
    if (!cons.applicable)
        rep.notes.push_back("mass conservation not applicable to Allen-Cahn trajectories");

    // initial-state structure
    {
        StepAudit a;
        a.step = 0;
        a.t = traj.states[0].t;
        a.simplex_defect = traj.states[0].simplex_defect();
        a.z_min = 1e300;
        a.z_max = -1e300;
        a.c_min = 1e300;
        for (int cell = 0; cell < g.cells(); ++cell) {
            a.z_min = std::min(a.z_min, traj.states[0].z(cell));
            a.z_max = std::max(a.z_max, traj.states[0].z(cell));
            for (int k = 0; k < mp.ncomp; ++k) a.c_min = std::min(a.c_min, traj.states[0].c(cell, k));
        }
        if (a.simplex_defect > 1e-12) a.failures.push_back("simplex defect");
        if (a.z_min < -1e-12 || a.z_max > 1.0 + 1e-12) a.failures.push_back("damage bounds");
        if (mp.chem == ChemKind::Log && a.c_min <= 0.0) a.failures.push_back("positivity");
        a.pass = a.failures.empty();
        rep.steps.push_back(a);
    }

    for (size_t m = 1; m < traj.states.size(); ++m) {
        const State& now = traj.states[m];
        const State& prev = traj.states[m - 1];
        StepAudit a;
        a.step = static_cast<int>(m);
        a.t = now.t;
        a.energy_slack_half = slack.half[m - 1];
        a.energy_slack_sharp = slack.sharp[m - 1];

        const ElResiduals el = audit_el_residuals(now, prev, traj.tau, ctx);
        a.el_residual_1 = el.r1;
        a.el_residual_2 = el.r2;
        a.el_residual_3 = el.r3;

        const ViAudit vi = audit_vi(now, prev, traj.tau, ctx);
        a.vi_min_slack = vi.min_slack;
        a.r_pairing_min = vi.r_pairing_min;
        a.r_support_violation = vi.r_support_violation;

        a.simplex_defect = now.simplex_defect();
        a.z_min = 1e300;
        a.z_max = -1e300;
        a.c_min = 1e300;
        a.z_increase = -1e300;
        for (int cell = 0; cell < g.cells(); ++cell) {
            a.z_min = std::min(a.z_min, now.z(cell));
            a.z_max = std::max(a.z_max, now.z(cell));
            a.z_increase = std::max(a.z_increase, now.z(cell) - prev.z(cell));
            for (int k = 0; k < mp.ncomp; ++k) a.c_min = std::min(a.c_min, now.c(cell, k));
        }
        if (cons.applicable) {
            a.mass_drift = 0.0;
            for (double d : cons.drift[m - 1]) a.mass_drift = std::max(a.mass_drift, d);
        }

        // thresholds
        if (a.energy_slack_half < -tolA * e0_scale) a.failures.push_back("energy inequality");
        {
            const Field cdot = rate_field(now.c, prev.c, traj.tau);
            const Field sw = apply_s(now.w, ctx.mode, g, mp.mobility);
            const double scale1 = 1.0 + vnorm(cdot, g) + vnorm(sw, g);
            if (a.el_residual_1 > tolA * scale1) a.failures.push_back("euler-lagrange residual (i)");
        }
        if (a.el_residual_2 > tolA) a.failures.push_back("euler-lagrange residual (ii)");
        if (a.el_residual_3 > tolA) a.failures.push_back("euler-lagrange residual (iii)");
        if (a.vi_min_slack < -tolA * std::max(1.0, 1.0 / std::sqrt(g.cell_volume())))
            a.failures.push_back("variational inequality");
        if (a.r_pairing_min < -tolA) a.failures.push_back("subgradient pairing");
        if (a.r_support_violation > 0.0) a.failures.push_back("subgradient support");
        if (cons.applicable && a.mass_drift > 1e-10 * g.domain_volume())
            a.failures.push_back("mass conservation");
        if (a.simplex_defect > 1e-12) a.failures.push_back("simplex defect");
        if (a.z_increase > 1e-12) a.failures.push_back("damage monotonicity");
        if (a.z_min < -1e-12 || a.z_max > 1.0 + 1e-12) a.failures.push_back("damage bounds");
        if (mp.chem == ChemKind::Log && a.c_min <= 0.0) a.failures.push_back("positivity");

        a.pass = a.failures.empty();
        rep.steps.push_back(a);
    }

    rep.pass = true;
    for (const auto& s : rep.steps) rep.pass = rep.pass && s.pass;
    if (traj.failed) {
        rep.pass = false;
        rep.notes.push_back("trajectory incomplete: " + traj.failure);
    }
    return rep;
}

} // namespace phasedam
