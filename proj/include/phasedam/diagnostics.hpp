// Post-hoc certification of trajectories: the per-step energy inequality in
// both its factor-1/2 and sharp forms, the discrete Euler-Lagrange residuals,
// the damage variational inequality with the explicit subgradient, mass
// conservation, constraint and positivity checks, and the strain
// higher-integrability monitor.
#pragma once

#include "phasedam/stepper.hpp"

#include <string>
#include <vector>

namespace phasedam {

struct AuditContext {
    const Grid& grid;
    const MaterialParams& params;
    Mode mode;
    const BoundarySpec& boundary;
    SolverSettings solver;
    double tol_factor = 10.0; // audit tolerance = tol_factor * solver.tol
    unsigned vi_seed = 20240101;
    int vi_random_samples = 32;
};

struct StepAudit {
    int step = 0;
    double t = 0.0;
    double energy_slack_half = 0.0;   // RHS - LHS, factor-1/2 inequality (cumulative)
    double energy_slack_sharp = 0.0;  // RHS - LHS, sharp-weight form (sign not asserted)
    double el_residual_1 = 0.0;       // diffusion identity
    double el_residual_2 = 0.0;       // potential identity (tangent-space tests)
    double el_residual_3 = 0.0;       // quasi-static balance
    double vi_min_slack = 0.0;        // min over sampled nonpositive tests
    double r_pairing_min = 0.0;       // min sampled <r, z - zeta>, zeta >= 0
    double r_support_violation = 0.0; // |r| outside the discrete zero set
    double mass_drift = 0.0;          // max component drift vs the initial state
    double simplex_defect = 0.0;
    double z_increase = 0.0;          // max pointwise increase vs previous step
    double z_min = 0.0, z_max = 0.0;
    double c_min = 0.0;
    bool pass = true;
    std::vector<std::string> failures;
};

struct AuditReport {
    bool pass = true;
    std::vector<StepAudit> steps;
    std::vector<std::string> notes;
};

// cumulative energy-inequality slacks for every step of a trajectory
struct EnergySlack {
    std::vector<double> half;  // factor-1/2 form, expected >= -tol
    std::vector<double> sharp; // full-weight form, reported without sign assertion
};
EnergySlack audit_energy(const Trajectory& traj, const AuditContext& ctx);

struct ElResiduals {
    double r1 = 0.0, r2 = 0.0, r3 = 0.0;
};
ElResiduals audit_el_residuals(const State& state, const State& prev, double tau,
                               const AuditContext& ctx);

struct ViAudit {
    double min_slack = 0.0;
    double r_pairing_min = 0.0;
    double r_support_violation = 0.0;
    Field r; // the explicit subgradient field
};
ViAudit audit_vi(const State& state, const State& prev, double tau, const AuditContext& ctx);

// per-step, per-component |int c_m - int c_0|; Allen-Cahn trajectories are
// reported as not applicable (the mode does not conserve mass)
struct ConservationAudit {
    bool applicable = false;
    std::vector<std::vector<double>> drift; // [step-1][component]
};
ConservationAudit audit_conservation(const Trajectory& traj, const AuditContext& ctx);

struct StrainIntegrabilityRow {
    int state_index = 0;
    double t = 0.0;
    double p = 0.0;
    double grad_lp = 0.0;
    double grad_l2 = 0.0;
    double c_l2p_sq = 0.0;
    double ratio = 0.0;
};
std::vector<StrainIntegrabilityRow> strain_integrability_report(const Trajectory& traj,
                                                                const AuditContext& ctx,
                                                                const std::vector<double>& p_list);

// the full certification used by the command-line audit
AuditReport run_audit(const Trajectory& traj, const AuditContext& ctx);

} // namespace phasedam
