// The time-incremental scheme: initial displacement, per-step constrained
// minimization of the incremental functional by block-coordinate descent,
// chemical potential recovery, the time loop and the interpolants.
#pragma once

#include "phasedam/energy.hpp"
#include "phasedam/grid.hpp"
#include "phasedam/simplex.hpp"

#include <optional>
#include <string>
#include <vector>

namespace phasedam {

// one time slice q = (u, c, w, z)
struct State {
    double t = 0.0;
    Field u; // displacement
    Field c; // concentrations
    Field w; // chemical potential
    Field z; // damage

    // pointwise simplex defect max_x |sum_k c_k - 1|
    double simplex_defect() const;
    std::vector<std::string> validate(const MaterialParams& mp, const Grid& g) const;
};

// time-dependent boundary displacement: either piecewise-linear-in-time
// vectors per Dirichlet face, or a piecewise-linear-in-time affine field
struct BoundarySpec {
    bool affine = false;
    std::array<std::vector<std::pair<double, std::array<double, 2>>>, 4> face_bp;
    std::vector<std::pair<double, std::array<double, 6>>> affine_bp; // a(0..1), B(2..5)

    static BoundarySpec zero();
    static BoundarySpec constant_faces(const std::array<std::array<double, 2>, 4>& v);

    BoundaryValues at(double t) const;
    BoundaryValues rate(double t) const; // slope within the containing interval
    std::vector<double> time_nodes() const;
};

struct SolverSettings {
    double tol = 1e-9;        // joint first-order residual target (V-scaled l2)
    int max_outer = 200;      // alternation sweeps per step
    int max_inner = 500;      // descent iterations per block solve
    double cg_tol = 1e-12;    // relative residual of inner CG solves
    int cg_max_iter = 0;      // 0: automatic
    double z_zero_tol = 1e-10; // discrete counterpart of the {z = 0} set
};

struct StepDiagnostics {
    int outer_iterations = 0;
    double joint_residual = 0.0;
    double functional_value = 0.0;          // incremental functional at the accepted state
    double functional_lifted_prev = 0.0;    // ... at (u_prev + lift, c_prev, z_prev)
    double functional_lifted_u = 0.0;       // ... at (u_prev + lift, c_new, z_new)
    double s_dissipation = 0.0;             // <S w, w>
    double rate_dissipation = 0.0;          // int -alpha zdot + (beta/2) zdot^2
    double cdot_l2sq = 0.0;                 // int |cdot|^2
    bool converged = false;
};

struct StepFailure : std::runtime_error {
    explicit StepFailure(const std::string& what) : std::runtime_error(what) {}
};

struct Trajectory {
    double tau = 0.0;
    double horizon = 0.0;
    std::vector<State> states;
    std::vector<EnergyLedger> ledgers;       // one per state
    std::vector<StepDiagnostics> diagnostics; // one per step (size M)
    bool failed = false;
    std::string failure;
};

enum class InterpKind { Left, Right, Linear };

// unique minimizer of the displacement part of the energy at fixed (c0, z0)
// with trace b0 on the Dirichlet boundary
Field initial_displacement(const Field& c0, const Field& z0, const BoundaryValues& b0,
                           const MaterialParams& mp, const Grid& g, double tol,
                           const Field* initial_guess = nullptr, int max_iter = 20000);

// w = -S^{-1}((c_new - c_prev)/tau) (+ mass-constraint multiplier for C-H)
Field recover_potential(const Field& c_new, const Field& c_prev, double tau, const Field& u_new,
                        const Field& z_new, const MaterialParams& mp, Mode mode, const Grid& g,
                        const BoundaryValues& b_next, const SolverSettings& st);

// one constrained minimization of the incremental functional over
// { u|_D = b_next, mass constraint (C-H), 0 <= z <= z_prev }
State incremental_step(const State& prev, double tau, const BoundaryValues& b_prev,
                       const BoundaryValues& b_next, const MaterialParams& mp, Mode mode,
                       const Grid& g, const SolverSettings& st, StepDiagnostics* diag = nullptr);

struct RunSetup {
    Grid grid;
    MaterialParams params;
    Mode mode = Mode::CahnHilliard;
    BoundarySpec boundary;
    Field c0;
    Field z0;
    double horizon = 1.0;
    int steps = 1;
    SolverSettings solver;
};

// runs the recursion from the initial triple; aborts with the partial
// trajectory and a failure note if a step does not converge
Trajectory run_simulation(const RunSetup& setup);

// piecewise-constant left/right interpolants and the piecewise-linear one
State interpolant_eval(const Trajectory& traj, double t, InterpKind kind);

// the incremental functional value at a candidate (diagnostic/audit use)
double incremental_functional(const Field& u, const Field& c, const Field& z, const State& prev,
                              double tau, const MaterialParams& mp, Mode mode, const Grid& g,
                              const BoundaryValues& b_next, const SolverSettings& st);

} // namespace phasedam
