// Reference implementations used to cross-check the incremental scheme on
// small instances: a straight-line re-evaluation of the incremental
// functional on 1D two-component problems, a generic projected-gradient
// minimizer over all unknowns with numeric derivatives, and a direct
// tridiagonal solve of the 1D elastic balance.
//
// Deliberately independent of the energy-assembly code paths it checks.
#pragma once

#include "phasedam/energy.hpp"
#include "phasedam/simplex.hpp"

#include <iosfwd>
#include <vector>

namespace phasedam {

struct DenseInstance {
    int cells = 4;
    double length = 1.0;
    Mode mode = Mode::AllenCahn;
    double tau = 0.05;
    double epsilon = 0.0;
    double p = 4.0;
    double gamma = 1.0;
    double theta_w = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    double eta_tilde = 0.01;
    double mobility_tsigma = 2.0;         // eigenvalue of the standard 2x2 mobility
    std::array<double, 2> stiffness{1.0, 1.0};   // per-phase 2 mu + lambda
    std::array<double, 2> eigenstrain{0.0, 0.0}; // per-phase scalar
    bool dirichlet_left = true, dirichlet_right = true;
    double b_left = 0.0, b_right = 0.0;
    PhiKind phi = PhiKind::Quadratic;

    std::vector<double> u_prev, c_prev, z_prev; // c_prev holds the first component

    double h() const { return length / cells; }
};

// unknown layout: x = [u_0..u_{n-1}, y_0..y_{n-1}, z_0..z_{n-1}] with
// c_0 = c_prev + y and c_1 = (1 - c_prev) - y
double dense_functional(const DenseInstance& inst, const std::vector<double>& x);

struct DenseResult {
    std::vector<double> u, c0, z;
    double functional = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

DenseResult dense_minimize(const DenseInstance& inst, double tol = 1e-11, int max_iter = 200000);

// direct solve of the 1D quasi-static balance for the face scheme:
// per-face stiffness K_f and stress-free strain s_f, Dirichlet values where
// flagged; returns cell displacements
std::vector<double> dense_elastic_1d(int cells, double h, const std::vector<double>& K_face,
                                     const std::vector<double>& s_face, bool dirichlet_left,
                                     bool dirichlet_right, double b_left, double b_right);

// the reference instance family used by the cross checks
DenseInstance make_reference_instance(Mode mode, double epsilon);

struct OracleComparison {
    bool pass = false;
    double d_energy = 0.0;
    double du = 0.0, dc = 0.0, dz = 0.0;
};

// runs one incremental step and the dense minimizer on the same instance
OracleComparison compare_step_with_dense(const DenseInstance& inst);

// small-instance cross checks driven by the command line; prints one
// pass/fail line per check, returns the number of failures
int run_oracle_suite(std::ostream& out);

} // namespace phasedam
