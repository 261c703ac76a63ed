// Energy densities and their derivatives, the assembled discrete energy
// (gradient terms on compact face differences, bulk terms by midpoint
// quadrature) and the dissipation functional.
//
// The face-based quadrature is what the incremental scheme minimizes; its
// exact discrete gradients (grad_u_energy / grad_c_bulk / grad_z_bulk) are
// shared by the solver blocks and the Euler-Lagrange audits.
#pragma once

#include "phasedam/grid.hpp"
#include "phasedam/linalg.hpp"
#include "phasedam/simplex.hpp"

#include <array>
#include <string>
#include <vector>

namespace phasedam {

// symmetric 2x2 tensor as (xx, yy, xy); 1D uses the xx slot only
using SymTensor = std::array<double, 3>;

inline double sym_contract(const SymTensor& a, const SymTensor& b) {
    return a[0] * b[0] + a[1] * b[1] + 2.0 * a[2] * b[2];
}
inline double sym_trace(const SymTensor& a, int dim) { return dim == 1 ? a[0] : a[0] + a[1]; }

enum class ChemKind { Poly, Log };
enum class PhiKind { Quadratic, Linear };

struct MaterialParams {
    int ncomp = 2;
    int dim = 1;

    GradientTensor gamma;  // energy gradient tensor (component index)
    Mobility mobility;

    ChemKind chem = ChemKind::Poly;
    double theta_w = 1.0;       // polynomial well scale
    double chem_offset = 0.0;   // additive constant on W^ch (gauge)
    double theta = 1.0;         // logarithmic temperature
    DenseMat A;                 // quadratic part of the logarithmic density
    double delta = 0.01;        // logarithmic regularization parameter
    double delta0 = 0.3;        // admissible upper bound for delta

    double alpha = 1.0;         // rate-independent dissipation slope
    double beta = 1.0;          // viscous dissipation weight

    PhiKind phi_kind = PhiKind::Quadratic;
    double eta_tilde = 0.01;    // residual stiffness floor

    double epsilon = 0.0;       // gradient regularization weight
    double p = 4.0;             // damage-gradient regularization exponent

    // per-phase isotropic stiffness and eigenstrain
    std::vector<double> mu;
    std::vector<double> lambda;
    std::vector<SymTensor> estar;

    double phi(double z) const;
    double phi_prime(double z) const;
    double mu_of(const double* c) const;
    double lambda_of(const double* c) const;
    SymTensor estar_of(const double* c) const;
    double stiffness_min_eigenvalue() const; // min over simplex vertices

    // chemical density/gradient for the active kind (+offset)
    double chem_density(const double* c) const;
    void chem_grad(const double* c, double* out) const;
    // uniform lower bound for W^ch on the simplex (0 for the polynomial well)
    double chem_lower_bound() const;

    std::vector<std::string> validate() const;
    void require_valid() const; // throws listing all violations
};

// Elliott-Luckhaus regularization of x log x: x log x for x >= delta,
// quadratic continuation below. C^2, convex.
double phi_delta(double x, double delta);
double phi_delta_prime(double x, double delta);

// polynomial multi-well theta_w * sum_k c_k^2 (1-c_k)^2
double chem_poly(const double* c, int ncomp, double theta_w);
void chem_poly_grad(const double* c, int ncomp, double theta_w, double* out);

// W^{ch,delta}(c) = theta sum_k phi_delta(c_k) + (1/2) c . A c
double chem_log_delta(const double* c, const MaterialParams& mp);
void chem_log_delta_grad(const double* c, const MaterialParams& mp, double* out);

// (Phi(z) + eta) * (1/2)(e - e*(c)) : C(c) (e - e*(c)) and its derivatives
double elastic_density(const SymTensor& e, const double* c, double z, const MaterialParams& mp);
SymTensor elastic_d_e(const SymTensor& e, const double* c, double z, const MaterialParams& mp);
void elastic_d_c(const SymTensor& e, const double* c, double z, const MaterialParams& mp, double* out);
double elastic_d_z(const SymTensor& e, const double* c, double z, const MaterialParams& mp);

struct EnergyLedger {
    double gradient_c = 0.0;  // 1/2 int Gamma grad c : grad c
    double gradient_z = 0.0;  // 1/2 int |grad z|^2
    double chemical = 0.0;    // int W^ch
    double elastic = 0.0;     // int W^el
    double reg_u = 0.0;       // (eps/4) int |grad u|^4
    double reg_z = 0.0;       // (eps/p) int |grad z|^p
    double total = 0.0;

    std::vector<std::string> validate(const MaterialParams& mp, const Grid& g) const;
};

EnergyLedger total_energy(const Field& u, const Field& c, const Field& z,
                          const MaterialParams& mp, const Grid& g, const BoundaryValues& b);

// exact gradients of the assembled discrete energy, as densities (1/V dE/dq)
Field grad_u_energy(const Field& u, const Field& c, const Field& z,
                    const MaterialParams& mp, const Grid& g, const BoundaryValues& b);
Field grad_c_bulk(const Field& u, const Field& c, const Field& z,
                  const MaterialParams& mp, const Grid& g, const BoundaryValues& b);
Field grad_z_bulk(const Field& u, const Field& c, const Field& z,
                  const MaterialParams& mp, const Grid& g, const BoundaryValues& b);

// elastic working density field against a prescribed boundary strain rate:
// int W^el_{,e}(e(u)+shift, c, z) : ebdot dx, assembled on the elastic face set
double elastic_working(const Field& u, const Field& c, const Field& z,
                       const MaterialParams& mp, const Grid& g, const BoundaryValues& b,
                       const SymTensor& strain_shift, const SymTensor& ebdot);

// eps int |grad u + shift|^2 (grad u + shift) : grad_bdot dx on the same face set
double quartic_working(const Field& u, const MaterialParams& mp, const Grid& g,
                       const BoundaryValues& b, const std::array<double, 4>& grad_shift,
                       const std::array<double, 4>& grad_bdot);

// cell density of the elastic damage-derivative alone (the driving force
// W^el_z entering the variational inequality and the subgradient support)
Field elastic_z_derivative(const Field& u, const Field& c, const Field& z,
                           const MaterialParams& mp, const Grid& g, const BoundaryValues& b);

// mean over the domain of the combined chemical + elastic concentration
// derivative (the mass-constraint multiplier of the Cahn-Hilliard step)
std::vector<double> lagrange_multiplier(const Field& u, const Field& c, const Field& z,
                                        const MaterialParams& mp, Mode mode, const Grid& g,
                                        const BoundaryValues& b);

// int -alpha zdot + (beta/2) zdot^2; requires zdot <= 0 pointwise
double dissipation_r(const Field& z_rate, const MaterialParams& mp, const Grid& g);

} // namespace phasedam
