// Algebra of the concentration simplex: the tangent-space projection, the
// mobility matrix and its validation, the diffusion operator S (pointwise
// multiplication in Allen-Cahn mode, -div(M grad .) in Cahn-Hilliard mode)
// and its inverse on the admissible subspace.
#pragma once

#include "phasedam/grid.hpp"
#include "phasedam/linalg.hpp"

#include <string>
#include <vector>

namespace phasedam {

enum class Mode { CahnHilliard, AllenCahn };

inline const char* mode_name(Mode m) {
    return m == Mode::CahnHilliard ? "cahn-hilliard" : "allen-cahn";
}

// P = I - (1/N) 1 1^T, the orthogonal projection onto {x : sum_k x_k = 0}
DenseMat projection_matrix(int ncomp);

// orthonormal basis of the tangent space as columns of an N x (N-1) matrix
DenseMat tsigma_basis(int ncomp);

struct MobilityReport {
    bool pass = false;
    double min_eigenvalue_tsigma = 0.0;
    std::vector<std::string> violations;
};

// symmetry, zero row sums, positive definiteness on the tangent space
MobilityReport validate_mobility(const DenseMat& m, double tol = 1e-10);

struct Mobility {
    DenseMat m;     // N x N, symmetric, zero row sums, PD on the tangent space
    DenseMat pinv;  // pseudo-inverse (kernel: span{1})
    double min_eigenvalue_tsigma = 0.0;

    Mobility() = default;
    explicit Mobility(const DenseMat& matrix); // throws on validation failure
    int ncomp() const { return m.n; }

    // default mobility: the tangent-space projection scaled to match the
    // standard two-component choice [[1,-1],[-1,1]]
    static Mobility standard(int ncomp);
};

// Energy gradient tensor acting on the component index, direction-isotropic:
// (Gamma grad c)_{k,d} = sum_l G_{kl} d_d c_l. Default G = gamma * Id.
struct GradientTensor {
    DenseMat g;

    GradientTensor() = default;
    explicit GradientTensor(const DenseMat& matrix); // throws unless symmetric PD
    static GradientTensor isotropic(double gamma, int ncomp);
    bool is_isotropic(double tol = 1e-12) const;
    int ncomp() const { return g.n; }
};

// S f: Allen-Cahn: pointwise M f; Cahn-Hilliard: compact-stencil -div(M grad f)
// with zero normal flux. The CH result has zero mean per component.
Field apply_s(const Field& f, Mode mode, const Grid& grid, const Mobility& mob);

// Inverse of S on the admissible space. Allen-Cahn: pointwise pseudo-inverse.
// Cahn-Hilliard: conjugate gradients on the mean-zero subspace to relative
// residual `tol`; the result is gauged to zero mean per component.
// Throws on nonzero-mean CH input and on CG non-convergence.
Field solve_s_inverse(const Field& f, Mode mode, const Grid& grid, const Mobility& mob,
                      double tol = 1e-10, int max_iter = 0);

// scalar product of the proximal metric:
//   Allen-Cahn:    (v1|v2)_X = int M v1 . v2
//   Cahn-Hilliard: (v1|v2)_X = int M grad(S^-1 v1) : grad(S^-1 v2) = int v1 . S^-1 v2
double inner_x(const Field& v1, const Field& v2, Mode mode, const Grid& grid,
               const Mobility& mob, double tol = 1e-12);

// <S w, w> >= 0, the diffusive dissipation rate entering the energy estimate
double s_dissipation(const Field& w, Mode mode, const Grid& grid, const Mobility& mob);

// pointwise tangent-space projection, in place
void project_tsigma(Field& f, const DenseMat& proj);

// subtract the componentwise mean (the mass-constraint gauge), in place
void remove_component_means(Field& f, const Grid& grid);

} // namespace phasedam
