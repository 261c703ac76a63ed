// Structured cell-centered grid (1D/2D boxes), fields living on it, and the
// discrete differential operators and quadratures used throughout.
//
// Conventions:
//   * fields are cell-centered; cell (i,j) has center ((i+1/2)hx, (j+1/2)hy);
//   * scalar quantities (c, z, w) satisfy homogeneous Neumann conditions,
//     realized by mirror ghost cells;
//   * the displacement carries Dirichlet data on tagged boundary faces,
//     realized by ghost cells interpolating the face value;
//   * flux-like vector fields use anti-mirror ghosts (zero normal flux), which
//     makes gradient/divergence exact discrete adjoints on Neumann-closed
//     grids (summation by parts).
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace phasedam {

enum Face : int { FaceXLo = 0, FaceXHi = 1, FaceYLo = 2, FaceYHi = 3 };

struct Grid {
    int dim = 1;
    int nx = 0, ny = 1;
    double lx = 0.0, ly = 1.0;
    double hx = 0.0, hy = 1.0;
    std::array<bool, 4> dirichlet{false, false, false, false};

    int cells() const { return nx * ny; }
    double cell_volume() const { return dim == 1 ? hx : hx * hy; }
    double domain_volume() const { return dim == 1 ? lx : lx * ly; }
    int id(int i, int j) const { return j * nx + i; }
    double xc(int i) const { return (i + 0.5) * hx; }
    double yc(int j) const { return (j + 0.5) * hy; }
    bool any_dirichlet() const {
        return dirichlet[0] || dirichlet[1] || (dim == 2 && (dirichlet[2] || dirichlet[3]));
    }
    bool all_dirichlet() const {
        if (dim == 1) return dirichlet[0] && dirichlet[1];
        return dirichlet[0] && dirichlet[1] && dirichlet[2] && dirichlet[3];
    }
};

// cells per axis >= 2 so every cell has at least one interior neighbor per axis
Grid make_grid(int dim, const std::vector<int>& cells, const std::vector<double>& extent,
               const std::array<bool, 4>& dirichlet_mask);

// Generic cell-major field storage: data[cell * ncomp + k].
// ScalarField: ncomp = 1; VectorField: ncomp = dim; ConcentrationField: ncomp = N;
// SymTensorField: ncomp = dim*(dim+1)/2 with component order (xx) in 1D and
// (xx, yy, xy) in 2D.
struct Field {
    int ncomp = 1;
    std::vector<double> data;

    Field() = default;
    Field(const Grid& g, int ncomp_) : ncomp(ncomp_), data(static_cast<size_t>(g.cells()) * ncomp_, 0.0) {}

    double& operator()(int cell, int k = 0) { return data[static_cast<size_t>(cell) * ncomp + k]; }
    double operator()(int cell, int k = 0) const { return data[static_cast<size_t>(cell) * ncomp + k]; }
    int cells() const { return ncomp > 0 ? static_cast<int>(data.size()) / ncomp : 0; }
    bool all_finite() const;
};

inline Field scalar_field(const Grid& g) { return Field(g, 1); }
inline Field vector_field(const Grid& g) { return Field(g, g.dim); }
inline Field concentration_field(const Grid& g, int ncomp) { return Field(g, ncomp); }
inline Field sym_tensor_field(const Grid& g) { return Field(g, g.dim == 1 ? 1 : 3); }

void require_shape(const Field& f, const Grid& g, int ncomp, const char* what);

// Boundary displacement data evaluated at a fixed time. Either one vector per
// Dirichlet face or a global affine field a + B x; trace(), extension() and
// the extension gradient are consistent between the two forms.
struct BoundaryValues {
    bool affine = false;
    std::array<std::array<double, 2>, 4> face{};   // per-face vector (per-face form)
    std::array<double, 2> a{};                     // affine offset
    std::array<double, 4> B{};                     // affine matrix, row-major 2x2

    static BoundaryValues zero() { return BoundaryValues{}; }

    // value of b on boundary face `f` at tangential position s (arc coordinate)
    std::array<double, 2> trace(const Grid& g, Face f, double s) const;
    // extension of b into the domain (used for warm-start lifts and the
    // boundary-working terms of the energy estimate)
    std::array<double, 2> extension(const Grid& g, double x, double y) const;
    // spatial gradient of the extension, row-major 2x2 (constant in space)
    std::array<double, 4> extension_grad(const Grid& g) const;
    // tangential derivative of the trace along face f
    std::array<double, 2> trace_tangent_deriv(const Grid& g, Face f) const;
};

// --- wide (central-difference) operators -----------------------------------
// These are the field-level operators used by diagnostics and norm reports.
// The energy assembly uses compact face differences instead (see energy.hpp).

// central differences with mirror ghosts (homogeneous Neumann)
Field gradient(const Field& f, const Grid& g);
// central differences with anti-mirror ghosts (zero normal flux); adjoint to gradient
Field divergence(const Field& v, const Grid& g);
// symmetric gradient of a displacement with Dirichlet ghosts where tagged,
// mirror ghosts elsewhere
Field sym_gradient(const Field& u, const Grid& g, const BoundaryValues& b);

// midpoint quadrature
double integrate(const Field& f, const Grid& g, int comp = 0);
double mean_value(const Field& f, const Grid& g, int comp = 0);
double inner_l2(const Field& a, const Field& b, const Grid& g);

// pointwise norms
double max_abs(const Field& f);
double max_abs_diff(const Field& a, const Field& b);

// ||f||_{L^p} via midpoint quadrature of the pointwise euclidean norm over components
double lp_norm(const Field& f, const Grid& g, double p);

// pointwise Frobenius norm of the full displacement gradient (wide stencils)
Field displacement_gradient_norm(const Field& u, const Grid& g, const BoundaryValues& b);

// ghost-stencil helper: central derivative of a cell field in direction d at
// cell (i,j), expressed as sum of up to two cell contributions plus a constant
// (the constant absorbs Dirichlet data). Used by the energy assembly.
struct CentralStencil {
    int cell[2] = {-1, -1};
    double coeff[2] = {0.0, 0.0};
    double constant = 0.0; // per component; scaled by boundary data externally
};

} // namespace phasedam
