#include "phasedam/grid.hpp"

#include <algorithm>

namespace phasedam {

Grid make_grid(int dim, const std::vector<int>& cells, const std::vector<double>& extent,
               const std::array<bool, 4>& dirichlet_mask) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("make_grid: dim must be 1 or 2");
    if (static_cast<int>(cells.size()) < dim || static_cast<int>(extent.size()) < dim)
        throw std::invalid_argument("make_grid: need one cell count and extent per axis");
    Grid g;
    g.dim = dim;
    g.nx = cells[0];
    g.ny = dim == 2 ? cells[1] : 1;
    g.lx = extent[0];
    g.ly = dim == 2 ? extent[1] : 1.0;
    if (g.nx < 2 || (dim == 2 && g.ny < 2))
        throw std::invalid_argument("make_grid: need at least 2 cells per axis");
    if (g.lx <= 0.0 || (dim == 2 && g.ly <= 0.0))
        throw std::invalid_argument("make_grid: extent must be positive");
    g.hx = g.lx / g.nx;
    g.hy = dim == 2 ? g.ly / g.ny : 1.0;
    g.dirichlet = dirichlet_mask;
    if (dim == 1) {
        g.dirichlet[FaceYLo] = false;
        g.dirichlet[FaceYHi] = false;
    }
    return g;
}

bool Field::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

void require_shape(const Field& f, const Grid& g, int ncomp, const char* what) {
    if (f.ncomp != ncomp || f.cells() != g.cells())
        throw std::invalid_argument(std::string(what) + ": field shape does not match grid");
}

// --- boundary data ----------------------------------------------------------

std::array<double, 2> BoundaryValues::trace(const Grid& g, Face f, double s) const {
    if (!affine) return face[f];
    double x = 0.0, y = 0.0;
    switch (f) {
        case FaceXLo: x = 0.0;  y = s; break;
        case FaceXHi: x = g.lx; y = s; break;
        case FaceYLo: x = s; y = 0.0;  break;
        case FaceYHi: x = s; y = g.ly; break;
    }
    if (g.dim == 1) y = 0.0;
    return {a[0] + B[0] * x + B[1] * y, a[1] + B[2] * x + B[3] * y};
}

std::array<double, 2> BoundaryValues::extension(const Grid& g, double x, double y) const {
    if (affine) return {a[0] + B[0] * x + B[1] * y, a[1] + B[2] * x + B[3] * y};
    std::array<double, 2> out{0.0, 0.0};
    int active = 0;
    if (g.dirichlet[FaceXLo] || g.dirichlet[FaceXHi]) {
        ++active;
        const double t = x / g.lx;
        if (g.dirichlet[FaceXLo] && g.dirichlet[FaceXHi]) {
            out[0] += (1.0 - t) * face[FaceXLo][0] + t * face[FaceXHi][0];
            out[1] += (1.0 - t) * face[FaceXLo][1] + t * face[FaceXHi][1];
        } else if (g.dirichlet[FaceXLo]) {
            out[0] += face[FaceXLo][0];
            out[1] += face[FaceXLo][1];
        } else {
            out[0] += face[FaceXHi][0];
            out[1] += face[FaceXHi][1];
        }
    }
    if (g.dim == 2 && (g.dirichlet[FaceYLo] || g.dirichlet[FaceYHi])) {
        ++active;
        const double t = y / g.ly;
        if (g.dirichlet[FaceYLo] && g.dirichlet[FaceYHi]) {
            out[0] += (1.0 - t) * face[FaceYLo][0] + t * face[FaceYHi][0];
            out[1] += (1.0 - t) * face[FaceYLo][1] + t * face[FaceYHi][1];
        } else if (g.dirichlet[FaceYLo]) {
            out[0] += face[FaceYLo][0];
            out[1] += face[FaceYLo][1];
        } else {
            out[0] += face[FaceYHi][0];
            out[1] += face[FaceYHi][1];
        }
    }
    if (active > 1) {
        out[0] /= active;
        out[1] /= active;
    }
    return out;
}

std::array<double, 4> BoundaryValues::extension_grad(const Grid& g) const {
    if (affine) return B;
    std::array<double, 4> gd{0.0, 0.0, 0.0, 0.0};
    int active = 0;
    if (g.dirichlet[FaceXLo] || g.dirichlet[FaceXHi]) ++active;
    if (g.dim == 2 && (g.dirichlet[FaceYLo] || g.dirichlet[FaceYHi])) ++active;
    if (active == 0) return gd;
    if (g.dirichlet[FaceXLo] && g.dirichlet[FaceXHi]) {
        gd[0] = (face[FaceXHi][0] - face[FaceXLo][0]) / g.lx / active;
        gd[2] = (face[FaceXHi][1] - face[FaceXLo][1]) / g.lx / active;
    }
    if (g.dim == 2 && g.dirichlet[FaceYLo] && g.dirichlet[FaceYHi]) {
        gd[1] = (face[FaceYHi][0] - face[FaceYLo][0]) / g.ly / active;
        gd[3] = (face[FaceYHi][1] - face[FaceYLo][1]) / g.ly / active;
    }
    return gd;
}

std::array<double, 2> BoundaryValues::trace_tangent_deriv(const Grid& g, Face f) const {
    if (!affine || g.dim == 1) return {0.0, 0.0};
    if (f == FaceXLo || f == FaceXHi) return {B[1], B[3]}; // d/dy
    return {B[0], B[2]};                                   // d/dx
}

// --- wide central-difference operators --------------------------------------

namespace {

inline double mirror_get(const Field& f, const Grid& g, int i, int j, int k) {
    i = std::clamp(i, 0, g.nx - 1);
    j = std::clamp(j, 0, g.ny - 1);
    return f(g.id(i, j), k);
}

// anti-mirror: the interpolated face value vanishes (zero normal flux)
inline double antimirror_get(const Field& f, const Grid& g, int i, int j, int k) {
    double sign = 1.0;
    if (i < 0) { i = 0; sign = -sign; }
    if (i > g.nx - 1) { i = g.nx - 1; sign = -sign; }
    if (j < 0) { j = 0; sign = -sign; }
    if (j > g.ny - 1) { j = g.ny - 1; sign = -sign; }
    return sign * f(g.id(i, j), k);
}

// displacement ghost: Dirichlet faces interpolate the trace, others mirror
inline double u_get(const Field& u, const Grid& g, const BoundaryValues& b, int i, int j, int k) {
    if (i >= 0 && i < g.nx && j >= 0 && j < g.ny) return u(g.id(i, j), k);
    if (i < 0) {
        const double inner = u(g.id(0, j >= 0 && j < g.ny ? j : std::clamp(j, 0, g.ny - 1)), k);
        if (g.dirichlet[FaceXLo]) return 2.0 * b.trace(g, FaceXLo, g.yc(std::clamp(j, 0, g.ny - 1)))[k] - inner;
        return inner;
    }
    if (i >= g.nx) {
        const double inner = u(g.id(g.nx - 1, std::clamp(j, 0, g.ny - 1)), k);
        if (g.dirichlet[FaceXHi]) return 2.0 * b.trace(g, FaceXHi, g.yc(std::clamp(j, 0, g.ny - 1)))[k] - inner;
        return inner;
    }
    if (j < 0) {
        const double inner = u(g.id(i, 0), k);
        if (g.dirichlet[FaceYLo]) return 2.0 * b.trace(g, FaceYLo, g.xc(i))[k] - inner;
        return inner;
    }
    const double inner = u(g.id(i, g.ny - 1), k);
    if (g.dirichlet[FaceYHi]) return 2.0 * b.trace(g, FaceYHi, g.xc(i))[k] - inner;
    return inner;
}

} // namespace

Field gradient(const Field& f, const Grid& g) {
    require_shape(f, g, 1, "gradient");
    Field out = vector_field(g);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int c = g.id(i, j);
            out(c, 0) = (mirror_get(f, g, i + 1, j, 0) - mirror_get(f, g, i - 1, j, 0)) / (2.0 * g.hx);
            if (g.dim == 2)
                out(c, 1) = (mirror_get(f, g, i, j + 1, 0) - mirror_get(f, g, i, j - 1, 0)) / (2.0 * g.hy);
        }
    }
    return out;
}

Field divergence(const Field& v, const Grid& g) {
    require_shape(v, g, g.dim, "divergence");
    Field out = scalar_field(g);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int c = g.id(i, j);
            double d = (antimirror_get(v, g, i + 1, j, 0) - antimirror_get(v, g, i - 1, j, 0)) / (2.0 * g.hx);
            if (g.dim == 2)
                d += (antimirror_get(v, g, i, j + 1, 1) - antimirror_get(v, g, i, j - 1, 1)) / (2.0 * g.hy);
            out(c, 0) = d;
        }
    }
    return out;
}

Field sym_gradient(const Field& u, const Grid& g, const BoundaryValues& b) {
    require_shape(u, g, g.dim, "sym_gradient");
    Field out = sym_tensor_field(g);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int c = g.id(i, j);
            const double dxx = (u_get(u, g, b, i + 1, j, 0) - u_get(u, g, b, i - 1, j, 0)) / (2.0 * g.hx);
            if (g.dim == 1) {
                out(c, 0) = dxx;
                continue;
            }
            const double dyy = (u_get(u, g, b, i, j + 1, 1) - u_get(u, g, b, i, j - 1, 1)) / (2.0 * g.hy);
            const double dxy_u0 = (u_get(u, g, b, i, j + 1, 0) - u_get(u, g, b, i, j - 1, 0)) / (2.0 * g.hy);
            const double dyx_u1 = (u_get(u, g, b, i + 1, j, 1) - u_get(u, g, b, i - 1, j, 1)) / (2.0 * g.hx);
            out(c, 0) = dxx;
            out(c, 1) = dyy;
            out(c, 2) = 0.5 * (dxy_u0 + dyx_u1);
        }
    }
    return out;
}

double integrate(const Field& f, const Grid& g, int comp) {
    double s = 0.0;
    for (int c = 0; c < g.cells(); ++c) s += f(c, comp);
    return s * g.cell_volume();
}

double mean_value(const Field& f, const Grid& g, int comp) {
    return integrate(f, g, comp) / g.domain_volume();
}

double inner_l2(const Field& a, const Field& b, const Grid& g) {
    if (a.ncomp != b.ncomp || a.cells() != b.cells())
        throw std::invalid_argument("inner_l2: shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s * g.cell_volume();
}

double max_abs(const Field& f) {
    double m = 0.0;
    for (double x : f.data) m = std::max(m, std::abs(x));
    return m;
}

double max_abs_diff(const Field& a, const Field& b) {
    if (a.data.size() != b.data.size()) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

Field displacement_gradient_norm(const Field& u, const Grid& g, const BoundaryValues& b) {
    require_shape(u, g, g.dim, "displacement_gradient_norm");
    Field out = scalar_field(g);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double n2 = 0.0;
            for (int p = 0; p < g.dim; ++p) {
                const double dx = (u_get(u, g, b, i + 1, j, p) - u_get(u, g, b, i - 1, j, p)) / (2.0 * g.hx);
                n2 += dx * dx;
                if (g.dim == 2) {
                    const double dy = (u_get(u, g, b, i, j + 1, p) - u_get(u, g, b, i, j - 1, p)) / (2.0 * g.hy);
                    n2 += dy * dy;
                }
            }
            out(g.id(i, j)) = std::sqrt(n2);
        }
    }
    return out;
}

double lp_norm(const Field& f, const Grid& g, double p) {
    double s = 0.0;
    for (int c = 0; c < f.cells(); ++c) {
        double n2 = 0.0;
        for (int k = 0; k < f.ncomp; ++k) n2 += f(c, k) * f(c, k);
        s += std::pow(n2, 0.5 * p);
    }
    return std::pow(s * g.cell_volume(), 1.0 / p);
}

} // namespace phasedam
