#include "phasedam/simplex.hpp"

#include <cmath>

namespace phasedam {

DenseMat projection_matrix(int ncomp) {
    if (ncomp < 2) throw std::invalid_argument("projection_matrix: need at least 2 components");
    DenseMat p(ncomp);
    const double off = -1.0 / ncomp;
    for (int i = 0; i < ncomp; ++i)
        for (int j = 0; j < ncomp; ++j) p(i, j) = (i == j ? 1.0 + off : off);
    return p;
}

DenseMat tsigma_basis(int ncomp) {
    // Gram-Schmidt on e_k - e_{k+1}
    DenseMat basis(ncomp); // use first ncomp-1 columns
    std::vector<std::vector<double>> cols;
    for (int k = 0; k + 1 < ncomp; ++k) {
        std::vector<double> v(ncomp, 0.0);
        v[k] = 1.0;
        v[k + 1] = -1.0;
        for (const auto& q : cols) {
            double d = 0.0;
            for (int i = 0; i < ncomp; ++i) d += q[i] * v[i];
            for (int i = 0; i < ncomp; ++i) v[i] -= d * q[i];
        }
        double n = 0.0;
        for (double x : v) n += x * x;
        n = std::sqrt(n);
        for (double& x : v) x /= n;
        cols.push_back(v);
    }
    for (int k = 0; k < ncomp - 1; ++k)
        for (int i = 0; i < ncomp; ++i) basis(i, k) = cols[k][i];
    return basis;
}

MobilityReport validate_mobility(const DenseMat& m, double tol) {
    MobilityReport rep;
    const int n = m.n;
    if (n < 2) {
        rep.violations.push_back("mobility must be at least 2x2");
        return rep;
    }
    double scale = 0.0;
    for (double x : m.a) scale = std::max(scale, std::abs(x));
    scale = std::max(scale, 1.0);

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol * scale) {
                rep.violations.push_back("mobility is not symmetric");
                i = n;
                break;
            }
    for (int i = 0; i < n; ++i) {
        double rs = 0.0;
        for (int j = 0; j < n; ++j) rs += m(i, j);
        if (std::abs(rs) > tol * scale) {
            rep.violations.push_back("mobility row sums are not zero (row " + std::to_string(i) + ")");
            break;
        }
    }
    // definiteness on the tangent space: eigenvalues of T^t M T
    const DenseMat t = tsigma_basis(n);
    DenseMat mt(n - 1);
    for (int a = 0; a < n - 1; ++a)
        for (int b = 0; b < n - 1; ++b) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) s += t(i, a) * m(i, j) * t(j, b);
            mt(a, b) = s;
        }
    std::vector<double> eval;
    DenseMat evec;
    sym_eigen(mt, eval, evec);
    double mn = eval.empty() ? 0.0 : eval[0];
    for (double l : eval) mn = std::min(mn, l);
    rep.min_eigenvalue_tsigma = mn;
    if (mn <= tol * scale)
        rep.violations.push_back("mobility is not positive definite on the tangent space");

    rep.pass = rep.violations.empty();
    return rep;
}

Mobility::Mobility(const DenseMat& matrix) {
    MobilityReport rep = validate_mobility(matrix);
    if (!rep.pass) {
        std::string msg = "invalid mobility:";
        for (const auto& v : rep.violations) msg += " " + v + ";";
        throw std::invalid_argument(msg);
    }
    m = matrix;
    pinv = sym_pinv(matrix);
    min_eigenvalue_tsigma = rep.min_eigenvalue_tsigma;
}

Mobility Mobility::standard(int ncomp) {
    if (ncomp == 2) {
        DenseMat m(2);
        m(0, 0) = 1.0; m(0, 1) = -1.0;
        m(1, 0) = -1.0; m(1, 1) = 1.0;
        return Mobility(m);
    }
    DenseMat p = projection_matrix(ncomp);
    for (double& x : p.a) x *= 2.0;
    return Mobility(p);
}

GradientTensor::GradientTensor(const DenseMat& matrix) {
    const int n = matrix.n;
    double scale = 1.0;
    for (double x : matrix.a) scale = std::max(scale, std::abs(x));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(matrix(i, j) - matrix(j, i)) > 1e-12 * scale)
                throw std::invalid_argument("gradient tensor must be symmetric");
    std::vector<double> eval;
    DenseMat evec;
    sym_eigen(matrix, eval, evec);
    for (double l : eval)
        if (l <= 0.0) throw std::invalid_argument("gradient tensor must be positive definite");
    g = matrix;
}

GradientTensor GradientTensor::isotropic(double gamma, int ncomp) {
    if (gamma <= 0.0) throw std::invalid_argument("gradient tensor coefficient must be positive");
    DenseMat m(ncomp);
    for (int i = 0; i < ncomp; ++i) m(i, i) = gamma;
    return GradientTensor(m);
}

bool GradientTensor::is_isotropic(double tol) const {
    const double d = g(0, 0);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double want = i == j ? d : 0.0;
            if (std::abs(g(i, j) - want) > tol * std::max(1.0, std::abs(d))) return false;
        }
    return true;
}

void project_tsigma(Field& f, const DenseMat& proj) {
    const int n = f.ncomp;
    std::vector<double> tmp(n);
    for (int c = 0; c < f.cells(); ++c) {
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int l = 0; l < n; ++l) s += proj(k, l) * f(c, l);
            tmp[k] = s;
        }
        for (int k = 0; k < n; ++k) f(c, k) = tmp[k];
    }
}

void remove_component_means(Field& f, const Grid& grid) {
    for (int k = 0; k < f.ncomp; ++k) {
        const double m = mean_value(f, grid, k);
        for (int c = 0; c < f.cells(); ++c) f(c, k) -= m;
    }
}

Field apply_s(const Field& f, Mode mode, const Grid& grid, const Mobility& mob) {
    require_shape(f, grid, mob.ncomp(), "apply_s");
    const int n = mob.ncomp();
    Field out(grid, n);
    if (mode == Mode::AllenCahn) {
        for (int c = 0; c < grid.cells(); ++c)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int l = 0; l < n; ++l) s += mob.m(k, l) * f(c, l);
                out(c, k) = s;
            }
        return out;
    }
    // compact 3/5-point stencil with zero normal flux
    const double ax = 1.0 / (grid.hx * grid.hx);
    const double ay = grid.dim == 2 ? 1.0 / (grid.hy * grid.hy) : 0.0;
    std::vector<double> diff(n);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int c = grid.id(i, j);
            std::fill(diff.begin(), diff.end(), 0.0);
            if (i > 0)
                for (int k = 0; k < n; ++k) diff[k] += ax * (f(c, k) - f(grid.id(i - 1, j), k));
            if (i < grid.nx - 1)
                for (int k = 0; k < n; ++k) diff[k] += ax * (f(c, k) - f(grid.id(i + 1, j), k));
            if (grid.dim == 2 && j > 0)
                for (int k = 0; k < n; ++k) diff[k] += ay * (f(c, k) - f(grid.id(i, j - 1), k));
            if (grid.dim == 2 && j < grid.ny - 1)
                for (int k = 0; k < n; ++k) diff[k] += ay * (f(c, k) - f(grid.id(i, j + 1), k));
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int l = 0; l < n; ++l) s += mob.m(k, l) * diff[l];
                out(c, k) = s;
            }
        }
    }
    return out;
}

Field solve_s_inverse(const Field& f, Mode mode, const Grid& grid, const Mobility& mob,
                      double tol, int max_iter) {
    require_shape(f, grid, mob.ncomp(), "solve_s_inverse");
    const int n = mob.ncomp();
    if (mode == Mode::AllenCahn) {
        Field out(grid, n);
        for (int c = 0; c < grid.cells(); ++c)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int l = 0; l < n; ++l) s += mob.pinv(k, l) * f(c, l);
                out(c, k) = s;
            }
        return out;
    }

    double fmax = max_abs(f);
    for (int k = 0; k < n; ++k) {
        const double m = mean_value(f, grid, k);
        if (std::abs(m) > 1e-8 * std::max(fmax, 1.0))
            throw std::invalid_argument("solve_s_inverse: Cahn-Hilliard input must have zero mean per component");
    }
    if (fmax == 0.0) return Field(grid, n);

    if (max_iter <= 0) max_iter = 40 * grid.cells() + 200;
    const DenseMat proj = projection_matrix(n);

    auto project = [&](Field& v) {
        project_tsigma(v, proj);
        remove_component_means(v, grid);
    };

    Field x(grid, n);
    Field r = f;
    project(r);
    Field p = r;
    double rr = inner_l2(r, r, grid);
    const double stop = tol * std::sqrt(inner_l2(f, f, grid));

    for (int it = 0; it < max_iter; ++it) {
        if (std::sqrt(rr) <= stop) break;
        Field sp = apply_s(p, mode, grid, mob);
        const double psp = inner_l2(p, sp, grid);
        if (psp <= 0.0) throw std::runtime_error("solve_s_inverse: operator lost definiteness");
        const double alpha = rr / psp;
        for (size_t idx = 0; idx < x.data.size(); ++idx) {
            x.data[idx] += alpha * p.data[idx];
            r.data[idx] -= alpha * sp.data[idx];
        }
        if ((it + 1) % 32 == 0) project(r); // shed round-off drift out of the subspace
        const double rr_new = inner_l2(r, r, grid);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (size_t idx = 0; idx < p.data.size(); ++idx) p.data[idx] = r.data[idx] + beta * p.data[idx];
        if (it + 1 == max_iter && std::sqrt(rr) > stop)
            throw std::runtime_error("solve_s_inverse: conjugate gradients did not converge");
    }
    project(x);
    return x;
}

double inner_x(const Field& v1, const Field& v2, Mode mode, const Grid& grid,
               const Mobility& mob, double tol) {
    require_shape(v1, grid, mob.ncomp(), "inner_x");
    require_shape(v2, grid, mob.ncomp(), "inner_x");
    if (mode == Mode::AllenCahn) {
        double s = 0.0;
        const int n = mob.ncomp();
        for (int c = 0; c < grid.cells(); ++c)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) s += mob.m(k, l) * v1(c, l) * v2(c, k);
        return s * grid.cell_volume();
    }
    Field w = solve_s_inverse(v2, mode, grid, mob, tol);
    return inner_l2(v1, w, grid);
}

double s_dissipation(const Field& w, Mode mode, const Grid& grid, const Mobility& mob) {
    require_shape(w, grid, mob.ncomp(), "s_dissipation");
    const int n = mob.ncomp();
    if (mode == Mode::AllenCahn) {
        double s = 0.0;
        for (int c = 0; c < grid.cells(); ++c)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) s += mob.m(k, l) * w(c, l) * w(c, k);
        return s * grid.cell_volume();
    }
    // int M grad w : grad w over compact faces
    double s = 0.0;
    auto face_term = [&](int ca, int cb, double h) {
        for (int k = 0; k < n; ++k) {
            const double dk = (w(cb, k) - w(ca, k)) / h;
            for (int l = 0; l < n; ++l) {
                const double dl = (w(cb, l) - w(ca, l)) / h;
                s += mob.m(k, l) * dk * dl;
            }
        }
    };
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i + 1 < grid.nx; ++i) face_term(grid.id(i, j), grid.id(i + 1, j), grid.hx);
    if (grid.dim == 2)
        for (int j = 0; j + 1 < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) face_term(grid.id(i, j), grid.id(i, j + 1), grid.hy);
    return s * grid.cell_volume();
}

} // namespace phasedam
