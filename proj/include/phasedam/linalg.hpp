// Small dense linear algebra for component-space matrices (N <= ~8) and
// the reference solvers used by tests and the oracle checks.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace phasedam {

// Row-major dense matrix, sized at runtime. Only used for small systems.
struct DenseMat {
    int n = 0;
    std::vector<double> a;

    DenseMat() = default;
    explicit DenseMat(int n_) : n(n_), a(static_cast<size_t>(n_) * n_, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }

    static DenseMat identity(int n) {
        DenseMat m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline std::vector<double> mat_vec(const DenseMat& m, const std::vector<double>& x) {
    std::vector<double> y(m.n, 0.0);
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

// Cyclic Jacobi eigendecomposition for symmetric matrices.
// Returns eigenvalues in `eval` and orthonormal eigenvectors as columns of `evec`.
inline void sym_eigen(const DenseMat& m, std::vector<double>& eval, DenseMat& evec,
                      int max_sweeps = 64) {
    const int n = m.n;
    DenseMat a = m;
    evec = DenseMat::identity(n);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-30) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = evec(k, p), vkq = evec(k, q);
                    evec(k, p) = c * vkp - s * vkq;
                    evec(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eval.resize(n);
    for (int i = 0; i < n; ++i) eval[i] = a(i, i);
}

// Moore-Penrose pseudo-inverse of a symmetric matrix, dropping eigenvalues
// with |lambda| <= tol * max|lambda|.
inline DenseMat sym_pinv(const DenseMat& m, double tol = 1e-12) {
    std::vector<double> eval;
    DenseMat evec;
    sym_eigen(m, eval, evec);
    double lmax = 0.0;
    for (double l : eval) lmax = std::max(lmax, std::abs(l));
    DenseMat out(m.n);
    for (int k = 0; k < m.n; ++k) {
        if (std::abs(eval[k]) <= tol * std::max(lmax, 1e-300)) continue;
        const double inv = 1.0 / eval[k];
        for (int i = 0; i < m.n; ++i)
            for (int j = 0; j < m.n; ++j) out(i, j) += inv * evec(i, k) * evec(j, k);
    }
    return out;
}

// Gaussian elimination with partial pivoting; solves in place, returns x.
inline std::vector<double> lu_solve(DenseMat a, std::vector<double> b) {
    const int n = a.n;
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("lu_solve: size mismatch");
    std::vector<int> piv(n);
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int col = 0; col < n; ++col) {
        int best = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(best, col))) best = r;
        if (std::abs(a(best, col)) < 1e-300) throw std::runtime_error("lu_solve: singular matrix");
        if (best != col) {
            for (int j = 0; j < n; ++j) std::swap(a(col, j), a(best, j));
            std::swap(b[col], b[best]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

} // namespace phasedam
