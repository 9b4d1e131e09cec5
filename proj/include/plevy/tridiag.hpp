#pragma once
// Small dense tridiagonal kernels: matrix storage, matvec, and a direct
// solver with partial pivoting (dgtsv-style, one extra superdiagonal of
// fill-in). Everything the 1D P1 discretization needs.

#include <cmath>
#include <cstddef>
#include <vector>

#include "plevy/errors.hpp"

namespace plevy {

struct Tridiag {
    std::vector<double> lower;  // size n-1
    std::vector<double> diag;   // size n
    std::vector<double> upper;  // size n-1

    explicit Tridiag(std::size_t n = 0) : lower(n > 0 ? n - 1 : 0, 0.0), diag(n, 0.0), upper(n > 0 ? n - 1 : 0, 0.0) {}

    std::size_t size() const { return diag.size(); }

    std::vector<double> apply(const std::vector<double>& x) const {
        const std::size_t n = size();
        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += lower[i - 1] * x[i - 1];
            if (i + 1 < n) s += upper[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }
};

// Solve T x = b with row partial pivoting. Throws NumericError on a
// (numerically) singular matrix.
inline std::vector<double> tridiag_solve(const Tridiag& t, std::vector<double> b) {
    const std::size_t n = t.size();
    if (b.size() != n) throw NumericError("tridiag_solve: size mismatch");
    if (n == 0) return b;

    std::vector<double> dl = t.lower, d = t.diag, du = t.upper;
    std::vector<double> du2(n >= 2 ? n - 2 : 0, 0.0);  // fill-in from pivoting

    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == 0.0) throw NumericError("tridiag_solve: singular pivot");
            const double factor = dl[i] / d[i];
            d[i + 1] -= factor * du[i];
            b[i + 1] -= factor * b[i];
            if (i + 2 < n) du2[i] = 0.0;
            dl[i] = 0.0;
        } else {
            // Swap rows i and i+1.
            const double factor = d[i] / dl[i];
            d[i] = dl[i];
            double tmp = d[i + 1];
            d[i + 1] = du[i] - factor * tmp;
            du[i] = tmp;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -factor * du2[i];
            }
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= factor * b[i];
            dl[i] = 0.0;
        }
    }
    if (d[n - 1] == 0.0) throw NumericError("tridiag_solve: singular pivot");

    std::vector<double> x(n, 0.0);
    x[n - 1] = b[n - 1] / d[n - 1];
    if (n >= 2) x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for (std::size_t i = n >= 2 ? n - 2 : 0; i-- > 0;)
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    return x;
}

// Smallest eigenvalue of the generalized symmetric problem K x = lambda M x
// via inverse power iteration; both matrices tridiagonal, M positive
// definite. Used for the discrete Poincare constant.
inline double smallest_generalized_eigenvalue(const Tridiag& stiffness, const Tridiag& mass,
                                              int max_iters = 200, double tol = 1e-13) {
    const std::size_t n = stiffness.size();
    if (n == 0) throw NumericError("eigenvalue: empty system");
    std::vector<double> x(n, 1.0);
    double lambda_prev = 0.0;
    for (int iter = 0; iter < max_iters; ++iter) {
        std::vector<double> mx = mass.apply(x);
        std::vector<double> y = tridiag_solve(stiffness, mx);
        const std::vector<double> my = mass.apply(y);
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm_sq += y[i] * my[i];
        const double norm = std::sqrt(norm_sq);
        if (!(norm > 0.0)) throw NumericError("eigenvalue: degenerate iterate");
        for (auto& v : y) v /= norm;
        const std::vector<double> ky = stiffness.apply(y);
        const std::vector<double> my2 = mass.apply(y);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += y[i] * ky[i];
            den += y[i] * my2[i];
        }
        const double lambda = num / den;
        x = y;
        if (iter > 3 && std::abs(lambda - lambda_prev) <= tol * std::abs(lambda)) return lambda;
        lambda_prev = lambda;
    }
    return lambda_prev;
}

}  // namespace plevy
