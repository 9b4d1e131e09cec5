#pragma once
// 1D P1 finite-element space on a uniform mesh of (a,b) with homogeneous
// Dirichlet boundary. A NodalField stores interior nodal values only; the
// boundary values are identically zero.
//
// Quadrature is 3-point Gauss per element (exact through degree 5), which
// makes the q=2 norm and the p=2 flux pairing exact for P1 interpolants.

#include <cmath>
#include <cstddef>
#include <vector>

#include "plevy/errors.hpp"
#include "plevy/tridiag.hpp"

namespace plevy {

struct SpatialMesh {
    int node_count = 0;  // interior nodes M >= 2
    double a = 0.0;
    double b = 1.0;
    double h = 0.0;  // (b-a)/(M+1)

    double node(int i) const { return a + (i + 1) * h; }
    int element_count() const { return node_count + 1; }
    double measure() const { return b - a; }
    // Normalized coordinate in [0,1]; coefficient families are defined on it.
    double unit_coord(double x) const { return (x - a) / (b - a); }
};

SpatialMesh build_mesh(int node_count, double a, double b);

struct NodalField {
    std::vector<double> v;

    NodalField() = default;
    explicit NodalField(std::size_t n, double fill = 0.0) : v(n, fill) {}

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    bool finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

NodalField zero_field(const SpatialMesh& mesh);

// Interpolate an analytic profile at the interior nodes.
template <typename F>
NodalField interpolate(const SpatialMesh& mesh, F&& f) {
    NodalField out(static_cast<std::size_t>(mesh.node_count));
    for (int i = 0; i < mesh.node_count; ++i) out[i] = f(mesh.node(i));
    return out;
}

// 3-point Gauss rule on the reference element [0,1].
struct GaussRule3 {
    static constexpr int points = 3;
    static constexpr double xi[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
    static constexpr double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
};

// 5-point Gauss rule on [0,1] (degree 9), used where integrands are split
// into polynomial pieces and integrated exactly.
struct GaussRule5 {
    static constexpr int points = 5;
    static constexpr double xi[5] = {0.5 - 0.45308992296933193, 0.5 - 0.26923465505284155, 0.5,
                                     0.5 + 0.26923465505284155, 0.5 + 0.45308992296933193};
    static constexpr double w[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                                    0.23931433524968324, 0.11846344252809454};
};

// Endpoint values of element e (elements are indexed 0..M; element e spans
// [a + e*h, a + (e+1)*h]); boundary entries are zero.
inline void element_values(const SpatialMesh& mesh, const NodalField& f, int e, double& left,
                           double& right) {
    left = (e == 0) ? 0.0 : f[e - 1];
    right = (e == mesh.node_count) ? 0.0 : f[e];
}

// (integral |f_h|^q dx)^(1/q) by per-element Gauss quadrature.
double lq_norm(const SpatialMesh& mesh, const NodalField& f, double q);

// integral |f_h'|^p dx == sum_e h |slope_e|^p. Returns the p-th power,
// not its root.
double grad_lp_norm(const SpatialMesh& mesh, const NodalField& f, double p);

// Exact integral of |f_h| (elements split at the sign change).
double l1_norm_exact(const SpatialMesh& mesh, const NodalField& f);

Tridiag mass_matrix(const SpatialMesh& mesh, bool lumped = false);
Tridiag stiffness_matrix(const SpatialMesh& mesh);

// f^T M g with the consistent P1 mass matrix, accumulated elementwise.
double dot_mass(const SpatialMesh& mesh, const NodalField& f, const NodalField& g);
double l2_norm(const SpatialMesh& mesh, const NodalField& f);

std::vector<double> mass_apply(const SpatialMesh& mesh, const NodalField& f);

// Euclidean helpers on raw coefficient vectors.
double dot(const std::vector<double>& x, const std::vector<double>& y);
double norm2(const std::vector<double>& x);

}  // namespace plevy
