#include "plevy/mesh.hpp"

#include <algorithm>

namespace plevy {

SpatialMesh build_mesh(int node_count, double a, double b) {
    if (node_count < 2) throw ConfigError("build_mesh: node_count must be >= 2");
    if (!(a < b)) throw ConfigError("build_mesh: endpoints must satisfy a < b");
    if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("build_mesh: endpoints must be finite");
    SpatialMesh mesh;
    mesh.node_count = node_count;
    mesh.a = a;
    mesh.b = b;
    mesh.h = (b - a) / (node_count + 1);
    return mesh;
}

NodalField zero_field(const SpatialMesh& mesh) {
    return NodalField(static_cast<std::size_t>(mesh.node_count));
}

double lq_norm(const SpatialMesh& mesh, const NodalField& f, double q) {
    if (!(q >= 1.0)) throw NumericError("lq_norm: q must be >= 1");
    if (f.size() != static_cast<std::size_t>(mesh.node_count))
        throw DataError("lq_norm: field size does not match mesh");
    double total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double vl, vr;
        element_values(mesh, f, e, vl, vr);
        double acc = 0.0;
        for (int g = 0; g < GaussRule3::points; ++g) {
            const double value = vl + (vr - vl) * GaussRule3::xi[g];
            acc += GaussRule3::w[g] * std::pow(std::abs(value), q);
        }
        total += mesh.h * acc;
    }
    return std::pow(total, 1.0 / q);
}

double grad_lp_norm(const SpatialMesh& mesh, const NodalField& f, double p) {
    if (!(p > 1.0)) throw NumericError("grad_lp_norm: p must be > 1");
    if (f.size() != static_cast<std::size_t>(mesh.node_count))
        throw DataError("grad_lp_norm: field size does not match mesh");
    double total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double vl, vr;
        element_values(mesh, f, e, vl, vr);
        const double slope = (vr - vl) / mesh.h;
        total += mesh.h * std::pow(std::abs(slope), p);
    }
    return total;
}

double l1_norm_exact(const SpatialMesh& mesh, const NodalField& f) {
    double total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double vl, vr;
        element_values(mesh, f, e, vl, vr);
        if (vl * vr >= 0.0) {
            total += mesh.h * 0.5 * (std::abs(vl) + std::abs(vr));
        } else {
            // Sign change inside the element: two triangles.
            total += mesh.h * 0.5 * (vl * vl + vr * vr) / (std::abs(vl) + std::abs(vr));
        }
    }
    return total;
}

Tridiag mass_matrix(const SpatialMesh& mesh, bool lumped) {
    const int n = mesh.node_count;
    Tridiag m(static_cast<std::size_t>(n));
    if (lumped) {
        for (int i = 0; i < n; ++i) m.diag[i] = mesh.h;
        return m;
    }
    for (int i = 0; i < n; ++i) m.diag[i] = 4.0 * mesh.h / 6.0;
    for (int i = 0; i + 1 < n; ++i) {
        m.lower[i] = mesh.h / 6.0;
        m.upper[i] = mesh.h / 6.0;
    }
    return m;
}

Tridiag stiffness_matrix(const SpatialMesh& mesh) {
    const int n = mesh.node_count;
    Tridiag k(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) k.diag[i] = 2.0 / mesh.h;
    for (int i = 0; i + 1 < n; ++i) {
        k.lower[i] = -1.0 / mesh.h;
        k.upper[i] = -1.0 / mesh.h;
    }
    return k;
}

double dot_mass(const SpatialMesh& mesh, const NodalField& f, const NodalField& g) {
    if (f.size() != g.size() || f.size() != static_cast<std::size_t>(mesh.node_count))
        throw DataError("dot_mass: field sizes do not match mesh");
    double total = 0.0;
    const double w = mesh.h / 6.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double fl, fr, gl, gr;
        element_values(mesh, f, e, fl, fr);
        element_values(mesh, g, e, gl, gr);
        total += w * (2.0 * fl * gl + fl * gr + fr * gl + 2.0 * fr * gr);
    }
    return total;
}

double l2_norm(const SpatialMesh& mesh, const NodalField& f) {
    return std::sqrt(std::max(0.0, dot_mass(mesh, f, f)));
}

std::vector<double> mass_apply(const SpatialMesh& mesh, const NodalField& f) {
    return mass_matrix(mesh).apply(f.v);
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(const std::vector<double>& x) {
    return std::sqrt(dot(x, x));
}

}  // namespace plevy
