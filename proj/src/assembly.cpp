#include "plevy/assembly.hpp"

namespace plevy {

namespace {

// Element integral of A + F and its derivatives with respect to the element
// endpoint values. The slope is (vr - vl)/h; the state at a Gauss point is
// vl + (vr - vl) xi.
struct ElementIntegral {
    double value = 0.0;
    double d_left = 0.0;
    double d_right = 0.0;
};

ElementIntegral integrate_element(const SpatialMesh& mesh, const DriftCoefficients& drift,
                                  double x_left, double vl, double vr, bool with_jacobian) {
    ElementIntegral out;
    const double h = mesh.h;
    const double slope = (vr - vl) / h;
    for (int g = 0; g < GaussRule3::points; ++g) {
        const double xi = GaussRule3::xi[g];
        const double w = GaussRule3::w[g] * h;
        const double x_hat = mesh.unit_coord(x_left + xi * h);
        const double lambda = vl + (vr - vl) * xi;
        double integrand = drift.flux.eval(x_hat, lambda, slope);
        if (drift.convection) integrand += drift.convection->eval(lambda);
        out.value += w * integrand;
        if (with_jacobian) {
            const double da_dzeta = drift.flux.dzeta(x_hat, lambda, slope);
            double da_dlambda = drift.flux.dlambda(x_hat, lambda, slope);
            if (drift.convection) da_dlambda += drift.convection->deriv(lambda);
            out.d_left += w * (da_dlambda * (1.0 - xi) - da_dzeta / h);
            out.d_right += w * (da_dlambda * xi + da_dzeta / h);
        }
    }
    return out;
}

}  // namespace

std::vector<double> assemble_weak_flux(const SpatialMesh& mesh, const DriftCoefficients& drift,
                                       const NodalField& f) {
    if (f.size() != static_cast<std::size_t>(mesh.node_count))
        throw DataError("assemble_weak_flux: field size does not match mesh");
    if (!f.finite()) throw NumericError("assemble_weak_flux: non-finite field values");
    const int n = mesh.node_count;
    std::vector<double> out(n, 0.0);
    for (int e = 0; e < mesh.element_count(); ++e) {
        double vl, vr;
        element_values(mesh, f, e, vl, vr);
        const double x_left = mesh.a + e * mesh.h;
        const auto integral = integrate_element(mesh, drift, x_left, vl, vr, false);
        // phi_i' = +1/h on the element left of node i, -1/h on the right one.
        if (e <= n - 1) out[e] += integral.value / mesh.h;
        if (e >= 1) out[e - 1] -= integral.value / mesh.h;
    }
    return out;
}

Tridiag assemble_weak_flux_jacobian(const SpatialMesh& mesh, const DriftCoefficients& drift,
                                    const NodalField& f) {
    const int n = mesh.node_count;
    Tridiag jac(static_cast<std::size_t>(n));
    for (int e = 0; e < mesh.element_count(); ++e) {
        double vl, vr;
        element_values(mesh, f, e, vl, vr);
        const double x_left = mesh.a + e * mesh.h;
        const auto integral = integrate_element(mesh, drift, x_left, vl, vr, true);
        const int left = e - 1;  // node index of the element's left endpoint
        const int right = e;     // node index of the right endpoint
        const double inv_h = 1.0 / mesh.h;
        if (right <= n - 1) {
            jac.diag[right] += inv_h * integral.d_right;
            if (left >= 0) jac.lower[right - 1] += inv_h * integral.d_left;
        }
        if (left >= 0) {
            jac.diag[left] -= inv_h * integral.d_left;
            if (right <= n - 1) jac.upper[left] -= inv_h * integral.d_right;
        }
    }
    return jac;
}

std::vector<double> assemble_convection_only(const SpatialMesh& mesh, const ConvectionModel& conv,
                                             const NodalField& f) {
    FluxModel no_flux = pure_p_laplacian(2.0, 0.0);
    no_flux.c_base = 0.0;
    return assemble_weak_flux(mesh, DriftCoefficients{no_flux, &conv}, f);
}

}  // namespace plevy
