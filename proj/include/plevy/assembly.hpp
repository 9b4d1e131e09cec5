#pragma once
// Weak-form assembly for the divergence-form drift: the vector with entries
// integral_D ( A(x, f_h, f_h') + F(f_h) ) phi_i' dx and its tridiagonal
// Jacobian. Gradients of P1 fields are constant per element, so the p=2 unit
// coefficient case reproduces the assembled stiffness matrix exactly.

#include "plevy/mesh.hpp"
#include "plevy/model.hpp"

namespace plevy {

struct DriftCoefficients {
    const FluxModel& flux;
    const ConvectionModel* convection = nullptr;  // null means F = 0
};

std::vector<double> assemble_weak_flux(const SpatialMesh& mesh, const DriftCoefficients& drift,
                                       const NodalField& f);

Tridiag assemble_weak_flux_jacobian(const SpatialMesh& mesh, const DriftCoefficients& drift,
                                    const NodalField& f);

inline std::vector<double> assemble_weak_flux(const SpatialMesh& mesh, const ModelSpec& model,
                                              const NodalField& f) {
    return assemble_weak_flux(mesh, DriftCoefficients{model.flux, &model.convection}, f);
}

// Convection-only assembly (used by the discrete Gauss-Green check).
std::vector<double> assemble_convection_only(const SpatialMesh& mesh, const ConvectionModel& conv,
                                             const NodalField& f);

}  // namespace plevy
