#pragma once
// Sampling of the per-step noise: Wiener mode increments Normal(0, kappa)
// and Poisson jump events on (0, kappa] x E from the truncated Levy measure,
// plus the compensated jump increment used by the scheme. The jump kernel is
// evaluated at the frozen left-endpoint state for every event of the step,
// matching the explicit treatment of the noise in the discretization.

#include <cstdint>
#include <vector>

#include "plevy/mesh.hpp"
#include "plevy/model.hpp"
#include "plevy/rng.hpp"

namespace plevy {

struct JumpEvent {
    double offset;  // in (0, kappa]
    double mark;    // z in R^*
};

struct NoiseIncrement {
    std::vector<double> wiener;  // one Normal(0,kappa) increment per mode
    std::vector<JumpEvent> jumps;
    double kappa = 0.0;
};

std::vector<double> sample_wiener_increments(const RngPolicy& rng, uint64_t path, uint64_t step,
                                             int n_modes, double kappa);

std::vector<JumpEvent> sample_jump_events(const RngPolicy& rng, uint64_t path, uint64_t step,
                                          const LevyMeasureSpec& spec, double kappa);

NoiseIncrement sample_noise(const RngPolicy& rng, uint64_t path, uint64_t step,
                            const ModelSpec& model, double kappa);

// Nodal field of the Wiener part: sum_n h_n(u(x_i)) * dbeta_n.
NodalField wiener_increment_field(const SpatialMesh& mesh, const WienerDiffusionModel& diffusion,
                                  const NodalField& u, const std::vector<double>& wiener);

// sum_events eta(., u; z_e) - kappa * compensator_field(u).
NodalField compensated_jump_increment(const SpatialMesh& mesh, const ModelSpec& model,
                                      const NodalField& u, const std::vector<JumpEvent>& events,
                                      double kappa);

// Noise for a nested family of partitions of [0,T]: level l has
// base_steps * 2^l steps. Sampled once at the finest level and aggregated
// upward, so every level sees the restriction of the same Wiener and Poisson
// processes. Used for common-random-number refinement studies.
std::vector<std::vector<NoiseIncrement>> sample_noise_refinement_family(
    const RngPolicy& rng, uint64_t path, const ModelSpec& model, double horizon, int base_steps,
    int levels);

}  // namespace plevy
