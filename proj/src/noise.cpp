#include "plevy/noise.hpp"

#include <algorithm>
#include <cmath>

namespace plevy {

std::vector<double> sample_wiener_increments(const RngPolicy& rng, uint64_t path, uint64_t step,
                                             int n_modes, double kappa) {
    if (!(kappa > 0.0)) throw NumericError("sample_wiener_increments: kappa must be > 0");
    CounterStream stream(rng, path, step, RngChannel::wiener);
    std::vector<double> out(static_cast<std::size_t>(n_modes));
    const double sd = std::sqrt(kappa);
    for (auto& x : out) x = sd * stream.normal();
    return out;
}

std::vector<JumpEvent> sample_jump_events(const RngPolicy& rng, uint64_t path, uint64_t step,
                                          const LevyMeasureSpec& spec, double kappa) {
    const double mass = spec.total_mass();
    if (!std::isfinite(mass)) throw ConfigError("sample_jump_events: measure mass is not finite");
    if (mass <= 0.0) return {};
    CounterStream count_stream(rng, path, step, RngChannel::jump_count);
    const uint64_t count = count_stream.poisson(kappa * mass);
    std::vector<JumpEvent> events(count);
    if (count == 0) return events;
    CounterStream mark_stream(rng, path, step, RngChannel::jump_mark);
    CounterStream offset_stream(rng, path, step, RngChannel::jump_offset);
    for (auto& ev : events) {
        ev.mark = spec.sample_mark(mark_stream);
        ev.offset = kappa * offset_stream.uniform();
    }
    return events;
}

NoiseIncrement sample_noise(const RngPolicy& rng, uint64_t path, uint64_t step,
                            const ModelSpec& model, double kappa) {
    NoiseIncrement inc;
    inc.kappa = kappa;
    inc.wiener = sample_wiener_increments(rng, path, step, model.diffusion.n_modes, kappa);
    inc.jumps = sample_jump_events(rng, path, step, model.jumps.measure, kappa);
    return inc;
}

NodalField wiener_increment_field(const SpatialMesh& mesh, const WienerDiffusionModel& diffusion,
                                  const NodalField& u, const std::vector<double>& wiener) {
    NodalField out(static_cast<std::size_t>(mesh.node_count));
    for (int i = 0; i < mesh.node_count; ++i) {
        double acc = 0.0;
        for (std::size_t n = 0; n < wiener.size(); ++n)
            acc += diffusion.mode_value(static_cast<int>(n) + 1, u[i]) * wiener[n];
        out[i] = acc;
    }
    return out;
}

NodalField compensated_jump_increment(const SpatialMesh& mesh, const ModelSpec& model,
                                      const NodalField& u, const std::vector<JumpEvent>& events,
                                      double kappa) {
    NodalField out = compensator_field(mesh, model, u);
    for (auto& x : out.v) x = -kappa * x;
    for (const auto& ev : events) {
        for (int i = 0; i < mesh.node_count; ++i) {
            const double x_hat = mesh.unit_coord(mesh.node(i));
            out[i] += model.jumps.eta(x_hat, u[i], ev.mark);
        }
    }
    if (!out.finite()) throw NumericError("compensated_jump_increment: non-finite result");
    return out;
}

std::vector<std::vector<NoiseIncrement>> sample_noise_refinement_family(
    const RngPolicy& rng, uint64_t path, const ModelSpec& model, double horizon, int base_steps,
    int levels) {
    if (levels < 1) throw ConfigError("refinement family: need at least one level");
    const int fine_factor = 1 << (levels - 1);
    const int fine_steps = base_steps * fine_factor;
    const double fine_kappa = horizon / fine_steps;

    std::vector<NoiseIncrement> fine(static_cast<std::size_t>(fine_steps));
    for (int k = 0; k < fine_steps; ++k) {
        fine[k].kappa = fine_kappa;
        fine[k].wiener = sample_wiener_increments(rng, path, static_cast<uint64_t>(k),
                                                  model.diffusion.n_modes, fine_kappa);
        fine[k].jumps =
            sample_jump_events(rng, path, static_cast<uint64_t>(k), model.jumps.measure, fine_kappa);
    }

    std::vector<std::vector<NoiseIncrement>> family(static_cast<std::size_t>(levels));
    family[levels - 1] = std::move(fine);
    for (int l = levels - 2; l >= 0; --l) {
        const auto& child = family[l + 1];
        const int steps = base_steps * (1 << l);
        std::vector<NoiseIncrement> coarse(static_cast<std::size_t>(steps));
        const double kappa = horizon / steps;
        for (int k = 0; k < steps; ++k) {
            NoiseIncrement& inc = coarse[k];
            inc.kappa = kappa;
            const auto& first = child[2 * k];
            const auto& second = child[2 * k + 1];
            inc.wiener.resize(first.wiener.size());
            for (std::size_t n = 0; n < inc.wiener.size(); ++n)
                inc.wiener[n] = first.wiener[n] + second.wiener[n];
            inc.jumps = first.jumps;
            for (const auto& ev : second.jumps)
                inc.jumps.push_back({ev.offset + first.kappa, ev.mark});
        }
        family[l] = std::move(coarse);
    }
    return family;
}

}  // namespace plevy
