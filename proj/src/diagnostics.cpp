#include "plevy/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "plevy/assembly.hpp"
#include "plevy/noise.hpp"
#include "plevy/parallel.hpp"

namespace plevy {

// ---------------------------------------------------------------------------
// Energy ledger
// ---------------------------------------------------------------------------

EnergyReport energy_ledger(const SpatialMesh& mesh, const ModelSpec& model,
                           const TrajectoryRecord& traj) {
    const int steps = traj.cfg.steps;
    if (static_cast<int>(traj.states.size()) != steps + 1 ||
        static_cast<int>(traj.wiener.size()) != steps ||
        static_cast<int>(traj.jumps.size()) != steps ||
        static_cast<int>(traj.stats.size()) != steps || traj.control.steps() != steps)
        throw DataError("energy_ledger: incomplete trajectory record");

    const double kappa = traj.cfg.kappa();
    EnergyReport report;
    report.rows.reserve(static_cast<std::size_t>(steps));
    report.max_norm_sq = dot_mass(mesh, traj.states[0], traj.states[0]);

    for (int k = 0; k < steps; ++k) {
        const NodalField& prev = traj.states[k];
        const NodalField& next = traj.states[k + 1];

        EnergyLedgerRow row;
        row.step = k;
        const double prev_sq = dot_mass(mesh, prev, prev);
        const double next_sq = dot_mass(mesh, next, next);
        row.kinetic_prev = 0.5 * prev_sq;
        row.kinetic_next = 0.5 * next_sq;

        NodalField diff = next;
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= prev[i];
        row.increment_sq = dot_mass(mesh, diff, diff);

        row.dissipation = kappa * dot(assemble_weak_flux(mesh, model, next), next.v);
        row.control_work = kappa * dot_mass(mesh, traj.control.values[k], next);

        NodalField noise = wiener_increment_field(mesh, model.diffusion, prev, traj.wiener[k]);
        const NodalField jump = compensated_jump_increment(mesh, model, prev, traj.jumps[k], kappa);
        for (std::size_t i = 0; i < noise.size(); ++i) noise[i] += jump[i];
        row.noise_work = dot_mass(mesh, noise, next);

        row.residual = 0.5 * (next_sq - prev_sq + row.increment_sq) + row.dissipation -
                       row.control_work - row.noise_work;
        row.rhs_norm = traj.stats[k].rhs_norm;

        report.max_norm_sq = std::max(report.max_norm_sq, next_sq);
        report.total_dissipation += row.dissipation;
        report.total_increment_sq += row.increment_sq;
        report.total_noise_work += row.noise_work;
        report.total_control_work += row.control_work;
        report.rows.push_back(row);
    }
    return report;
}

// ---------------------------------------------------------------------------
// A-priori certificate
// ---------------------------------------------------------------------------

namespace {

struct PathQuantities {
    double max_norm_sq = 0.0;
    double sum_increment_sq = 0.0;
    double dissipation_budget = 0.0;
    double interpolation_gap = 0.0;
    std::vector<double> norm_sq_per_step;  // ||u_k||^2, k = 1..N
};

PathQuantities path_quantities(const SpatialMesh& mesh, const ModelSpec& model,
                               const TrajectoryRecord& traj) {
    PathQuantities q;
    const double kappa = traj.cfg.kappa();
    for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
        const NodalField& prev = traj.states[k];
        const NodalField& next = traj.states[k + 1];
        NodalField diff = next;
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= prev[i];
        q.sum_increment_sq += dot_mass(mesh, diff, diff);
        q.dissipation_budget += kappa * grad_lp_norm(mesh, next, model.flux.p);
        const double norm_sq = dot_mass(mesh, next, next);
        q.norm_sq_per_step.push_back(norm_sq);
        q.max_norm_sq = std::max(q.max_norm_sq, norm_sq);
    }
    q.interpolation_gap = (kappa / 3.0) * q.sum_increment_sq;
    return q;
}

AprioriEstimate summarize(const std::vector<PathQuantities>& paths, double kappa) {
    AprioriEstimate est;
    est.kappa = kappa;
    est.paths = static_cast<int>(paths.size());

    std::vector<double> sup_moment, increments, dissipation, gaps;
    for (const auto& q : paths) {
        sup_moment.push_back(q.max_norm_sq);
        increments.push_back(q.sum_increment_sq);
        dissipation.push_back(q.dissipation_budget);
        gaps.push_back(q.interpolation_gap);
    }
    est.sup_moment = mean_se(sup_moment);
    est.sum_increment_sq = mean_se(increments);
    est.dissipation_budget = mean_se(dissipation);
    est.interpolation_gap = mean_se(gaps);

    // sup_k over the ensemble mean of ||u_k||^2, reporting the se at the
    // maximizing step.
    const std::size_t steps = paths.front().norm_sq_per_step.size();
    MeanSe best;
    for (std::size_t k = 0; k < steps; ++k) {
        std::vector<double> at_k;
        at_k.reserve(paths.size());
        for (const auto& q : paths) at_k.push_back(q.norm_sq_per_step[k]);
        const MeanSe ms = mean_se(at_k);
        if (ms.mean >= best.mean) best = ms;
    }
    est.max_norm_sq = best;
    return est;
}

}  // namespace

AprioriEstimate apriori_certificate(const SpatialMesh& mesh, const ModelSpec& model,
                                    const std::vector<TrajectoryRecord>& ensemble) {
    if (ensemble.size() < 2) throw DataError("apriori_certificate: need at least two paths");
    const double kappa = ensemble.front().cfg.kappa();
    std::vector<PathQuantities> quantities;
    quantities.reserve(ensemble.size());
    for (const auto& traj : ensemble) {
        if (traj.cfg.steps != ensemble.front().cfg.steps ||
            traj.cfg.horizon != ensemble.front().cfg.horizon)
            throw DataError("apriori_certificate: mixed configurations in the ensemble");
        quantities.push_back(path_quantities(mesh, model, traj));
    }
    return summarize(quantities, kappa);
}

RefinementReport refinement_study(const SpatialMesh& mesh, const ModelSpec& model,
                                  const SchemeConfig& cfg_base, const ControlSignal& control,
                                  int levels, int paths, RngPolicy rng, int threads) {
    if (levels < 2) throw ConfigError("refinement_study: need at least two levels");
    if (paths < 2) throw ConfigError("refinement_study: need at least two paths");

    RefinementReport report;

    // Pass 1: independent Monte Carlo per level (distinct path-id blocks).
    std::vector<std::vector<PathQuantities>> data(static_cast<std::size_t>(levels),
                                                  std::vector<PathQuantities>(paths));
    parallel_for(paths, threads, [&](int path) {
        for (int l = 0; l < levels; ++l) {
            SchemeConfig cfg = cfg_base;
            cfg.steps = cfg_base.steps * (1 << l);
            const uint64_t path_id = static_cast<uint64_t>(path) + 1000000ull * (l + 1);
            const TrajectoryRecord traj = run_trajectory(mesh, model, cfg, control, rng, path_id);
            data[l][path] = path_quantities(mesh, model, traj);
        }
    });

    for (int l = 0; l < levels; ++l) {
        RefinementLevel level;
        level.steps = cfg_base.steps * (1 << l);
        level.kappa = cfg_base.horizon / level.steps;
        level.estimate = summarize(data[l], level.kappa);
        report.levels.push_back(level);
    }
    const auto collect = [&](auto member) {
        std::pair<std::vector<double>, std::vector<double>> out;
        for (const auto& level : report.levels) {
            const MeanSe& ms = level.estimate.*member;
            out.first.push_back(ms.mean);
            out.second.push_back(ms.se);
        }
        return out;
    };
    {
        const auto [means, ses] = collect(&AprioriEstimate::sup_moment);
        report.trend_max_norm = slope_test_independent(means, ses);
    }
    {
        const auto [means, ses] = collect(&AprioriEstimate::sum_increment_sq);
        report.trend_increment = slope_test_independent(means, ses);
    }
    {
        const auto [means, ses] = collect(&AprioriEstimate::dissipation_budget);
        report.trend_dissipation = slope_test_independent(means, ses);
    }

    // Pass 2: coupled noise for the interpolation-gap ratios.
    std::vector<std::vector<double>> gaps(static_cast<std::size_t>(levels),
                                          std::vector<double>(paths));
    parallel_for(paths, threads, [&](int path) {
        const auto family = sample_noise_refinement_family(rng, static_cast<uint64_t>(path), model,
                                                           cfg_base.horizon, cfg_base.steps, levels);
        for (int l = 0; l < levels; ++l) {
            SchemeConfig cfg = cfg_base;
            cfg.steps = cfg_base.steps * (1 << l);
            const TrajectoryRecord traj = run_trajectory_with_noise(
                mesh, model, cfg, control, family[l], rng, static_cast<uint64_t>(path));
            gaps[l][path] = path_quantities(mesh, model, traj).interpolation_gap;
        }
    });
    for (int l = 0; l + 1 < levels; ++l)
        report.gap_ratios.push_back(paired_ratio(gaps[l], gaps[l + 1]));
    return report;
}

// ---------------------------------------------------------------------------
// Upsilon
// ---------------------------------------------------------------------------

namespace {

// Base profile on the reference scale.
double upsilon_base(double r) {
    const double a = std::abs(r);
    if (a >= 1.0) return a - 5.0 / 16.0;
    const double r2 = r * r;
    return (15.0 * r2 - 5.0 * r2 * r2 + r2 * r2 * r2) / 16.0;
}
double upsilon_base_d1(double r) {
    if (r >= 1.0) return 1.0;
    if (r <= -1.0) return -1.0;
    return (15.0 * r - 10.0 * r * r * r + 3.0 * r * r * r * r * r) / 8.0;
}
double upsilon_base_d2(double r) {
    const double a = std::abs(r);
    if (a >= 1.0) return 0.0;
    const double t = 1.0 - r * r;
    return 15.0 * t * t / 8.0;
}

}  // namespace

UpsilonEval upsilon_eval(const UpsilonSpec& spec, double r) {
    if (!(spec.vartheta > 0.0)) throw NumericError("upsilon_eval: vartheta must be > 0");
    const double s = r / spec.vartheta;
    UpsilonEval out;
    out.value = spec.vartheta * upsilon_base(s);
    // The exact profile satisfies |r| - M1*vartheta <= value <= |r|; clamp the
    // rounded evaluation into that interval so the sandwich holds bitwise.
    const double a = std::abs(r);
    out.value = std::max(std::min(out.value, a), a - UpsilonSpec::M1 * spec.vartheta);
    out.d1 = upsilon_base_d1(s);
    out.d2 = upsilon_base_d2(s) / spec.vartheta;
    return out;
}

double upsilon_integral(const SpatialMesh& mesh, const NodalField& f, double vartheta) {
    if (!(vartheta > 0.0)) throw NumericError("upsilon_integral: vartheta must be > 0");
    const UpsilonSpec spec{vartheta};
    double total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double vl, vr;
        element_values(mesh, f, e, vl, vr);
        // Split the element where f_h = +-vartheta; each resulting piece is a
        // polynomial in x of degree <= 6, integrated exactly by GaussRule5.
        double cuts[4] = {0.0, 1.0, 1.0, 1.0};
        int n_cuts = 2;
        if (vr != vl) {
            for (double level : {-vartheta, vartheta}) {
                const double xi = (level - vl) / (vr - vl);
                if (xi > 0.0 && xi < 1.0) cuts[n_cuts++] = xi;
            }
        }
        std::sort(cuts, cuts + n_cuts);
        for (int c = 0; c + 1 < n_cuts; ++c) {
            const double lo = cuts[c], hi = cuts[c + 1];
            if (hi <= lo) continue;
            double acc = 0.0;
            for (int g = 0; g < GaussRule5::points; ++g) {
                const double xi = lo + (hi - lo) * GaussRule5::xi[g];
                const double value = vl + (vr - vl) * xi;
                acc += GaussRule5::w[g] * upsilon_eval(spec, value).value;
            }
            total += mesh.h * (hi - lo) * acc;
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// L1 contraction probe
// ---------------------------------------------------------------------------

ContractionCurves l1_contraction_probe(const SpatialMesh& mesh, const ModelSpec& model,
                                       const SchemeConfig& cfg, const NodalField& u0_a,
                                       const NodalField& u0_b, RngPolicy rng, int paths,
                                       std::vector<double> varthetas, int threads) {
    if (paths < 1) throw ConfigError("l1_contraction_probe: need at least one path");
    ContractionCurves out;
    out.paths = paths;
    out.varthetas = std::move(varthetas);
    const int steps = cfg.steps;
    out.times.resize(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) out.times[k] = k * cfg.kappa();

    std::vector<std::vector<double>> l1(paths, std::vector<double>(steps + 1, 0.0));
    std::vector<std::vector<std::vector<double>>> smoothed(
        paths, std::vector<std::vector<double>>(out.varthetas.size(),
                                                std::vector<double>(steps + 1, 0.0)));

    parallel_for(paths, threads, [&](int path) {
        ModelSpec model_a = model;
        model_a.u0 = u0_a;
        ModelSpec model_b = model;
        model_b.u0 = u0_b;
        // Common noise: both runs use the same (seed, path) streams.
        const auto traj_a =
            run_trajectory(mesh, model_a, cfg, ControlSignal::zero(), rng, static_cast<uint64_t>(path));
        const auto traj_b =
            run_trajectory(mesh, model_b, cfg, ControlSignal::zero(), rng, static_cast<uint64_t>(path));
        for (int k = 0; k <= steps; ++k) {
            NodalField diff = traj_a.states[k];
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= traj_b.states[k][i];
            l1[path][k] = l1_norm_exact(mesh, diff);
            for (std::size_t t = 0; t < out.varthetas.size(); ++t)
                smoothed[path][t][k] = upsilon_integral(mesh, diff, out.varthetas[t]);
        }
    });

    out.l1_mean.assign(steps + 1, 0.0);
    out.smoothed_mean.assign(out.varthetas.size(), std::vector<double>(steps + 1, 0.0));
    for (int p = 0; p < paths; ++p) {
        for (int k = 0; k <= steps; ++k) {
            out.l1_mean[k] += l1[p][k] / paths;
            for (std::size_t t = 0; t < out.varthetas.size(); ++t)
                out.smoothed_mean[t][k] += smoothed[p][t][k] / paths;
        }
    }
    out.identically_zero = true;
    for (const auto& per_path : l1)
        for (double v : per_path)
            if (v != 0.0) out.identically_zero = false;
    out.growth_trend = paired_slope_test(l1);
    return out;
}

// ---------------------------------------------------------------------------
// Dissipativity margin
// ---------------------------------------------------------------------------

DissipativityBreakdown dissipativity_breakdown(const SpatialMesh& mesh, const ModelSpec& model,
                                               const NodalField& u, double delta) {
    DissipativityBreakdown out;
    out.chg = chg_constant(mesh, model);
    out.gradient_term = 2.0 * model.flux.C1() * grad_lp_norm(mesh, u, model.flux.p);
    out.wiener_intensity = model.diffusion.hs_norm_sq(mesh, u);
    out.jump_intensity = jump_l2_intensity(mesh, model, u);
    out.state_term = delta * std::pow(l2_norm(mesh, u), model.flux.p);
    out.margin = out.chg + out.gradient_term - out.wiener_intensity - out.jump_intensity -
                 out.state_term;
    return out;
}

double dissipativity_margin(const SpatialMesh& mesh, const ModelSpec& model, const NodalField& u,
                            double delta) {
    return dissipativity_breakdown(mesh, model, u, delta).margin;
}

double delta_suggestion(const SpatialMesh& mesh, const ModelSpec& model) {
    const double p = model.flux.p;
    const double C1 = model.flux.C1();
    if (p == 2.0) {
        const double lambda1 =
            smallest_generalized_eigenvalue(stiffness_matrix(mesh), mass_matrix(mesh));
        return 2.0 * C1 * lambda1;
    }
    const double d = mesh.measure();
    const double poincare = d / 2.0;                   // ||u||_Lp <= (|D|/2) ||u'||_Lp
    const double sobolev = std::pow(d, 0.5 - 1.0 / p); // ||u||_L2 <= |D|^(1/2-1/p) ||u||_Lp
    return 2.0 * C1 / (std::pow(sobolev, p) * std::pow(poincare, p));
}

}  // namespace plevy
