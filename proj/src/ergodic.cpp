#include "plevy/ergodic.hpp"

#include <algorithm>
#include <cmath>

#include "plevy/parallel.hpp"

namespace plevy {

TimeAverageResult time_average_measure(const SpatialMesh& mesh, const ModelSpec& model,
                                       const SchemeConfig& cfg_long, RngPolicy rng, uint64_t path,
                                       const TimeAverageOptions& options) {
    if (options.stride < 1) throw ConfigError("time_average_measure: stride must be >= 1");
    if (!(options.burn_in_time < cfg_long.horizon))
        throw ConfigError("time_average_measure: burn-in must be shorter than the horizon");

    const double kappa = cfg_long.kappa();
    const int burn_in_steps = static_cast<int>(std::llround(options.burn_in_time / kappa));

    TimeAverageResult result;
    result.measure.burn_in_steps = burn_in_steps;
    result.measure.stride = options.stride;
    result.measure.kappa = kappa;
    result.measure.seed = rng.master_seed;
    result.measure.path = path;
    result.margin_tracked = options.margin_delta >= 0.0;
    result.min_margin = std::numeric_limits<double>::infinity();

    const PiecewiseConstantControl no_control =
        project_control(mesh, ControlSignal::zero(), cfg_long.steps, cfg_long.horizon);
    PathSimulator sim(mesh, model, cfg_long, no_control, rng, path);

    const int expected = (cfg_long.steps - burn_in_steps) / options.stride;
    result.measure.snapshots.reserve(static_cast<std::size_t>(std::max(0, expected)));
    try {
        for (int k = 0; k < cfg_long.steps; ++k) {
            sim.advance();
            const int since_burn = (k + 1) - burn_in_steps;
            if (since_burn > 0 && since_burn % options.stride == 0) {
                result.measure.snapshots.push_back(sim.state());
                result.measure.times.push_back(sim.time());
                if (result.margin_tracked)
                    result.min_margin = std::min(
                        result.min_margin,
                        dissipativity_margin(mesh, model, sim.state(), options.margin_delta));
            }
        }
    } catch (const SolverError& err) {
        result.measure.partial = true;
        result.measure.failed_step = err.step;
    }
    if (!result.margin_tracked) result.min_margin = 0.0;
    return result;
}

double TestFunctional::eval(const SpatialMesh& mesh, const NodalField& u) const {
    if (kind == Kind::bounded_exponential) {
        const double norm_sq = dot_mass(mesh, u, u);
        return std::exp(-c * norm_sq);
    }
    if (weight.size() != u.size()) throw DataError("TestFunctional: weight field size mismatch");
    return std::tanh(dot_mass(mesh, u, weight));
}

FunctionalAverages test_function_average(const SpatialMesh& mesh, const EmpiricalMeasure& measure,
                                         const TestFunctional& phi) {
    const std::size_t n = measure.snapshots.size();
    if (n < 2) throw DataError("test_function_average: need at least two snapshots");
    FunctionalAverages out;
    out.running.resize(n);
    std::vector<double> values(n);
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        values[m] = phi.eval(mesh, measure.snapshots[m]);
        acc += values[m];
        out.running[m] = acc / (m + 1);
    }
    out.final_average = out.running.back();
    const std::size_t m0 = n / 2;
    for (std::size_t m = m0; m < n; ++m)
        out.cauchy_gap = std::max(out.cauchy_gap, std::abs(out.running[m] - out.final_average));
    out.batch_se = batch_means_se(values);
    return out;
}

std::vector<BoundednessRow> boundedness_profile(const SpatialMesh& mesh, const ModelSpec& model,
                                                const EmpiricalMeasure& measure,
                                                const std::vector<double>& radii, double delta,
                                                double horizon) {
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] < radii[i + 1]) || !(radii[i] >= 0.0))
            throw ConfigError("boundedness_profile: radii must be positive increasing");
    if (!(delta > 0.0)) throw ConfigError("boundedness_profile: delta must be > 0");
    if (measure.snapshots.empty()) throw DataError("boundedness_profile: empty measure");

    std::vector<double> norms(measure.snapshots.size());
    for (std::size_t m = 0; m < norms.size(); ++m) norms[m] = l2_norm(mesh, measure.snapshots[m]);

    const double u0_sq = dot_mass(mesh, model.u0, model.u0);
    const double numerator = chg_constant(mesh, model) + u0_sq / horizon;  // K1 = 0 for the family
    std::vector<BoundednessRow> rows;
    rows.reserve(radii.size());
    for (double radius : radii) {
        BoundednessRow row;
        row.radius = radius;
        std::vector<double> indicator(norms.size());
        std::size_t count = 0;
        for (std::size_t m = 0; m < norms.size(); ++m) {
            indicator[m] = norms[m] > radius ? 1.0 : 0.0;
            count += norms[m] > radius;
        }
        row.fraction = static_cast<double>(count) / norms.size();
        row.fraction_se = batch_means_se(indicator);
        row.analytic_bound =
            radius > 0.0 ? numerator / (std::pow(radius, model.flux.p) * delta) : 1.0;
        rows.push_back(row);
    }
    return rows;
}

WeakFellerReport weak_feller_probe(const SpatialMesh& mesh, const ModelSpec& model,
                                   const SchemeConfig& cfg, RngPolicy rng,
                                   const TestFunctional& phi, const NodalField& v,
                                   double amplitude, const std::vector<int>& frequencies,
                                   int paths, int threads) {
    if (paths < 2) throw ConfigError("weak_feller_probe: need at least two paths");
    WeakFellerReport report;
    report.frequencies = frequencies;
    report.paths = paths;

    const std::size_t n_init = frequencies.size() + 1;  // base + one per frequency
    std::vector<ModelSpec> variants;
    variants.reserve(n_init);
    {
        ModelSpec base = model;
        base.u0 = v;
        variants.push_back(std::move(base));
    }
    for (int freq : frequencies) {
        ModelSpec variant = model;
        variant.u0 = v;
        for (int i = 0; i < mesh.node_count; ++i)
            variant.u0[i] += amplitude * std::sin(freq * M_PI * mesh.unit_coord(mesh.node(i)));
        variants.push_back(std::move(variant));
    }

    // Common random numbers: initial condition j reuses path stream i.
    std::vector<std::vector<double>> values(n_init, std::vector<double>(paths, 0.0));
    parallel_for(paths, threads, [&](int path) {
        for (std::size_t j = 0; j < n_init; ++j) {
            const auto traj = run_trajectory(mesh, variants[j], cfg, ControlSignal::zero(), rng,
                                             static_cast<uint64_t>(path));
            values[j][path] = phi.eval(mesh, traj.states.back());
        }
    });

    const MeanSe base_stats = mean_se(values[0]);
    report.base_value = base_stats.mean;
    report.differences.reserve(frequencies.size());
    for (std::size_t j = 1; j < n_init; ++j) {
        // Paired differences per path keep the common-noise cancellation.
        std::vector<double> diff(paths);
        for (int p = 0; p < paths; ++p) diff[p] = values[j][p] - values[0][p];
        report.differences.push_back(std::abs(mean_se(diff).mean));
    }
    report.trend = spearman_negative_trend(report.differences);
    return report;
}

}  // namespace plevy
