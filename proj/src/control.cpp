#include "plevy/control.hpp"

#include <algorithm>
#include <cmath>

namespace plevy {

double TerminalPayoff::eval(const SpatialMesh& mesh, const NodalField& u) const {
    if (kind == Kind::none) return 0.0;
    NodalField diff = u;
    if (anchor.size() == diff.size())
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= anchor[i];
    const double dist = l2_norm(mesh, diff);
    if (kind == Kind::affine) return offset + slope * dist;
    return std::min(clip, slope * dist);
}

double state_tracking_term(const SpatialMesh& mesh, const TrajectoryRecord& traj,
                           const CostSpec& spec) {
    const int steps = traj.cfg.steps;
    if (static_cast<int>(spec.target.size()) != steps + 1)
        throw DataError("cost: target profile does not match the partition");
    const double kappa = traj.cfg.kappa();
    double total = 0.0;
    for (int k = 0; k < steps; ++k) {  // left endpoint
        NodalField diff = traj.states[k];
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= spec.target[k][i];
        total += kappa * dot_mass(mesh, diff, diff);
    }
    return total;
}

double control_penalty_term(const SpatialMesh& mesh, const PiecewiseConstantControl& control) {
    return control_l2t_norm_sq(mesh, control);
}

double cost_evaluate(const SpatialMesh& mesh, const TrajectoryRecord& traj,
                     const PiecewiseConstantControl& control, const CostSpec& spec) {
    if (control.steps() != traj.cfg.steps)
        throw DataError("cost: control partition does not match the trajectory");
    return state_tracking_term(mesh, traj, spec) + control_penalty_term(mesh, control) +
           spec.payoff.eval(mesh, traj.states.back());
}

// ---------------------------------------------------------------------------
// ControlFamily
// ---------------------------------------------------------------------------

ControlFamily::ControlFamily(const SpatialMesh& mesh, std::vector<PiecewiseConstantControl> atoms)
    : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ConfigError("ControlFamily: need at least one atom");
    const int steps = atoms_.front().steps();
    for (const auto& atom : atoms_)
        if (atom.steps() != steps || atom.horizon != atoms_.front().horizon)
            throw ConfigError("ControlFamily: atoms live on different partitions");
    const int dim = dimension();
    gram_.assign(dim, std::vector<double>(dim, 0.0));
    const double kappa = atoms_.front().kappa();
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            double entry = 0.0;
            for (int k = 0; k < steps; ++k)
                entry += kappa * dot_mass(mesh, atoms_[i].values[k], atoms_[j].values[k]);
            gram_[i][j] = entry;
            gram_[j][i] = entry;
        }
}

ControlFamily ControlFamily::separable(const SpatialMesh& mesh, int steps, double horizon,
                                       int time_blocks, int space_modes) {
    if (time_blocks < 1 || space_modes < 1)
        throw ConfigError("ControlFamily: need at least one time block and one space mode");
    if (steps % time_blocks != 0)
        throw ConfigError("ControlFamily: time_blocks must divide the step count");
    std::vector<PiecewiseConstantControl> atoms;
    for (int b = 0; b < time_blocks; ++b) {
        for (int m = 1; m <= space_modes; ++m) {
            PiecewiseConstantControl atom;
            atom.horizon = horizon;
            atom.values.assign(static_cast<std::size_t>(steps),
                               NodalField(static_cast<std::size_t>(mesh.node_count)));
            const int block = steps / time_blocks;
            for (int k = b * block; k < (b + 1) * block; ++k)
                atom.values[k] = interpolate(mesh, [&](double x) {
                    return std::sin(m * M_PI * (x - mesh.a) / (mesh.b - mesh.a));
                });
            atoms.push_back(std::move(atom));
        }
    }
    return ControlFamily(mesh, std::move(atoms));
}

PiecewiseConstantControl ControlFamily::realize(const std::vector<double>& theta) const {
    if (static_cast<int>(theta.size()) != dimension())
        throw DataError("ControlFamily: theta dimension mismatch");
    PiecewiseConstantControl out;
    out.horizon = atoms_.front().horizon;
    const int steps = atoms_.front().steps();
    out.values.assign(static_cast<std::size_t>(steps),
                      NodalField(atoms_.front().values.front().size()));
    for (int j = 0; j < dimension(); ++j) {
        if (theta[j] == 0.0) continue;
        for (int k = 0; k < steps; ++k)
            for (std::size_t i = 0; i < out.values[k].size(); ++i)
                out.values[k][i] += theta[j] * atoms_[j].values[k][i];
    }
    return out;
}

double ControlFamily::penalty(const std::vector<double>& theta) const {
    double total = 0.0;
    for (int i = 0; i < dimension(); ++i)
        for (int j = 0; j < dimension(); ++j) total += theta[i] * gram_[i][j] * theta[j];
    return total;
}

double ControlFamily::gram_min_eigenvalue() const {
    // Power iteration on (c I - G) with c strictly above the spectrum gives
    // the smallest eigenvalue; plenty for the small families used here.
    const int n = dimension();
    if (n == 1) return gram_[0][0];
    double trace = 0.0;
    for (int i = 0; i < n; ++i) trace += gram_[i][i];
    const double shift = trace + 1.0;  // > lambda_max for PSD G
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = std::sin(i + 1.0);  // generic start direction
    double lambda = 0.0;
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<double> y(n, 0.0);
        for (int i = 0; i < n; ++i) {
            y[i] = shift * x[i];
            for (int j = 0; j < n; ++j) y[i] -= gram_[i][j] * x[j];
        }
        double norm = 0.0;
        for (double v : y) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (auto& v : y) v /= norm;
        double quad = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) quad += y[i] * gram_[i][j] * y[j];
        lambda = quad;
        x = std::move(y);
    }
    return lambda;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimation and optimization
// ---------------------------------------------------------------------------

CostEstimate mc_cost_estimate(const SpatialMesh& mesh, const ModelSpec& model,
                              const SchemeConfig& cfg, const ControlFamily& family,
                              const std::vector<double>& theta, const CostSpec& spec,
                              RngPolicy rng, int n_paths, int threads) {
    if (n_paths < 2) throw ConfigError("mc_cost_estimate: need at least two paths");
    const PiecewiseConstantControl control = family.realize(theta);
    const ControlSignal signal = ControlSignal::piecewise(control);

    CostEstimate est;
    est.paths = n_paths;
    est.control_term = control_penalty_term(mesh, control);

    std::vector<double> stochastic(n_paths, 0.0);
    std::vector<char> ok(n_paths, 0);
    parallel_for(n_paths, threads, [&](int path) {
        try {
            const auto traj =
                run_trajectory(mesh, model, cfg, signal, rng, static_cast<uint64_t>(path));
            stochastic[path] = state_tracking_term(mesh, traj, spec) +
                               spec.payoff.eval(mesh, traj.states.back());
            ok[path] = 1;
        } catch (const SolverError&) {
            ok[path] = 0;
        }
    });

    std::vector<double> kept;
    kept.reserve(n_paths);
    for (int p = 0; p < n_paths; ++p) {
        if (ok[p])
            kept.push_back(stochastic[p]);
        else
            ++est.failures;
    }
    if (kept.empty()) throw SolverError("mc_cost_estimate: every path failed", -1, 0.0);
    const MeanSe ms = mean_se(kept);
    est.mean = ms.mean + est.control_term;
    est.se = ms.se;
    return est;
}

OptimizationResult optimize_control(const SpatialMesh& mesh, const ModelSpec& model,
                                    const SchemeConfig& cfg, const ControlFamily& family,
                                    const CostSpec& spec, RngPolicy rng,
                                    const OptimizerConfig& opt) {
    double gram_scale = 1.0;
    for (int i = 0; i < family.dimension(); ++i) gram_scale += family.gram()[i][i];
    if (family.gram_min_eigenvalue() <= 1e-12 * gram_scale)
        throw ConfigError("optimize_control: control family is degenerate (Gram not PD)");

    OptimizationResult result;
    result.theta.assign(static_cast<std::size_t>(family.dimension()), 0.0);

    const auto evaluate = [&](const std::vector<double>& theta) {
        const CostEstimate est =
            mc_cost_estimate(mesh, model, cfg, family, theta, spec, rng, opt.mc_paths, opt.threads);
        ++result.evaluations;
        result.failures += est.failures;
        return est;
    };

    CostEstimate incumbent = evaluate(result.theta);
    result.cost = incumbent.mean;
    result.incumbents.push_back({result.evaluations, result.theta, incumbent.mean, incumbent.se});

    double step = opt.initial_step;
    while (step >= opt.min_step && result.evaluations < opt.budget) {
        bool improved = false;
        for (int j = 0; j < family.dimension() && result.evaluations < opt.budget; ++j) {
            for (double dir : {+1.0, -1.0}) {
                if (result.evaluations >= opt.budget) break;
                std::vector<double> cand = result.theta;
                cand[j] += dir * step;
                const CostEstimate est = evaluate(cand);
                if (est.mean < result.cost) {
                    result.theta = std::move(cand);
                    result.cost = est.mean;
                    result.incumbents.push_back(
                        {result.evaluations, result.theta, est.mean, est.se});
                    improved = true;
                    break;  // move on to the next coordinate
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    result.budget_exhausted = result.evaluations >= opt.budget;
    return result;
}

}  // namespace plevy
