#include "plevy/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace plevy {

void SchemeConfig::validate(const ModelSpec& model) const {
    if (steps < 1) throw ConfigError("scheme: steps must be >= 1");
    if (!(horizon > 0.0)) throw ConfigError("scheme: horizon must be > 0");
    if (kappa() > 1.0) throw ConfigError("scheme: kappa = T/N must be <= 1");
    if (!(tol_nl > 0.0)) throw ConfigError("scheme: tol_nl must be > 0");
    if (model.flux.kind == FluxModel::Kind::power_law) {
        if (oracle_mode) {
            if (model.flux.p < 2.0) throw ConfigError("scheme: p must be >= 2 in oracle mode");
        } else if (!(model.flux.p > 2.0)) {
            throw ConfigError("scheme: p must be > 2 (set oracle_mode for p = 2)");
        }
    }
}

// ---------------------------------------------------------------------------
// Control projection
// ---------------------------------------------------------------------------

namespace {

NodalField interval_average_dense(const SpatialMesh& mesh, const ControlSignal::DenseFn& fn,
                                  double t0, double t1) {
    NodalField avg(static_cast<std::size_t>(mesh.node_count));
    for (int g = 0; g < GaussRule5::points; ++g) {
        const double t = t0 + (t1 - t0) * GaussRule5::xi[g];
        const NodalField sample = fn(t);
        if (sample.size() != avg.size())
            throw DataError("project_control: dense signal has wrong field size");
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += GaussRule5::w[g] * sample[i];
    }
    return avg;
}

}  // namespace

PiecewiseConstantControl project_control(const SpatialMesh& mesh, const ControlSignal& signal,
                                         int steps, double horizon) {
    if (steps < 1 || !(horizon > 0.0)) throw ConfigError("project_control: bad partition");
    PiecewiseConstantControl out;
    out.horizon = horizon;
    out.values.reserve(static_cast<std::size_t>(steps));
    const double kappa = horizon / steps;

    if (signal.is_zero()) {
        for (int k = 0; k < steps; ++k) out.values.push_back(zero_field(mesh));
        return out;
    }
    if (signal.is_piecewise()) {
        const auto& pc = signal.piecewise_data();
        if (pc.steps() == steps && pc.horizon == horizon) return pc;  // idempotent, exact
        // Re-project a step function by exact interval overlap.
        const double src_kappa = pc.horizon / pc.steps();
        for (int k = 0; k < steps; ++k) {
            const double t0 = k * kappa, t1 = (k + 1) * kappa;
            NodalField avg(static_cast<std::size_t>(mesh.node_count));
            for (int j = 0; j < pc.steps(); ++j) {
                const double s0 = j * src_kappa, s1 = (j + 1) * src_kappa;
                const double overlap = std::min(t1, s1) - std::max(t0, s0);
                if (overlap <= 0.0) continue;
                const double w = overlap / kappa;
                for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += w * pc.values[j][i];
            }
            out.values.push_back(std::move(avg));
        }
        return out;
    }
    for (int k = 0; k < steps; ++k)
        out.values.push_back(interval_average_dense(mesh, signal.dense_fn(), k * kappa, (k + 1) * kappa));
    return out;
}

double control_l2t_norm_sq(const SpatialMesh& mesh, const ControlSignal& signal, int steps,
                           double horizon) {
    const double kappa = horizon / steps;
    if (signal.is_zero()) return 0.0;
    if (signal.is_piecewise()) return control_l2t_norm_sq(mesh, signal.piecewise_data());
    double total = 0.0;
    for (int k = 0; k < steps; ++k) {
        for (int g = 0; g < GaussRule5::points; ++g) {
            const double t = (k + GaussRule5::xi[g]) * kappa;
            const NodalField sample = signal.dense_fn()(t);
            total += kappa * GaussRule5::w[g] * dot_mass(mesh, sample, sample);
        }
    }
    return total;
}

double control_l2t_norm_sq(const SpatialMesh& mesh, const PiecewiseConstantControl& control) {
    double total = 0.0;
    const double kappa = control.kappa();
    for (const auto& field : control.values) total += kappa * dot_mass(mesh, field, field);
    return total;
}

// ---------------------------------------------------------------------------
// Nonlinear solve
// ---------------------------------------------------------------------------

namespace {

std::vector<double> residual_vector(const SpatialMesh& mesh, const DriftCoefficients& drift,
                                    double kappa, const std::vector<double>& rhs,
                                    const NodalField& w) {
    std::vector<double> res = mass_apply(mesh, w);
    const std::vector<double> flux = assemble_weak_flux(mesh, drift, w);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] += kappa * flux[i] - rhs[i];
    return res;
}

// Frozen-coefficient sweep: assemble the weighted stiffness at the current
// iterate and solve the linear problem, treating convection explicitly.
NodalField kacanov_sweep(const SpatialMesh& mesh, const DriftCoefficients& drift, double kappa,
                         const std::vector<double>& rhs, const NodalField& w) {
    const int n = mesh.node_count;
    Tridiag system = mass_matrix(mesh);
    for (int e = 0; e < mesh.element_count(); ++e) {
        double vl, vr;
        element_values(mesh, w, e, vl, vr);
        const double slope = (vr - vl) / mesh.h;
        const double x_left = mesh.a + e * mesh.h;
        double weight = 0.0;
        for (int g = 0; g < GaussRule3::points; ++g) {
            const double x_hat = mesh.unit_coord(x_left + GaussRule3::xi[g] * mesh.h);
            const double lambda = vl + (vr - vl) * GaussRule3::xi[g];
            const double r2 = drift.flux.eps_reg * drift.flux.eps_reg + slope * slope;
            weight += GaussRule3::w[g] * drift.flux.coefficient(x_hat, lambda) *
                      std::pow(r2, 0.5 * (drift.flux.p - 2.0));
        }
        const double k_el = kappa * weight / mesh.h;
        const int left = e - 1, right = e;
        if (right <= n - 1) system.diag[right] += k_el;
        if (left >= 0) system.diag[left] += k_el;
        if (left >= 0 && right <= n - 1) {
            system.lower[right - 1] -= k_el;
            system.upper[left] -= k_el;
        }
    }
    std::vector<double> b = rhs;
    if (drift.convection) {
        const std::vector<double> conv = assemble_convection_only(mesh, *drift.convection, w);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= kappa * conv[i];
    }
    NodalField next(static_cast<std::size_t>(n));
    next.v = tridiag_solve(system, b);
    return next;
}

}  // namespace

NonlinearSolveResult solve_semi_implicit(const SpatialMesh& mesh, const DriftCoefficients& drift,
                                         double kappa, const std::vector<double>& rhs,
                                         const NodalField& initial_guess, const SchemeConfig& cfg,
                                         int step_index) {
    if (drift.flux.kind == FluxModel::Kind::adversarial_negated)
        throw ConfigError("solve_semi_implicit: adversarial flux is not solvable");

    NonlinearSolveResult result;
    result.solution = initial_guess;
    StepStats& stats = result.stats;
    stats.rhs_norm = norm2(rhs);

    const auto tolerance = [&](const NodalField& w) {
        return cfg.tol_nl * (1.0 + stats.rhs_norm) / std::max(1.0, norm2(w.v));
    };

    std::vector<double> res = residual_vector(mesh, drift, kappa, rhs, result.solution);
    double res_norm = norm2(res);
    int failed_dampings = 0;

    for (int iter = 0; iter < cfg.max_newton; ++iter) {
        if (res_norm <= tolerance(result.solution)) {
            stats.residual_norm = res_norm;
            return result;
        }
        Tridiag jac = assemble_weak_flux_jacobian(mesh, drift, result.solution);
        {
            const Tridiag mass = mass_matrix(mesh);
            for (std::size_t i = 0; i < jac.diag.size(); ++i) {
                jac.diag[i] = mass.diag[i] + kappa * jac.diag[i];
                if (i + 1 < jac.diag.size()) {
                    jac.lower[i] = mass.lower[i] + kappa * jac.lower[i];
                    jac.upper[i] = mass.upper[i] + kappa * jac.upper[i];
                }
            }
        }
        std::vector<double> step;
        bool advanced = false;
        try {
            std::vector<double> neg = res;
            for (auto& v : neg) v = -v;
            step = tridiag_solve(jac, neg);
        } catch (const NumericError&) {
            step.clear();
        }
        if (!step.empty()) {
            double alpha = 1.0;
            for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
                NodalField trial = result.solution;
                for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += alpha * step[i];
                if (trial.finite()) {
                    const std::vector<double> trial_res =
                        residual_vector(mesh, drift, kappa, rhs, trial);
                    const double trial_norm = norm2(trial_res);
                    if (trial_norm <= (1.0 - 1e-4 * alpha) * res_norm) {
                        result.solution = std::move(trial);
                        res = trial_res;
                        res_norm = trial_norm;
                        advanced = true;
                        break;
                    }
                }
                alpha *= 0.5;
                ++stats.backtracks;
            }
        }
        ++stats.newton_iters;
        if (!advanced) {
            if (++failed_dampings >= cfg.fallback_after) {
                stats.used_fallback = true;
                for (int sweep = 0; sweep < cfg.fallback_sweeps; ++sweep) {
                    result.solution = kacanov_sweep(mesh, drift, kappa, rhs, result.solution);
                    if (!result.solution.finite())
                        throw NumericError("solve_semi_implicit: non-finite iterate");
                    res = residual_vector(mesh, drift, kappa, rhs, result.solution);
                    res_norm = norm2(res);
                    if (res_norm <= tolerance(result.solution)) {
                        stats.residual_norm = res_norm;
                        return result;
                    }
                }
                failed_dampings = 0;
            }
        }
        if (!result.solution.finite()) throw NumericError("solve_semi_implicit: non-finite iterate");
    }
    if (res_norm <= tolerance(result.solution)) {
        stats.residual_norm = res_norm;
        return result;
    }
    std::ostringstream msg;
    msg << "solve_semi_implicit: no convergence, residual " << res_norm;
    throw SolverError(msg.str(), step_index, res_norm);
}

// ---------------------------------------------------------------------------
// Smoothing and stepping
// ---------------------------------------------------------------------------

NodalField smooth_initial(const SpatialMesh& mesh, const NodalField& u0, double kappa,
                          const ModelSpec& model, double tol) {
    if (!(kappa > 0.0)) throw ConfigError("smooth_initial: kappa must be > 0");
    const FluxModel resolvent = pure_p_laplacian(model.flux.p, model.flux.eps_reg);
    SchemeConfig solver_cfg;
    solver_cfg.tol_nl = tol;
    solver_cfg.max_newton = 200;
    solver_cfg.oracle_mode = true;
    const std::vector<double> rhs = mass_apply(mesh, u0);
    return solve_semi_implicit(mesh, DriftCoefficients{resolvent, nullptr}, kappa, rhs, u0,
                               solver_cfg)
        .solution;
}

NodalField implicit_step(const SpatialMesh& mesh, const ModelSpec& model, const SchemeConfig& cfg,
                         const NodalField& u_prev, const NodalField* control_k,
                         const NoiseIncrement& noise, StepStats* stats, int step_index) {
    const double kappa = cfg.kappa();
    NodalField forcing = u_prev;
    if (control_k) {
        for (std::size_t i = 0; i < forcing.size(); ++i) forcing[i] += kappa * (*control_k)[i];
    }
    if (!noise.wiener.empty()) {
        const NodalField dm = wiener_increment_field(mesh, model.diffusion, u_prev, noise.wiener);
        for (std::size_t i = 0; i < forcing.size(); ++i) forcing[i] += dm[i];
    }
    if (model.jumps.measure.total_mass() > 0.0 || model.jumps.g_amp > 0.0) {
        const NodalField dj =
            compensated_jump_increment(mesh, model, u_prev, noise.jumps, kappa);
        for (std::size_t i = 0; i < forcing.size(); ++i) forcing[i] += dj[i];
    }
    const std::vector<double> rhs = mass_apply(mesh, forcing);
    auto result = solve_semi_implicit(mesh, DriftCoefficients{model.flux, &model.convection}, kappa,
                                      rhs, u_prev, cfg, step_index);
    if (stats) *stats = result.stats;
    return std::move(result.solution);
}

PathSimulator::PathSimulator(const SpatialMesh& mesh, const ModelSpec& model,
                             const SchemeConfig& cfg, PiecewiseConstantControl control,
                             RngPolicy rng, uint64_t path)
    : mesh_(mesh), model_(model), cfg_(cfg), control_(std::move(control)), rng_(rng), path_(path) {
    cfg_.validate(model_);
    if (control_.steps() != cfg_.steps)
        throw DataError("PathSimulator: control partition does not match the scheme");
    state_ = smooth_initial(mesh_, model_.u0, cfg_.kappa(), model_, std::min(cfg_.tol_nl, 1e-12));
}

StepStats PathSimulator::advance() {
    if (step_ >= cfg_.steps) throw DataError("PathSimulator: horizon already reached");
    last_noise_ = provider_ ? provider_(step_)
                            : sample_noise(rng_, path_, static_cast<uint64_t>(step_), model_,
                                           cfg_.kappa());
    StepStats stats;
    try {
        state_ = implicit_step(mesh_, model_, cfg_, state_, &control_.values[step_], last_noise_,
                               &stats, step_);
    } catch (const SolverError& err) {
        std::ostringstream msg;
        msg << err.what() << " (step " << step_ << ")";
        throw SolverError(msg.str(), step_, err.residual);
    }
    ++step_;
    return stats;
}

namespace {

TrajectoryRecord run_impl(const SpatialMesh& mesh, const ModelSpec& model, const SchemeConfig& cfg,
                          const ControlSignal& control, const std::vector<NoiseIncrement>* noise,
                          RngPolicy rng, uint64_t path) {
    TrajectoryRecord record;
    record.mesh = mesh;
    record.cfg = cfg;
    record.seed = rng.master_seed;
    record.path = path;
    record.control = project_control(mesh, control, cfg.steps, cfg.horizon);

    PathSimulator sim(mesh, model, cfg, record.control, rng, path);
    if (noise) {
        if (static_cast<int>(noise->size()) != cfg.steps)
            throw DataError("run_trajectory_with_noise: noise length mismatch");
        sim.set_noise_provider([noise](int k) { return (*noise)[static_cast<std::size_t>(k)]; });
    }

    record.states.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    record.states.push_back(sim.state());
    for (int k = 0; k < cfg.steps; ++k) {
        record.stats.push_back(sim.advance());
        record.states.push_back(sim.state());
        record.wiener.push_back(sim.last_noise().wiener);
        record.jumps.push_back(sim.last_noise().jumps);
    }
    return record;
}

}  // namespace

TrajectoryRecord run_trajectory(const SpatialMesh& mesh, const ModelSpec& model,
                                const SchemeConfig& cfg, const ControlSignal& control,
                                RngPolicy rng, uint64_t path) {
    return run_impl(mesh, model, cfg, control, nullptr, rng, path);
}

TrajectoryRecord run_trajectory_with_noise(const SpatialMesh& mesh, const ModelSpec& model,
                                           const SchemeConfig& cfg, const ControlSignal& control,
                                           const std::vector<NoiseIncrement>& noise, RngPolicy rng,
                                           uint64_t path) {
    return run_impl(mesh, model, cfg, control, &noise, rng, path);
}

}  // namespace plevy
