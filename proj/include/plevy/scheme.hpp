#pragma once
// The constructive core: control projection onto piecewise-constant-in-time
// fields, initial-datum smoothing through the p-Laplacian resolvent, the
// semi-implicit step
//
//   M (u_{k+1} - u_k) + kappa G(u_{k+1}) = kappa M U_k + M dM_k + M dJ_k,
//
// with G the assembled weak drift, dM_k the Wiener increment field frozen at
// u_k and dJ_k the compensated jump increment, and full trajectory
// generation. The implicit solve is damped Newton with a frozen-coefficient
// (Kacanov) fallback; the monotone drift makes both iterations globally safe.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "plevy/assembly.hpp"
#include "plevy/mesh.hpp"
#include "plevy/model.hpp"
#include "plevy/noise.hpp"
#include "plevy/rng.hpp"

namespace plevy {

struct SchemeConfig {
    int steps = 64;
    double horizon = 1.0;
    double tol_nl = 1e-10;  // relative nonlinear residual tolerance
    int max_newton = 80;
    int max_backtracks = 40;
    int fallback_after = 3;   // failed dampings before the Kacanov fallback
    int fallback_sweeps = 25;
    bool oracle_mode = false;  // permits p = 2

    double kappa() const { return horizon / steps; }
    void validate(const ModelSpec& model) const;
};

struct PiecewiseConstantControl {
    double horizon = 0.0;
    std::vector<NodalField> values;  // values[k] on (t_k, t_{k+1}]

    int steps() const { return static_cast<int>(values.size()); }
    double kappa() const { return horizon / steps(); }
};

// A control signal is either zero, already piecewise constant, or a dense
// time-dependent field to be projected.
class ControlSignal {
public:
    using DenseFn = std::function<NodalField(double)>;

    static ControlSignal zero() { return ControlSignal(); }
    static ControlSignal piecewise(PiecewiseConstantControl pc) {
        ControlSignal s;
        s.kind_ = Kind::piecewise;
        s.pc_ = std::move(pc);
        return s;
    }
    static ControlSignal dense(DenseFn fn) {
        ControlSignal s;
        s.kind_ = Kind::dense;
        s.fn_ = std::move(fn);
        return s;
    }

    bool is_zero() const { return kind_ == Kind::zero; }
    bool is_piecewise() const { return kind_ == Kind::piecewise; }
    const PiecewiseConstantControl& piecewise_data() const { return pc_; }
    const DenseFn& dense_fn() const { return fn_; }

private:
    enum class Kind { zero, piecewise, dense };
    Kind kind_ = Kind::zero;
    PiecewiseConstantControl pc_;
    DenseFn fn_;
};

// L2(0,T;L2) projection onto the piecewise-constant class: per-interval
// averages. Idempotent on a matching partition (returned unchanged); dense
// signals are averaged with a 5-point Gauss rule per interval, so
// non-expansiveness holds by convexity of the quadrature weights.
PiecewiseConstantControl project_control(const SpatialMesh& mesh, const ControlSignal& signal,
                                         int steps, double horizon);

// Squared L2(0,T;L2) norm of a signal, evaluated with the same interval rule
// the projection uses.
double control_l2t_norm_sq(const SpatialMesh& mesh, const ControlSignal& signal, int steps,
                           double horizon);
double control_l2t_norm_sq(const SpatialMesh& mesh, const PiecewiseConstantControl& control);

struct StepStats {
    int newton_iters = 0;
    int backtracks = 0;
    bool used_fallback = false;
    double residual_norm = 0.0;
    double rhs_norm = 0.0;
};

struct NonlinearSolveResult {
    NodalField solution;
    StepStats stats;
};

// Solve M w + kappa G(w) = rhs. The stopping rule enforces
// ||residual||_2 <= tol * (1 + ||rhs||_2) / max(1, ||w||_2), which keeps both
// the residual contract and the energy-identity defect inside tolerance.
NonlinearSolveResult solve_semi_implicit(const SpatialMesh& mesh, const DriftCoefficients& drift,
                                         double kappa, const std::vector<double>& rhs,
                                         const NodalField& initial_guess, const SchemeConfig& cfg,
                                         int step_index = -1);

// Resolvent smoothing of the initial datum: u_k - kappa div(|u_k'|^(p-2) u_k') = u0
// in weak form, with the model's regularization. Testing with u_k gives
// 0.5||u_k||^2 + kappa ||grad u_k||_p^p <= 0.5||u0||^2 up to solver residual.
NodalField smooth_initial(const SpatialMesh& mesh, const NodalField& u0, double kappa,
                          const ModelSpec& model, double tol = 1e-12);

NodalField implicit_step(const SpatialMesh& mesh, const ModelSpec& model, const SchemeConfig& cfg,
                         const NodalField& u_prev, const NodalField* control_k,
                         const NoiseIncrement& noise, StepStats* stats = nullptr,
                         int step_index = -1);

struct TrajectoryRecord {
    SpatialMesh mesh;
    SchemeConfig cfg;
    uint64_t seed = 0;
    uint64_t path = 0;
    std::vector<NodalField> states;             // N+1, states[0] smoothed
    std::vector<std::vector<double>> wiener;    // per step
    std::vector<std::vector<JumpEvent>> jumps;  // per step
    PiecewiseConstantControl control;
    std::vector<StepStats> stats;
};

// Streaming stepper; run_trajectory records everything, the ergodic module
// consumes states as they appear.
class PathSimulator {
public:
    using NoiseProvider = std::function<NoiseIncrement(int step)>;

    PathSimulator(const SpatialMesh& mesh, const ModelSpec& model, const SchemeConfig& cfg,
                  PiecewiseConstantControl control, RngPolicy rng, uint64_t path);

    void set_noise_provider(NoiseProvider provider) { provider_ = std::move(provider); }

    const NodalField& state() const { return state_; }
    int step() const { return step_; }
    double time() const { return step_ * cfg_.kappa(); }
    const NoiseIncrement& last_noise() const { return last_noise_; }

    StepStats advance();

private:
    const SpatialMesh& mesh_;
    const ModelSpec& model_;
    SchemeConfig cfg_;
    PiecewiseConstantControl control_;
    RngPolicy rng_;
    uint64_t path_;
    NoiseProvider provider_;
    NodalField state_;
    NoiseIncrement last_noise_;
    int step_ = 0;
};

TrajectoryRecord run_trajectory(const SpatialMesh& mesh, const ModelSpec& model,
                                const SchemeConfig& cfg, const ControlSignal& control,
                                RngPolicy rng, uint64_t path);

// Same, but with externally supplied per-step noise (refinement coupling).
TrajectoryRecord run_trajectory_with_noise(const SpatialMesh& mesh, const ModelSpec& model,
                                           const SchemeConfig& cfg, const ControlSignal& control,
                                           const std::vector<NoiseIncrement>& noise, RngPolicy rng,
                                           uint64_t path);

}  // namespace plevy
