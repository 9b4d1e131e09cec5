#pragma once
// The optimal-control harness around the cost functional
//
//   J = E[ integral_0^T ( ||u(t) - u_det(t)||^2 + ||U(t)||^2 ) dt + Psi(u(T)) ],
//
// evaluated by left-endpoint quadrature on the scheme's partition and
// minimized over finite-dimensional control families by coordinate search
// under common random numbers. The control penalty is an exact quadratic
// form in the coefficients (precomputed Gram matrix), so its convexity is
// structural.

#include <cstdint>
#include <functional>
#include <vector>

#include "plevy/parallel.hpp"
#include "plevy/scheme.hpp"
#include "plevy/stats.hpp"

namespace plevy {

struct TerminalPayoff {
    enum class Kind { none, affine, clipped_linear };

    Kind kind = Kind::none;
    double offset = 0.0;
    double slope = 0.0;
    double clip = 1.0;
    NodalField anchor;  // w in Psi(u) = offset + slope ||u - w||

    double eval(const SpatialMesh& mesh, const NodalField& u) const;
    double lipschitz() const { return kind == Kind::none ? 0.0 : std::abs(slope); }
};

struct CostSpec {
    std::vector<NodalField> target;  // u_det at t_0..t_N
    TerminalPayoff payoff;
};

// Deterministic single-path cost given a realized trajectory.
double cost_evaluate(const SpatialMesh& mesh, const TrajectoryRecord& traj,
                     const PiecewiseConstantControl& control, const CostSpec& spec);

// Running-cost pieces, exposed for the closed-form oracles.
double state_tracking_term(const SpatialMesh& mesh, const TrajectoryRecord& traj,
                           const CostSpec& spec);
double control_penalty_term(const SpatialMesh& mesh, const PiecewiseConstantControl& control);

// ---------------------------------------------------------------------------
// Control family: U_theta = sum_j theta_j * atom_j with piecewise-constant
// atoms and a precomputed Gram matrix for the penalty.
// ---------------------------------------------------------------------------
class ControlFamily {
public:
    ControlFamily(const SpatialMesh& mesh, std::vector<PiecewiseConstantControl> atoms);

    // Separable basis: time blocks x sine space modes on the partition.
    static ControlFamily separable(const SpatialMesh& mesh, int steps, double horizon,
                                   int time_blocks, int space_modes);

    int dimension() const { return static_cast<int>(atoms_.size()); }
    const std::vector<PiecewiseConstantControl>& atoms() const { return atoms_; }

    PiecewiseConstantControl realize(const std::vector<double>& theta) const;
    double penalty(const std::vector<double>& theta) const;  // theta^T G theta
    const std::vector<std::vector<double>>& gram() const { return gram_; }
    double gram_min_eigenvalue() const;

private:
    std::vector<PiecewiseConstantControl> atoms_;
    std::vector<std::vector<double>> gram_;
};

// ---------------------------------------------------------------------------
// Monte Carlo cost estimation (common random numbers by construction: path i
// always uses stream (seed, i)).
// ---------------------------------------------------------------------------
struct CostEstimate {
    double mean = 0.0;
    double se = 0.0;
    double control_term = 0.0;  // deterministic part
    int paths = 0;
    int failures = 0;
    bool partial() const { return failures > 0; }
};

CostEstimate mc_cost_estimate(const SpatialMesh& mesh, const ModelSpec& model,
                              const SchemeConfig& cfg, const ControlFamily& family,
                              const std::vector<double>& theta, const CostSpec& spec,
                              RngPolicy rng, int n_paths, int threads = 1);

// ---------------------------------------------------------------------------
// Derivative-free minimization: coordinate search with shrinking steps on the
// fixed-seed surrogate. The incumbent sequence is non-increasing by
// construction (only improvements are accepted).
// ---------------------------------------------------------------------------
struct OptimizationTracePoint {
    int evaluation = 0;
    std::vector<double> theta;
    double cost = 0.0;
    double se = 0.0;
};

struct OptimizationResult {
    std::vector<double> theta;
    double cost = 0.0;
    std::vector<OptimizationTracePoint> incumbents;
    int evaluations = 0;
    bool budget_exhausted = false;
    int failures = 0;
};

struct OptimizerConfig {
    int budget = 200;            // cost evaluations
    int mc_paths = 16;
    double initial_step = 0.5;
    double min_step = 1e-4;
    int threads = 1;
};

OptimizationResult optimize_control(const SpatialMesh& mesh, const ModelSpec& model,
                                    const SchemeConfig& cfg, const ControlFamily& family,
                                    const CostSpec& spec, RngPolicy rng,
                                    const OptimizerConfig& opt);

}  // namespace plevy
