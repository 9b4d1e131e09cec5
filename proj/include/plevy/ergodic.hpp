#pragma once
// Invariant-measure estimation for the uncontrolled equation: time-averaged
// occupation snapshots along one long trajectory (a Krylov-Bogoliubov
// surrogate), averages of bounded weakly-sequentially-continuous test
// functionals with batch-means errors, the Markov-inequality occupation
// bound, and the weak-Feller probe on weakly convergent initial data.

#include <cstdint>
#include <vector>

#include "plevy/diagnostics.hpp"
#include "plevy/model.hpp"
#include "plevy/scheme.hpp"
#include "plevy/stats.hpp"

namespace plevy {

struct EmpiricalMeasure {
    std::vector<NodalField> snapshots;
    std::vector<double> times;
    int burn_in_steps = 0;
    int stride = 0;
    double kappa = 0.0;
    uint64_t seed = 0;
    uint64_t path = 0;
    bool partial = false;  // solver failed mid-run; snapshots up to the failure
    int failed_step = -1;
};

// Snapshots every `stride` steps after the burn-in along a single U = 0
// trajectory. Optionally evaluates the dissipativity margin at every
// snapshot (margin_delta >= 0 enables it) and records the minimum.
struct TimeAverageOptions {
    double burn_in_time = 0.0;
    int stride = 1;
    double margin_delta = -1.0;  // < 0: skip margin tracking
};

struct TimeAverageResult {
    EmpiricalMeasure measure;
    double min_margin = 0.0;     // over snapshots, when tracking is enabled
    bool margin_tracked = false;
};

TimeAverageResult time_average_measure(const SpatialMesh& mesh, const ModelSpec& model,
                                       const SchemeConfig& cfg_long, RngPolicy rng, uint64_t path,
                                       const TimeAverageOptions& options);

// ---------------------------------------------------------------------------
// Bounded test functionals in the sequentially-weakly-continuous class:
// phi_c(u) = exp(-c ||u||^2) and phi_w(u) = tanh((u, w)).
// ---------------------------------------------------------------------------
struct TestFunctional {
    enum class Kind { bounded_exponential, bounded_linear };

    Kind kind = Kind::bounded_exponential;
    double c = 1.0;
    NodalField weight;  // w for the bounded-linear member

    double eval(const SpatialMesh& mesh, const NodalField& u) const;
};

struct FunctionalAverages {
    std::vector<double> running;  // prefix averages A_m
    double final_average = 0.0;
    double cauchy_gap = 0.0;  // max_{m >= m0} |A_m - A_last|
    double batch_se = 0.0;
};

FunctionalAverages test_function_average(const SpatialMesh& mesh, const EmpiricalMeasure& measure,
                                         const TestFunctional& phi);

// ---------------------------------------------------------------------------
// Occupation fractions against the Markov-inequality bound
//   (2||K1||_L1 + C_hg + ||u0||^2 / T) / (R^p delta).
// ---------------------------------------------------------------------------
struct BoundednessRow {
    double radius = 0.0;
    double fraction = 0.0;
    double fraction_se = 0.0;  // batch means
    double analytic_bound = 0.0;
};

std::vector<BoundednessRow> boundedness_profile(const SpatialMesh& mesh, const ModelSpec& model,
                                                const EmpiricalMeasure& measure,
                                                const std::vector<double>& radii, double delta,
                                                double horizon);

// ---------------------------------------------------------------------------
// Weak-Feller probe: v_n = v + amplitude * sin(freq_n pi x_hat) converges
// weakly to v as the frequency grows; with common random numbers the
// differences |(P_t phi)(v_n) - (P_t phi)(v)| should trend down.
// ---------------------------------------------------------------------------
struct WeakFellerReport {
    std::vector<int> frequencies;
    std::vector<double> differences;
    double base_value = 0.0;
    SpearmanResult trend;
    int paths = 0;
};

WeakFellerReport weak_feller_probe(const SpatialMesh& mesh, const ModelSpec& model,
                                   const SchemeConfig& cfg, RngPolicy rng,
                                   const TestFunctional& phi, const NodalField& v,
                                   double amplitude, const std::vector<int>& frequencies,
                                   int paths, int threads = 1);

}  // namespace plevy
