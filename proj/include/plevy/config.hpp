#pragma once
// Run configuration: one JSON document covering mesh, model, scheme, noise,
// control, ergodic, rng and output settings. Unknown keys are rejected, flat
// dotted-path overrides are applied on top, and the fully resolved document
// (with its hash) is embedded in every output file.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "plevy/control.hpp"
#include "plevy/model.hpp"
#include "plevy/scheme.hpp"

namespace plevy {

inline constexpr const char* artifact_version = "0.1.0";

struct RunConfig {
    struct Mesh {
        int nodes = 63;
        double a = 0.0;
        double b = 1.0;
    } mesh;

    struct Flux {
        std::string kind = "power_law";  // power_law | adversarial_negated
        double p = 4.0;
        double c_base = 1.0;
        double c_space = 0.25;
        double c_state = 0.25;
        double eps_reg = 1e-8;
    } flux;

    struct Convection {
        std::string mode = "linear";  // linear | saturated
        double b = 0.5;
        double saturation = 1.0;
    } convection;

    struct Diffusion {
        std::string mode = "linear";  // linear | bounded
        int n_modes = 32;
        double sigma = 0.25;
        double decay_a = 0.5;
    } diffusion;

    struct Jumps {
        double g_amp = 0.3;
        std::string g_shape = "bump";  // bump | constant
        double lambda_star = 0.3;
        std::string variant = "compound_poisson";  // compound_poisson | tempered_truncated | none
        double rate = 2.0;
        double mark_sd = 0.7;
        double alpha = 0.8;
        double beta = 1.5;
        double scale = 0.5;
        double eps_jump = 1e-3;
    } jumps;

    struct Initial {
        std::string kind = "sine";  // zero | sine | bump | random_h1
        double amplitude = 1.0;
        int mode = 1;
        uint64_t seed = 1;
    } initial;

    struct Scheme {
        int steps = 64;
        double horizon = 1.0;
        double tol_nl = 1e-10;
        int max_newton = 80;
        bool oracle_mode = false;
    } scheme;

    struct Simulate {
        int paths = 10;
        bool binary_states = false;
    } simulate;

    struct Certify {
        int levels = 3;
        int paths = 64;
        std::string initial = "zero";  // default probes the noise-driven regime
    } certify;

    struct Uniqueness {
        int paths = 16;
        double perturbation = 0.2;
        std::vector<double> varthetas = {1e-2, 1e-3, 1e-4};
    } uniqueness;

    struct Control {
        int time_blocks = 2;
        int space_modes = 2;
        std::string target = "decayed";  // decayed | profile
        double target_amplitude = 0.5;
        std::string psi = "none";  // none | affine | clipped_linear
        double psi_slope = 1.0;
        double psi_offset = 0.0;
        double psi_clip = 1.0;
        int budget = 120;
        int mc_paths = 16;
        double initial_step = 0.5;
        double min_step = 1e-3;
    } control;

    struct Ergodic {
        double burn_in = 1.0;
        int stride = 10;
        std::vector<double> radii = {1.0, 2.0, 4.0, 8.0};
        double delta = -1.0;  // < 0: use the Poincare-derived suggestion
        double phi_c = 1.0;
        bool binary_states = false;
    } ergodic;

    struct Rng {
        uint64_t seed = 42;
    } rng;

    struct Output {
        std::string dir = "out";
    } output;

    int threads = 4;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& doc);  // rejects unknown keys

    // The determinism-relevant document: everything except execution
    // parameters (threads, output paths). Outputs embed this and its hash,
    // so runs with identical (science config, seed) are byte-identical
    // regardless of parallelism degree or destination directory.
    nlohmann::json science_json() const;

    // FNV-1a hash of the canonical science dump, hex-encoded.
    std::string hash() const;

    SpatialMesh make_mesh() const;
    ModelSpec make_model(const SpatialMesh& mesh) const;
    SchemeConfig make_scheme() const;
    NodalField make_initial(const SpatialMesh& mesh) const;
};

// Load from file (or defaults when path is empty), apply dotted overrides
// like "scheme.steps=128", honor the PLEVY_SEED environment variable.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace plevy
