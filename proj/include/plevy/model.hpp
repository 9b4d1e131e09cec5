#pragma once
// Concrete coefficient families for the SPDE
//
//   du - div( A(x,u,grad u) + F(u) ) dt
//      = U dt + h(u) dW + \int_E eta(x,u;z) Ntilde(dz,dt),   u = 0 on the boundary,
//
// together with machine-checkable validation of the structural assumptions
// the analysis needs: monotonicity/coercivity/growth of A, Lipschitz F with
// F(0)=0, square-summable Wiener mode maps, and the jump kernel envelope.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "plevy/mesh.hpp"
#include "plevy/rng.hpp"

namespace plevy {

// ---------------------------------------------------------------------------
// Flux A(x, lambda, zeta) = c(x, lambda) * (eps^2 + zeta^2)^((p-2)/2) * zeta
// with c(x,lambda) = c_base + c_space*sin^2(pi x_hat) + c_state*(1+tanh(lambda))/2.
// The monotone core has no (x,lambda) coupling; the state enters only through
// the bounded positive multiplier c, so monotonicity in zeta is structural.
// ---------------------------------------------------------------------------
struct FluxModel {
    enum class Kind { power_law, adversarial_negated };

    Kind kind = Kind::power_law;
    double p = 4.0;
    double c_base = 1.0;
    double c_space = 0.0;
    double c_state = 0.0;
    double eps_reg = 1e-8;

    double coefficient(double x_hat, double lambda) const {
        const double s = std::sin(M_PI * x_hat);
        return c_base + c_space * s * s + c_state * 0.5 * (1.0 + std::tanh(lambda));
    }
    double coefficient_dlambda(double x_hat, double lambda) const {
        (void)x_hat;
        const double t = std::tanh(lambda);
        return c_state * 0.5 * (1.0 - t * t);
    }

    double eval(double x_hat, double lambda, double zeta) const {
        if (kind == Kind::adversarial_negated) return -zeta;
        const double r2 = eps_reg * eps_reg + zeta * zeta;
        return coefficient(x_hat, lambda) * std::pow(r2, 0.5 * (p - 2.0)) * zeta;
    }
    double dzeta(double x_hat, double lambda, double zeta) const {
        if (kind == Kind::adversarial_negated) return -1.0;
        const double r2 = eps_reg * eps_reg + zeta * zeta;
        const double core = std::pow(r2, 0.5 * (p - 2.0));
        return coefficient(x_hat, lambda) * (core + (p - 2.0) * std::pow(r2, 0.5 * (p - 4.0)) * zeta * zeta);
    }
    double dlambda(double x_hat, double lambda, double zeta) const {
        if (kind == Kind::adversarial_negated) return 0.0;
        const double r2 = eps_reg * eps_reg + zeta * zeta;
        return coefficient_dlambda(x_hat, lambda) * std::pow(r2, 0.5 * (p - 2.0)) * zeta;
    }

    double c_min() const { return c_base; }
    double c_max() const { return c_base + c_space + c_state; }
    double lambda_lipschitz() const { return 0.5 * c_state; }

    // Assumption constants of the family. The regularization only increases
    // A(zeta)*zeta for p >= 2, so coercivity needs no correction term.
    double C1() const { return c_min(); }
    double growth_envelope() const { return std::pow(2.0, 0.5 * (p - 2.0)); }
    double C2() const { return c_max() * growth_envelope() * (1.0 + std::pow(eps_reg, p - 2.0)); }
    double C3() const { return 0.0; }
    double C4() const { return lambda_lipschitz() * growth_envelope() * (1.0 + std::pow(eps_reg, p - 2.0)); }
    double K1_eff() const { return 0.0; }
    double K2() const { return c_max() * growth_envelope() * std::pow(eps_reg, p - 2.0); }
    double K3() const { return lambda_lipschitz() * growth_envelope() * std::pow(eps_reg, p - 2.0); }
};

// Pure power-law flux with unit coefficient; the initial-datum smoothing
// resolvent uses this regardless of the model's spatial coefficient.
FluxModel pure_p_laplacian(double p, double eps_reg);

// ---------------------------------------------------------------------------
// Convection F(u): linear b*u or saturated b*s*tanh(u/s). F(0)=0 by
// construction; the global Lipschitz constant is |b|.
// ---------------------------------------------------------------------------
struct ConvectionModel {
    enum class Mode { linear, saturated };

    Mode mode = Mode::linear;
    double b = 0.0;
    double saturation = 1.0;

    double eval(double u) const {
        if (mode == Mode::linear) return b * u;
        return b * saturation * std::tanh(u / saturation);
    }
    double deriv(double u) const {
        if (mode == Mode::linear) return b;
        const double t = std::tanh(u / saturation);
        return b * (1.0 - t * t);
    }
    double lipschitz() const { return std::abs(b); }
};

// ---------------------------------------------------------------------------
// Wiener diffusion: per-mode maps h_n(xi) = sigma * xi * n^-(1+a) (linear) or
// sigma * n^-(1+a) * sin(xi) (bounded). C5 = sigma^2 * zeta(2+2a) bounds the
// full series; the truncated sum and the tail fraction are reported.
// ---------------------------------------------------------------------------
struct WienerDiffusionModel {
    enum class Mode { linear, bounded };

    Mode mode = Mode::linear;
    int n_modes = 32;
    double sigma = 0.0;
    double decay_a = 0.5;

    double mode_value(int n, double xi) const {
        const double scale = sigma * std::pow(static_cast<double>(n), -(1.0 + decay_a));
        return mode == Mode::linear ? scale * xi : scale * std::sin(xi);
    }
    double mode_deriv(int n, double xi) const {
        const double scale = sigma * std::pow(static_cast<double>(n), -(1.0 + decay_a));
        return mode == Mode::linear ? scale : scale * std::cos(xi);
    }

    double mode_sum_full() const;       // zeta(2+2a)
    double mode_sum_truncated() const;  // sum_{n<=N} n^{-2-2a}
    double tail_fraction() const { return 1.0 - mode_sum_truncated() / mode_sum_full(); }

    double C5() const { return sigma * sigma * mode_sum_full(); }
    double L_sigma() const { return C5(); }

    // integral over D of sum_n h_n(u(x))^2 dx for the P1 interpolant.
    double hs_norm_sq(const SpatialMesh& mesh, const NodalField& u) const;
};

// ---------------------------------------------------------------------------
// Levy measure on R^* (the O-factor of E collapsed to a point mass).
// Variants: finite-activity compound Poisson rate*q(z)dz with Gaussian marks,
// or a tempered stable density c|z|^(-1-alpha) e^(-beta|z|) truncated at
// |z| > eps_jump. Quadrature caches for integral gamma dm, integral gamma^2 dm
// and an inverse-CDF table for mark sampling are built once on construction.
// ---------------------------------------------------------------------------
class LevyMeasureSpec {
public:
    enum class Variant { compound_poisson, tempered_truncated };

    static LevyMeasureSpec compound_poisson(double rate, double mark_sd);
    static LevyMeasureSpec tempered_truncated(double alpha, double beta, double scale,
                                              double eps_jump);
    static LevyMeasureSpec none();  // zero mass

    Variant variant() const { return variant_; }
    double total_mass() const { return total_mass_; }
    double c_gamma() const { return c_gamma_; }
    double gamma_integral() const { return gamma_integral_; }
    double truncated_small_jump_mass() const { return truncated_mass_; }

    // Quadrature nodes/weights for integrals against m(dz); weights carry the
    // measure density.
    const std::vector<double>& quad_nodes() const { return quad_z_; }
    const std::vector<double>& quad_weights() const { return quad_w_; }

    // Draw a mark from the normalized measure using the supplied stream.
    double sample_mark(CounterStream& stream) const;

    // CDF of the normalized mark distribution (for goodness-of-fit checks).
    double mark_cdf(double z) const;

    double rate = 0.0;      // compound Poisson intensity
    double mark_sd = 1.0;   // compound Poisson mark std dev
    double alpha = 0.5;     // tempered stable index
    double beta = 1.0;      // tempering
    double scale = 1.0;     // tempered density scale
    double eps_jump = 1e-3; // small-jump cutoff

private:
    void prepare();

    Variant variant_ = Variant::compound_poisson;
    double total_mass_ = 0.0;
    double c_gamma_ = 0.0;
    double gamma_integral_ = 0.0;
    double truncated_mass_ = 0.0;
    std::vector<double> quad_z_;
    std::vector<double> quad_w_;
    // Inverse CDF table for the tempered variant (positive side, log spacing).
    std::vector<double> icdf_u_;
    std::vector<double> icdf_z_;
};

// ---------------------------------------------------------------------------
// Jump kernel eta(x, zeta; z) = gamma(z) * (g(x) + lambda_star * zeta) with
// gamma(z) = min(1, |z|), bounded non-negative g, lambda_star in [0,1).
// ---------------------------------------------------------------------------
struct JumpModel {
    enum class GShape { constant, bump };

    double g_amp = 0.0;
    GShape g_shape = GShape::bump;
    double lambda_star = 0.0;
    LevyMeasureSpec measure = LevyMeasureSpec::none();

    double g(double x_hat) const {
        return g_shape == GShape::constant ? g_amp : g_amp * std::sin(M_PI * x_hat);
    }
    static double gamma_weight(double z) { return std::min(1.0, std::abs(z)); }
    double eta(double x_hat, double zeta, double z) const {
        return gamma_weight(z) * (g(x_hat) + lambda_star * zeta);
    }
    double g_sup() const { return g_amp; }
    // Lipschitz constant of g in the unit coordinate; rescale by 1/|D| for x.
    double g_lipschitz_unit() const { return g_shape == GShape::constant ? 0.0 : g_amp * M_PI; }
};

// ---------------------------------------------------------------------------
// Full model: coefficients plus the initial datum.
// ---------------------------------------------------------------------------
struct ModelSpec {
    FluxModel flux;
    ConvectionModel convection;
    WienerDiffusionModel diffusion;
    JumpModel jumps;
    NodalField u0;
};

struct AssumptionCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    // Derived constants of the shipped families.
    double C1 = 0, C2 = 0, C3 = 0, C4 = 0, C5 = 0;
    double K1_eff = 0, K2 = 0, K3 = 0;
    double L_sigma = 0;
    double c_gamma = 0;
    double C_hg = 0;
    double levy_total_mass = 0;
    double truncated_small_jump_mass = 0;
    double c5_tail_fraction = 0;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline constexpr uint64_t validation_probe_seed = 0x5eedc0deULL;

// Randomized validation of the assumption battery. Throws ValidationError if
// an analytic constant is non-finite; individual check failures are reported,
// not thrown.
AssumptionReport validate_assumptions(const SpatialMesh& mesh, const ModelSpec& model,
                                      int sample_budget, uint64_t probe_seed = validation_probe_seed);

// Nodal values of x -> integral_E eta(x, u(x); z) m(dz), computed with the
// cached measure quadrature.
NodalField compensator_field(const SpatialMesh& mesh, const ModelSpec& model, const NodalField& u);

// C_hg = 2 (C5 + c_gamma * sup(g)^2) (1 + |D|).
double chg_constant(const SpatialMesh& mesh, const ModelSpec& model);

// integral_E || eta(., u; z) ||_{L^2}^2 m(dz) = c_gamma * integral (g + lambda* u)^2 dx.
double jump_l2_intensity(const SpatialMesh& mesh, const ModelSpec& model, const NodalField& u);

}  // namespace plevy
