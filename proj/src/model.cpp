#include "plevy/model.hpp"

#include <algorithm>
#include <sstream>

namespace plevy {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on the
// three-term recurrence.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

// Append a mapped GL panel over [lo,hi] with measure density f.
template <typename Density>
void add_panel(double lo, double hi, int order, Density&& density, std::vector<double>& z,
               std::vector<double>& w) {
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int i = 0; i < order; ++i) {
        const double zi = mid + half * gx[i];
        z.push_back(zi);
        w.push_back(half * gw[i] * density(zi));
    }
}

double normal_pdf(double z, double sd) {
    const double t = z / sd;
    return std::exp(-0.5 * t * t) / (sd * std::sqrt(2.0 * M_PI));
}

}  // namespace

FluxModel pure_p_laplacian(double p, double eps_reg) {
    FluxModel flux;
    flux.kind = FluxModel::Kind::power_law;
    flux.p = p;
    flux.c_base = 1.0;
    flux.c_space = 0.0;
    flux.c_state = 0.0;
    flux.eps_reg = eps_reg;
    return flux;
}

double WienerDiffusionModel::mode_sum_full() const {
    return std::riemann_zeta(2.0 + 2.0 * decay_a);
}

double WienerDiffusionModel::mode_sum_truncated() const {
    double s = 0.0;
    for (int n = 1; n <= n_modes; ++n) s += std::pow(static_cast<double>(n), -2.0 - 2.0 * decay_a);
    return s;
}

double WienerDiffusionModel::hs_norm_sq(const SpatialMesh& mesh, const NodalField& u) const {
    if (sigma == 0.0 || n_modes == 0) return 0.0;
    std::vector<double> scale(n_modes);
    for (int n = 1; n <= n_modes; ++n)
        scale[n - 1] = sigma * std::pow(static_cast<double>(n), -(1.0 + decay_a));
    double total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double vl, vr;
        element_values(mesh, u, e, vl, vr);
        double acc = 0.0;
        for (int g = 0; g < GaussRule3::points; ++g) {
            const double value = vl + (vr - vl) * GaussRule3::xi[g];
            double mode_sum = 0.0;
            if (mode == Mode::linear) {
                for (double s : scale) mode_sum += s * s;
                mode_sum *= value * value;
            } else {
                const double sv = std::sin(value);
                for (double s : scale) mode_sum += s * s;
                mode_sum *= sv * sv;
            }
            acc += GaussRule3::w[g] * mode_sum;
        }
        total += mesh.h * acc;
    }
    return total;
}

// ---------------------------------------------------------------------------
// LevyMeasureSpec
// ---------------------------------------------------------------------------

LevyMeasureSpec LevyMeasureSpec::compound_poisson(double rate, double mark_sd) {
    LevyMeasureSpec spec;
    spec.variant_ = Variant::compound_poisson;
    spec.rate = rate;
    spec.mark_sd = mark_sd;
    spec.prepare();
    return spec;
}

LevyMeasureSpec LevyMeasureSpec::tempered_truncated(double alpha, double beta, double scale,
                                                    double eps_jump) {
    LevyMeasureSpec spec;
    spec.variant_ = Variant::tempered_truncated;
    spec.alpha = alpha;
    spec.beta = beta;
    spec.scale = scale;
    spec.eps_jump = eps_jump;
    spec.prepare();
    return spec;
}

LevyMeasureSpec LevyMeasureSpec::none() {
    LevyMeasureSpec spec;
    spec.variant_ = Variant::compound_poisson;
    spec.rate = 0.0;
    spec.mark_sd = 1.0;
    spec.prepare();
    return spec;
}

void LevyMeasureSpec::prepare() {
    quad_z_.clear();
    quad_w_.clear();
    icdf_u_.clear();
    icdf_z_.clear();
    truncated_mass_ = 0.0;

    if (variant_ == Variant::compound_poisson) {
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw ConfigError("levy measure: compound Poisson rate must be finite and >= 0");
        if (!(mark_sd > 0.0)) throw ConfigError("levy measure: mark_sd must be > 0");
        total_mass_ = rate;
        if (rate > 0.0) {
            // Split panels at the kinks of gamma(z) = min(1,|z|).
            const double L = std::max(10.0 * mark_sd, 2.0);
            const auto density = [this](double z) { return rate * normal_pdf(z, mark_sd); };
            add_panel(-L, -1.0, 32, density, quad_z_, quad_w_);
            add_panel(-1.0, 0.0, 32, density, quad_z_, quad_w_);
            add_panel(0.0, 1.0, 32, density, quad_z_, quad_w_);
            add_panel(1.0, L, 32, density, quad_z_, quad_w_);
        }
    } else {
        if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("levy measure: alpha must be in (0,2)");
        if (!(beta > 0.0) || !(scale > 0.0) || !(eps_jump > 0.0))
            throw ConfigError("levy measure: beta, scale, eps_jump must be > 0");
        // One-sided integrals via z = eps * e^t; the integrand is smooth and
        // decays like exp(-beta eps e^t).
        const double z_max = eps_jump + 80.0 / beta;
        const double t_max = std::log(z_max / eps_jump);
        const auto push_side = [&](double sign) {
            const int panels = 48, order = 16;
            std::vector<double> gx, gw;
            gauss_legendre(order, gx, gw);
            for (int c = 0; c < panels; ++c) {
                const double lo = t_max * c / panels;
                const double hi = t_max * (c + 1) / panels;
                const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
                for (int i = 0; i < order; ++i) {
                    const double t = mid + half * gx[i];
                    const double zmag = eps_jump * std::exp(t);
                    // density * dz/dt = scale * z^(-1-alpha) e^(-beta z) * z
                    const double w = half * gw[i] * scale * std::pow(zmag, -alpha) *
                                     std::exp(-beta * zmag);
                    quad_z_.push_back(sign * zmag);
                    quad_w_.push_back(w);
                }
            }
        };
        push_side(+1.0);
        push_side(-1.0);
        total_mass_ = 0.0;
        for (double w : quad_w_) total_mass_ += w;
        // Mass removed below the cutoff: 2c * integral_0^eps z^(-1-alpha) e^(-beta z) dz,
        // bounded by the integrable envelope without tempering.
        truncated_mass_ = 2.0 * scale * std::pow(eps_jump, -alpha) / alpha;

        // Inverse-CDF table on the positive side (uniform grid in t).
        const int table = 4096;
        std::vector<double> cdf(table + 1, 0.0);
        icdf_z_.resize(table + 1);
        double acc = 0.0;
        double prev_f = 0.0;
        for (int j = 0; j <= table; ++j) {
            const double t = t_max * j / table;
            const double zmag = eps_jump * std::exp(t);
            const double f = scale * std::pow(zmag, -alpha) * std::exp(-beta * zmag);
            if (j > 0) acc += 0.5 * (prev_f + f) * (t_max / table);
            prev_f = f;
            cdf[j] = acc;
            icdf_z_[j] = zmag;
        }
        icdf_u_.resize(table + 1);
        for (int j = 0; j <= table; ++j) icdf_u_[j] = cdf[j] / acc;
    }

    c_gamma_ = 0.0;
    gamma_integral_ = 0.0;
    for (std::size_t i = 0; i < quad_z_.size(); ++i) {
        const double gamma = std::min(1.0, std::abs(quad_z_[i]));
        gamma_integral_ += quad_w_[i] * gamma;
        c_gamma_ += quad_w_[i] * gamma * gamma;
    }
    if (!std::isfinite(total_mass_) || !std::isfinite(c_gamma_))
        throw ConfigError("levy measure: non-finite mass or c_gamma");
}

double LevyMeasureSpec::sample_mark(CounterStream& stream) const {
    if (variant_ == Variant::compound_poisson) return mark_sd * stream.normal();
    // Symmetric two-sided: pick a side, then invert the one-sided CDF.
    const double side = stream.uniform() < 0.5 ? -1.0 : 1.0;
    const double u = stream.uniform();
    const auto it = std::lower_bound(icdf_u_.begin(), icdf_u_.end(), u);
    if (it == icdf_u_.begin()) return side * icdf_z_.front();
    if (it == icdf_u_.end()) return side * icdf_z_.back();
    const std::size_t j = static_cast<std::size_t>(it - icdf_u_.begin());
    const double u0 = icdf_u_[j - 1], u1 = icdf_u_[j];
    const double frac = (u1 > u0) ? (u - u0) / (u1 - u0) : 0.0;
    return side * (icdf_z_[j - 1] + frac * (icdf_z_[j] - icdf_z_[j - 1]));
}

double LevyMeasureSpec::mark_cdf(double z) const {
    if (variant_ == Variant::compound_poisson) {
        return 0.5 * std::erfc(-z / (mark_sd * std::sqrt(2.0)));
    }
    const auto one_sided = [this](double mag) {
        if (mag <= icdf_z_.front()) return 0.0;
        if (mag >= icdf_z_.back()) return 1.0;
        const auto it = std::lower_bound(icdf_z_.begin(), icdf_z_.end(), mag);
        const std::size_t j = static_cast<std::size_t>(it - icdf_z_.begin());
        const double z0 = icdf_z_[j - 1], z1 = icdf_z_[j];
        const double frac = (z1 > z0) ? (mag - z0) / (z1 - z0) : 0.0;
        return icdf_u_[j - 1] + frac * (icdf_u_[j] - icdf_u_[j - 1]);
    };
    if (z >= 0.0) return 0.5 + 0.5 * one_sided(z);
    return 0.5 - 0.5 * one_sided(-z);
}

// ---------------------------------------------------------------------------
// Assumption validation
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

AssumptionReport validate_assumptions(const SpatialMesh& mesh, const ModelSpec& model,
                                      int sample_budget, uint64_t probe_seed) {
    if (sample_budget < 1) throw ValidationError("validate_assumptions: sample_budget must be >= 1");

    AssumptionReport report;
    const FluxModel& A = model.flux;
    report.C1 = A.C1();
    report.C2 = A.C2();
    report.C3 = A.C3();
    report.C4 = A.C4();
    report.K1_eff = A.K1_eff();
    report.K2 = A.K2();
    report.K3 = A.K3();
    report.C5 = model.diffusion.C5();
    report.L_sigma = model.diffusion.L_sigma();
    report.c_gamma = model.jumps.measure.c_gamma();
    report.C_hg = chg_constant(mesh, model);
    report.levy_total_mass = model.jumps.measure.total_mass();
    report.truncated_small_jump_mass = model.jumps.measure.truncated_small_jump_mass();
    report.c5_tail_fraction = model.diffusion.tail_fraction();

    const double constants[] = {report.C1, report.C2,  report.C4,    report.C5,
                                report.K2, report.K3,  report.c_gamma, report.C_hg,
                                report.levy_total_mass};
    for (double c : constants)
        if (!std::isfinite(c)) throw ValidationError("validate_assumptions: non-finite analytic constant");

    CounterStream sampler({probe_seed}, 0, 0, RngChannel::validation);
    const double range = 10.0;
    const auto draw = [&](double scale) { return scale * (2.0 * sampler.uniform() - 1.0); };

    auto& checks = report.checks;
    const auto add = [&](std::string name, bool pass, std::string detail) {
        checks.push_back({std::move(name), pass, std::move(detail)});
    };

    // A1: initial datum.
    add("A1.initial-datum",
        model.u0.size() == static_cast<std::size_t>(mesh.node_count) && model.u0.finite(),
        "finite L2 initial datum on the mesh");

    // A2 battery on sampled (x, lambda, zeta).
    bool mono = true, coer = true, grow = true, lip = true;
    double worst_mono = 0.0;
    for (int s = 0; s < sample_budget; ++s) {
        const double x_hat = sampler.uniform();
        const double lambda = draw(range);
        const double z1 = draw(range);
        const double z2 = draw(range);
        const double a1 = A.eval(x_hat, lambda, z1);
        const double a2 = A.eval(x_hat, lambda, z2);
        const double pairing = (a1 - a2) * (z1 - z2);
        const double tol = 1e-12 * (1.0 + std::abs(a1) + std::abs(a2)) * (1.0 + std::abs(z1 - z2));
        if (pairing < -tol) {
            mono = false;
            worst_mono = std::min(worst_mono, pairing);
        }
        const double coercive = a1 * z1 - (report.C1 * std::pow(std::abs(z1), A.p) - report.K1_eff);
        if (coercive < -1e-10 * (1.0 + std::abs(a1 * z1))) coer = false;
        const double bound = report.C2 * std::pow(std::abs(z1), A.p - 1.0) +
                             report.C3 * std::pow(std::abs(lambda), A.p - 1.0) + report.K2;
        if (std::abs(a1) > bound * (1.0 + 1e-12) + 1e-12) grow = false;
        const double lambda2 = draw(range);
        const double shift = std::abs(A.eval(x_hat, lambda, z1) - A.eval(x_hat, lambda2, z1));
        const double lip_bound = (report.C4 * std::pow(std::abs(z1), A.p - 1.0) + report.K3) *
                                 std::abs(lambda - lambda2);
        if (shift > lip_bound * (1.0 + 1e-12) + 1e-12) lip = false;
    }
    add("A2.i.monotonicity", mono, mono ? "pairing >= 0 on all samples" : "violated, worst pairing " + fmt(worst_mono));
    add("A2.ii.coercivity", coer, "A(z).z >= C1|z|^p - K1, C1 = " + fmt(report.C1));
    add("A2.iii.growth", grow, "|A| <= C2|z|^(p-1) + C3|l|^(p-1) + K2");
    add("A2.iv.state-lipschitz", lip, "C4 = " + fmt(report.C4));

    // A3: convection.
    bool conv_zero = model.convection.eval(0.0) == 0.0;
    bool conv_lip = true;
    for (int s = 0; s < sample_budget; ++s) {
        const double u = draw(range), v = draw(range);
        if (std::abs(model.convection.eval(u) - model.convection.eval(v)) >
            model.convection.lipschitz() * std::abs(u - v) * (1.0 + 1e-12) + 1e-14)
            conv_lip = false;
    }
    add("A3.convection", conv_zero && conv_lip,
        "F(0) = 0 and |F| Lipschitz with constant " + fmt(model.convection.lipschitz()));

    // A4: Wiener mode maps.
    bool wiener_growth = true, wiener_lip = true;
    for (int s = 0; s < sample_budget; ++s) {
        const double xi = draw(range), zeta = draw(range);
        double sum_sq = 0.0, sum_diff = 0.0;
        for (int n = 1; n <= model.diffusion.n_modes; ++n) {
            const double hx = model.diffusion.mode_value(n, xi);
            const double hz = model.diffusion.mode_value(n, zeta);
            sum_sq += hx * hx;
            sum_diff += (hx - hz) * (hx - hz);
        }
        if (sum_sq > report.C5 * (1.0 + xi * xi) * (1.0 + 1e-12) + 1e-14) wiener_growth = false;
        if (sum_diff > report.L_sigma * (xi - zeta) * (xi - zeta) * (1.0 + 1e-12) + 1e-14)
            wiener_lip = false;
    }
    add("A4.wiener-growth", wiener_growth, "C5 = " + fmt(report.C5));
    add("A4.wiener-lipschitz", wiener_lip, "L_sigma = " + fmt(report.L_sigma));

    // A5: measure structure.
    add("A5.levy-measure", std::isfinite(report.levy_total_mass) && report.levy_total_mass >= 0.0,
        "truncated mass " + fmt(report.levy_total_mass));

    // A6: jump kernel.
    const bool lambda_ok = model.jumps.lambda_star >= 0.0 && model.jumps.lambda_star < 1.0;
    add("A6.range", lambda_ok && model.jumps.g_amp >= 0.0,
        lambda_ok ? "lambda_star in [0,1)" : "lambda_star outside [0,1)");
    bool env_ok = true, eta_lip_ok = true;
    const double g_tilde = std::max(model.jumps.g_sup(), model.jumps.lambda_star);
    const double L_eta_x = model.jumps.g_lipschitz_unit() / mesh.measure();
    const auto& zq = model.jumps.measure.quad_nodes();
    for (int s = 0; s < sample_budget; ++s) {
        const double x_hat = sampler.uniform();
        const double y_hat = sampler.uniform();
        const double zeta = draw(range), xi = draw(range);
        const double z = zq.empty() ? draw(2.0) : zq[static_cast<std::size_t>(sampler.uniform() * zq.size()) % zq.size()];
        const double gamma = JumpModel::gamma_weight(z);
        if (std::abs(model.jumps.eta(x_hat, zeta, z)) >
            g_tilde * gamma * (1.0 + std::abs(zeta)) * (1.0 + 1e-12) + 1e-14)
            env_ok = false;
        const double diff = std::abs(model.jumps.eta(x_hat, zeta, z) - model.jumps.eta(y_hat, xi, z));
        const double dx_phys = std::abs(x_hat - y_hat) * mesh.measure();
        if (diff > gamma * (model.jumps.lambda_star * std::abs(zeta - xi) + L_eta_x * dx_phys) *
                       (1.0 + 1e-12) + 1e-14)
            eta_lip_ok = false;
    }
    add("A6.envelope", env_ok, "g_tilde = " + fmt(g_tilde));
    add("A6.lipschitz", eta_lip_ok, "lambda_star = " + fmt(model.jumps.lambda_star));

    return report;
}

NodalField compensator_field(const SpatialMesh& mesh, const ModelSpec& model, const NodalField& u) {
    if (u.size() != static_cast<std::size_t>(mesh.node_count))
        throw DataError("compensator_field: field size does not match mesh");
    NodalField out(u.size());
    const auto& z = model.jumps.measure.quad_nodes();
    const auto& w = model.jumps.measure.quad_weights();
    for (int i = 0; i < mesh.node_count; ++i) {
        const double x_hat = mesh.unit_coord(mesh.node(i));
        double acc = 0.0;
        for (std::size_t q = 0; q < z.size(); ++q) acc += w[q] * model.jumps.eta(x_hat, u[i], z[q]);
        if (!std::isfinite(acc)) throw NumericError("compensator_field: quadrature diverged");
        out[i] = acc;
    }
    return out;
}

double chg_constant(const SpatialMesh& mesh, const ModelSpec& model) {
    const double g_sup = model.jumps.g_sup();
    return 2.0 * (model.diffusion.C5() + model.jumps.measure.c_gamma() * g_sup * g_sup) *
           (1.0 + mesh.measure());
}

double jump_l2_intensity(const SpatialMesh& mesh, const ModelSpec& model, const NodalField& u) {
    double total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        double vl, vr;
        element_values(mesh, u, e, vl, vr);
        const double xl = mesh.a + e * mesh.h;
        double acc = 0.0;
        for (int g = 0; g < GaussRule3::points; ++g) {
            const double x_hat = mesh.unit_coord(xl + GaussRule3::xi[g] * mesh.h);
            const double uval = vl + (vr - vl) * GaussRule3::xi[g];
            const double base = model.jumps.g(x_hat) + model.jumps.lambda_star * uval;
            acc += GaussRule3::w[g] * base * base;
        }
        total += mesh.h * acc;
    }
    return model.jumps.measure.c_gamma() * total;
}

}  // namespace plevy
