#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plevy/diagnostics.hpp"

using namespace plevy;

namespace {

ModelSpec quiet_model(const SpatialMesh& mesh, double p) {
    ModelSpec model;
    model.flux.p = p;
    model.flux.eps_reg = 1e-8;
    model.diffusion.sigma = 0.0;
    model.diffusion.n_modes = 0;
    model.jumps.measure = LevyMeasureSpec::none();
    model.u0 = interpolate(mesh, [](double x) { return std::sin(M_PI * x); });
    return model;
}

ModelSpec noisy_model(const SpatialMesh& mesh) {
    ModelSpec model = quiet_model(mesh, 4.0);
    model.flux.c_space = 0.25;
    model.flux.c_state = 0.25;
    model.convection.b = 0.5;
    model.diffusion.sigma = 0.25;
    model.diffusion.n_modes = 32;
    model.jumps.g_amp = 0.3;
    model.jumps.lambda_star = 0.3;
    model.jumps.measure = LevyMeasureSpec::compound_poisson(2.0, 0.7);
    return model;
}

}  // namespace

TEST_CASE("energy ledger: identity residual inside the solver budget") {
    const auto mesh = build_mesh(31, 0.0, 1.0);
    const auto model = noisy_model(mesh);
    SchemeConfig cfg;
    cfg.steps = 32;
    cfg.horizon = 1.0;
    const auto traj = run_trajectory(mesh, model, cfg, ControlSignal::zero(), {99}, 0);
    const auto report = energy_ledger(mesh, model, traj);
    REQUIRE(report.rows.size() == 32);
    CHECK(report.residuals_within(cfg.tol_nl));
    for (const auto& row : report.rows)
        CHECK(std::abs(row.residual) <= 10.0 * cfg.tol_nl * (1.0 + row.rhs_norm));
}

TEST_CASE("energy ledger: noise-free run has exactly zero noise work") {
    const auto mesh = build_mesh(31, 0.0, 1.0);
    const auto model = quiet_model(mesh, 4.0);
    SchemeConfig cfg;
    cfg.steps = 16;
    cfg.horizon = 0.5;
    const auto traj = run_trajectory(mesh, model, cfg, ControlSignal::zero(), {7}, 0);
    const auto report = energy_ledger(mesh, model, traj);
    CHECK(report.total_noise_work == 0.0);
    CHECK(report.total_control_work == 0.0);
}

TEST_CASE("energy ledger: p=2 oracle dissipation equals stiffness quadratic form") {
    const auto mesh = build_mesh(63, 0.0, 1.0);
    auto model = quiet_model(mesh, 2.0);
    model.flux.eps_reg = 0.0;
    SchemeConfig cfg;
    cfg.steps = 32;
    cfg.horizon = 1.0;
    cfg.oracle_mode = true;
    const auto traj = run_trajectory(mesh, model, cfg, ControlSignal::zero(), {5}, 0);
    const auto report = energy_ledger(mesh, model, traj);
    const auto stiffness = stiffness_matrix(mesh);
    double oracle = 0.0;
    for (int k = 1; k <= cfg.steps; ++k) {
        const auto ku = stiffness.apply(traj.states[k].v);
        oracle += cfg.kappa() * dot(ku, traj.states[k].v);
    }
    CHECK(report.total_dissipation == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("apriori certificate: deterministic ensemble collapses to path values") {
    const auto mesh = build_mesh(31, 0.0, 1.0);
    const auto model = quiet_model(mesh, 4.0);
    SchemeConfig cfg;
    cfg.steps = 16;
    cfg.horizon = 0.5;
    std::vector<TrajectoryRecord> ensemble;
    for (uint64_t p = 0; p < 4; ++p)
        ensemble.push_back(run_trajectory(mesh, model, cfg, ControlSignal::zero(), {11}, p));
    const auto est = apriori_certificate(mesh, model, ensemble);
    CHECK(est.sup_moment.se == doctest::Approx(0.0));
    CHECK(est.max_norm_sq.mean ==
          doctest::Approx(dot_mass(mesh, ensemble[0].states[1], ensemble[0].states[1]))
              .epsilon(1e-12));
    CHECK(est.interpolation_gap.mean ==
          doctest::Approx((cfg.kappa() / 3.0) * est.sum_increment_sq.mean).epsilon(1e-12));
    CHECK_THROWS_AS(apriori_certificate(mesh, model, {ensemble[0]}), DataError);
}

TEST_CASE("refinement study: bounded quantities, gap halves per kappa halving") {
    const auto mesh = build_mesh(31, 0.0, 1.0);
    // Noise-sustained regime: with a zero datum the a-priori quantities sit
    // at their kappa-stable equilibrium instead of chasing the initial
    // transient, which is the regime the stability statement quantifies.
    auto model = noisy_model(mesh);
    model.u0 = zero_field(mesh);
    SchemeConfig cfg;
    cfg.steps = 32;  // base kappa = 1/64, matching the certification ladder
    cfg.horizon = 0.5;
    const auto report =
        refinement_study(mesh, model, cfg, ControlSignal::zero(), 3, 24, {31337}, 2);
    REQUIRE(report.levels.size() == 3);
    CHECK_FALSE(report.trend_max_norm.significant_upward);
    CHECK_FALSE(report.trend_increment.significant_upward);
    CHECK_FALSE(report.trend_dissipation.significant_upward);
    for (const auto& ratio : report.gap_ratios) {
        CHECK(ratio.mean > 1.7);
        CHECK(ratio.mean < 2.3);
    }
}

TEST_CASE("energy ledger: incomplete record is a data error") {
    const auto mesh = build_mesh(31, 0.0, 1.0);
    const auto model = quiet_model(mesh, 4.0);
    SchemeConfig cfg;
    cfg.steps = 8;
    cfg.horizon = 0.25;
    auto traj = run_trajectory(mesh, model, cfg, ControlSignal::zero(), {3}, 0);
    traj.wiener.pop_back();  // lose one step's noise record
    CHECK_THROWS_AS(energy_ledger(mesh, model, traj), DataError);
}

TEST_CASE("apriori certificate: invariant under path reordering") {
    const auto mesh = build_mesh(31, 0.0, 1.0);
    const auto model = noisy_model(mesh);
    SchemeConfig cfg;
    cfg.steps = 16;
    cfg.horizon = 0.5;
    std::vector<TrajectoryRecord> ensemble;
    for (uint64_t p = 0; p < 6; ++p)
        ensemble.push_back(run_trajectory(mesh, model, cfg, ControlSignal::zero(), {13}, p));
    const auto forward = apriori_certificate(mesh, model, ensemble);
    std::reverse(ensemble.begin(), ensemble.end());
    const auto backward = apriori_certificate(mesh, model, ensemble);
    CHECK(forward.sup_moment.mean == doctest::Approx(backward.sup_moment.mean).epsilon(1e-13));
    CHECK(forward.sum_increment_sq.mean ==
          doctest::Approx(backward.sum_increment_sq.mean).epsilon(1e-13));
    CHECK(forward.dissipation_budget.mean ==
          doctest::Approx(backward.dissipation_budget.mean).epsilon(1e-13));
}

TEST_CASE("upsilon: paper bounds and derivative consistency") {
    // Spot values: Upsilon_t(0) = 0; at r = 2t the profile is linear.
    const UpsilonSpec spec{0.01};
    CHECK(upsilon_eval(spec, 0.0).value == 0.0);
    const auto at_2t = upsilon_eval(spec, 0.02);
    CHECK(at_2t.value <= 0.02);
    CHECK(at_2t.value >= 0.02 - UpsilonSpec::M1 * spec.vartheta);
    CHECK(at_2t.d1 == 1.0);
    CHECK(upsilon_eval(spec, 0.02).d2 == 0.0);
    CHECK(upsilon_eval(spec, -0.02).d1 == -1.0);

    // Randomized sweep of the sandwich and curvature bounds.
    CounterStream stream({271828}, 0, 0, RngChannel::probe);
    int inside_support = 0;
    for (int trial = 0; trial < 100000; ++trial) {
        const double vartheta = std::pow(10.0, -6.0 * stream.uniform());
        const double r = 5.0 * vartheta * (2.0 * stream.uniform() - 1.0);
        const auto eval = upsilon_eval(UpsilonSpec{vartheta}, r);
        CHECK(eval.value <= std::abs(r));
        CHECK(eval.value >= std::abs(r) - UpsilonSpec::M1 * vartheta);
        if (std::abs(r) > vartheta) {
            CHECK(eval.d2 == 0.0);
        } else {
            ++inside_support;
            CHECK(std::abs(eval.d2) <= UpsilonSpec::M2 / vartheta);
            CHECK(eval.d2 >= 0.0);  // convexity of the base profile
        }
    }
    CHECK(inside_support > 1000);
}

TEST_CASE("upsilon integral: exact sandwich against the L1 norm") {
    const auto mesh = build_mesh(31, 0.0, 1.0);
    CounterStream stream({313}, 0, 0, RngChannel::probe);
    for (int trial = 0; trial < 50; ++trial) {
        NodalField f(static_cast<std::size_t>(mesh.node_count));
        for (auto& v : f.v) v = 0.02 * (2.0 * stream.uniform() - 1.0);
        const double l1 = l1_norm_exact(mesh, f);
        for (double vartheta : {1e-2, 1e-3, 1e-4}) {
            const double smoothed = upsilon_integral(mesh, f, vartheta);
            CHECK(smoothed <= l1 + 1e-14);
            CHECK(smoothed >= l1 - UpsilonSpec::M1 * vartheta * mesh.measure() - 1e-14);
        }
    }
}

TEST_CASE("l1 contraction probe: identical data give the zero curve") {
    const auto mesh = build_mesh(31, 0.0, 1.0);
    const auto model = noisy_model(mesh);
    SchemeConfig cfg;
    cfg.steps = 16;
    cfg.horizon = 0.5;
    const auto u0 = interpolate(mesh, [](double x) { return std::sin(M_PI * x); });
    const auto probe = l1_contraction_probe(mesh, model, cfg, u0, u0, {77}, 4);
    CHECK(probe.identically_zero);
    for (double v : probe.l1_mean) CHECK(v == 0.0);
}

TEST_CASE("l1 contraction probe: sandwich and no systematic growth") {
    const auto mesh = build_mesh(31, 0.0, 1.0);
    auto model = noisy_model(mesh);
    model.flux.c_state = 0.0;  // state-independent flux
    SchemeConfig cfg;
    cfg.steps = 32;
    cfg.horizon = 1.0;
    const auto u0_a = interpolate(mesh, [](double x) { return std::sin(M_PI * x); });
    const auto u0_b = interpolate(mesh, [](double x) { return 0.8 * std::sin(M_PI * x); });
    const auto probe = l1_contraction_probe(mesh, model, cfg, u0_a, u0_b, {787}, 16, {1e-2, 1e-3, 1e-4}, 2);
    CHECK_FALSE(probe.identically_zero);
    for (std::size_t t = 0; t < probe.varthetas.size(); ++t) {
        for (std::size_t k = 0; k < probe.l1_mean.size(); ++k) {
            CHECK(probe.smoothed_mean[t][k] <= probe.l1_mean[k] + 1e-14);
            CHECK(probe.smoothed_mean[t][k] >=
                  probe.l1_mean[k] - UpsilonSpec::M1 * probe.varthetas[t] * mesh.measure() - 1e-14);
        }
    }
    CHECK_FALSE(probe.growth_trend.significant_upward);
}

TEST_CASE("dissipativity margin: trivial cases and Poincare-backed positivity") {
    const auto mesh = build_mesh(63, 0.0, 1.0);

    // h = 0, eta = 0, u = 0: the margin is exactly C_hg >= 0.
    auto silent = quiet_model(mesh, 4.0);
    silent.u0 = zero_field(mesh);
    const double chg = chg_constant(mesh, silent);
    CHECK(dissipativity_margin(mesh, silent, zero_field(mesh), 1.0) == doctest::Approx(chg));
    CHECK(chg == 0.0);

    // Margin stays >= 0 for the suggested delta on random fields (noise off).
    for (double p : {2.0, 3.0, 4.0}) {
        auto model = quiet_model(mesh, p);
        const double delta = delta_suggestion(mesh, model);
        CHECK(delta > 0.0);
        CounterStream stream({1618}, 0, 0, RngChannel::probe);
        for (int trial = 0; trial < 1000; ++trial) {
            NodalField u(static_cast<std::size_t>(mesh.node_count));
            const double scale = std::pow(10.0, 2.0 * stream.uniform() - 1.0);
            for (auto& v : u.v) v = scale * (2.0 * stream.uniform() - 1.0);
            CHECK(dissipativity_margin(mesh, model, u, delta) >= -1e-9);
        }
    }

    // Scaling sigma up forces a negative margin on a mid-amplitude field
    // (C_hg also grows with sigma^2, so the field must carry enough mass for
    // the intensity term to win): reported as a failure, never thrown.
    const auto u = interpolate(mesh, [](double x) { return 4.0 * std::sin(M_PI * x); });
    bool found_negative = false;
    for (double sigma : {10.0, 20.0, 40.0, 80.0, 160.0}) {
        auto loud = quiet_model(mesh, 4.0);
        loud.diffusion.sigma = sigma;
        loud.diffusion.n_modes = 32;
        if (dissipativity_margin(mesh, loud, u, delta_suggestion(mesh, loud)) < 0.0)
            found_negative = true;
    }
    CHECK(found_negative);
}
