// plevy: numerical laboratory for a p-Laplacian SPDE with multiplicative
// Wiener and compensated Poisson noise.
//
// Subcommands:
//   check-model  validate the coefficient assumptions, emit the report
//   simulate     trajectories with per-step energy ledgers
//   certify      a-priori bound certification across kappa refinements
//   uniqueness   common-noise L1 contraction probe
//   control-opt  derivative-free cost minimization over a control family
//   invariant    long-run time-averaged measure, occupation profile
//
// Exit codes: 0 success, 2 configuration/validation error, 3 solver or
// numeric error, 4 partial statistical run.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "plevy/config.hpp"
#include "plevy/control.hpp"
#include "plevy/diagnostics.hpp"
#include "plevy/ergodic.hpp"
#include "plevy/io.hpp"
#include "plevy/parallel.hpp"

using namespace plevy;

namespace {

struct CliState {
    RunConfig cfg;
    OutputMeta meta;
    std::string out_dir;
    int threads = 1;

    std::string path_for(const std::string& name) const { return out_dir + "/" + name; }
};

CliState prepare(const std::string& config_path, std::vector<std::string> overrides,
                 const std::optional<uint64_t>& seed, const std::optional<int>& threads,
                 const std::optional<std::string>& out_dir,
                 const std::optional<int>& sim_paths) {
    if (seed) overrides.push_back("rng.seed=" + std::to_string(*seed));
    if (threads) overrides.push_back("threads=" + std::to_string(*threads));
    if (out_dir) overrides.push_back("output.dir=" + *out_dir);
    if (sim_paths) overrides.push_back("simulate.paths=" + std::to_string(*sim_paths));

    CliState state;
    state.cfg = load_config(config_path, overrides);
    state.threads = clamp_threads(state.cfg.threads);
    state.out_dir = state.cfg.output.dir;
    std::filesystem::create_directories(state.out_dir);
    state.meta.version = artifact_version;
    state.meta.config_hash = state.cfg.hash();
    state.meta.seed = state.cfg.rng.seed;

    // Embed the resolved science config next to the outputs.
    std::ofstream cfg_out(state.path_for("resolved_config.json"));
    cfg_out << state.cfg.science_json().dump(2) << "\n";
    return state;
}

int run_check_model(const CliState& state) {
    const auto mesh = state.cfg.make_mesh();
    const auto model = state.cfg.make_model(mesh);
    const auto report = validate_assumptions(mesh, model, 5000);

    nlohmann::json payload;
    payload["checks"] = nlohmann::json::array();
    for (const auto& check : report.checks)
        payload["checks"].push_back(
            {{"name", check.name}, {"pass", check.pass}, {"detail", check.detail}});
    payload["constants"] = {{"C1", report.C1},
                            {"C2", report.C2},
                            {"C3", report.C3},
                            {"C4", report.C4},
                            {"C5", report.C5},
                            {"K1_eff", report.K1_eff},
                            {"K2", report.K2},
                            {"K3", report.K3},
                            {"L_sigma", report.L_sigma},
                            {"c_gamma", report.c_gamma},
                            {"C_hg", report.C_hg},
                            {"levy_total_mass", report.levy_total_mass},
                            {"truncated_small_jump_mass", report.truncated_small_jump_mass},
                            {"c5_tail_fraction", report.c5_tail_fraction},
                            {"delta_suggestion", delta_suggestion(mesh, model)}};
    payload["all_pass"] = report.all_pass();
    write_json_report(state.path_for("assumption_report.json"), state.meta, payload);
    std::cout << payload.dump(2) << "\n";
    if (!report.all_pass()) {
        std::cerr << "check-model: one or more assumption checks failed\n";
        return 2;
    }
    return 0;
}

int run_simulate(const CliState& state) {
    const auto mesh = state.cfg.make_mesh();
    const auto model = state.cfg.make_model(mesh);
    const auto scheme = state.cfg.make_scheme();
    scheme.validate(model);
    const int paths = state.cfg.simulate.paths;

    std::vector<TrajectoryRecord> records(static_cast<std::size_t>(paths));
    parallel_for(paths, state.threads, [&](int path) {
        records[path] = run_trajectory(mesh, model, scheme, ControlSignal::zero(),
                                       {state.cfg.rng.seed}, static_cast<uint64_t>(path));
    });

    nlohmann::json summary = nlohmann::json::array();
    for (int path = 0; path < paths; ++path) {
        const auto& traj = records[path];
        CsvWriter csv(state.path_for("traj_p" + std::to_string(path) + ".csv"), state.meta,
                      {"step", "time", "l2_norm", "grad_lp_norm_p", "increment_l2",
                       "newton_iters", "residual"});
        csv.row({0.0, 0.0, l2_norm(mesh, traj.states[0]),
                 grad_lp_norm(mesh, traj.states[0], model.flux.p), 0.0, 0.0, 0.0});
        for (int k = 0; k < scheme.steps; ++k) {
            NodalField diff = traj.states[k + 1];
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= traj.states[k][i];
            csv.row({static_cast<double>(k + 1), (k + 1) * scheme.kappa(),
                     l2_norm(mesh, traj.states[k + 1]),
                     grad_lp_norm(mesh, traj.states[k + 1], model.flux.p), l2_norm(mesh, diff),
                     static_cast<double>(traj.stats[k].newton_iters),
                     traj.stats[k].residual_norm});
        }
        if (state.cfg.simulate.binary_states)
            write_state_binary(state.path_for("states_p" + std::to_string(path) + ".bin"),
                               state.meta, traj.states);

        const auto ledger = energy_ledger(mesh, model, traj);
        summary.push_back({{"path", path},
                           {"max_norm_sq", ledger.max_norm_sq},
                           {"total_dissipation", ledger.total_dissipation},
                           {"total_increment_sq", ledger.total_increment_sq},
                           {"total_noise_work", ledger.total_noise_work},
                           {"energy_identity_ok", ledger.residuals_within(scheme.tol_nl)}});
    }
    write_json_report(state.path_for("simulate_summary.json"), state.meta, summary);
    std::cout << "simulate: " << paths << " paths, " << scheme.steps << " steps -> "
              << state.out_dir << "\n";
    return 0;
}

int run_certify(const CliState& state) {
    const auto mesh = state.cfg.make_mesh();
    auto model = state.cfg.make_model(mesh);
    if (state.cfg.certify.initial == "zero")
        model.u0 = zero_field(mesh);
    else if (state.cfg.certify.initial != "config")
        throw ConfigError("certify.initial must be zero|config");
    const auto scheme = state.cfg.make_scheme();
    scheme.validate(model);

    const auto report =
        refinement_study(mesh, model, scheme, ControlSignal::zero(), state.cfg.certify.levels,
                         state.cfg.certify.paths, {state.cfg.rng.seed}, state.threads);

    CsvWriter csv(state.path_for("certify_levels.csv"), state.meta,
                  {"steps", "kappa", "sup_moment", "sup_moment_se", "sum_increment_sq",
                   "sum_increment_sq_se", "dissipation_budget", "dissipation_budget_se",
                   "interpolation_gap", "interpolation_gap_se"});
    for (const auto& level : report.levels)
        csv.row({static_cast<double>(level.steps), level.kappa, level.estimate.sup_moment.mean,
                 level.estimate.sup_moment.se, level.estimate.sum_increment_sq.mean,
                 level.estimate.sum_increment_sq.se, level.estimate.dissipation_budget.mean,
                 level.estimate.dissipation_budget.se, level.estimate.interpolation_gap.mean,
                 level.estimate.interpolation_gap.se});

    nlohmann::json payload;
    const auto trend_json = [](const LevelSlopeTest& t) {
        return nlohmann::json{{"slope", t.slope},
                              {"se", t.se},
                              {"tstat", t.tstat},
                              {"significant_upward", t.significant_upward}};
    };
    payload["trend_sup_moment"] = trend_json(report.trend_max_norm);
    payload["trend_sum_increment_sq"] = trend_json(report.trend_increment);
    payload["trend_dissipation_budget"] = trend_json(report.trend_dissipation);
    payload["gap_ratios"] = nlohmann::json::array();
    for (const auto& ratio : report.gap_ratios)
        payload["gap_ratios"].push_back({{"ratio", ratio.mean}, {"se", ratio.se}});
    write_json_report(state.path_for("certify.json"), state.meta, payload);

    std::cout << "certify: trends (sup, inc, dis) t = " << report.trend_max_norm.tstat << ", "
              << report.trend_increment.tstat << ", " << report.trend_dissipation.tstat << "\n";
    for (const auto& ratio : report.gap_ratios)
        std::cout << "certify: gap ratio " << ratio.mean << " +- " << ratio.se << "\n";
    return 0;
}

int run_uniqueness(const CliState& state) {
    const auto mesh = state.cfg.make_mesh();
    const auto model = state.cfg.make_model(mesh);
    const auto scheme = state.cfg.make_scheme();
    scheme.validate(model);

    // Identical initial data must produce the exactly-zero curve.
    const auto zero_probe =
        l1_contraction_probe(mesh, model, scheme, model.u0, model.u0, {state.cfg.rng.seed}, 2,
                             state.cfg.uniqueness.varthetas, state.threads);

    NodalField perturbed = model.u0;
    for (int i = 0; i < mesh.node_count; ++i)
        perturbed[i] += state.cfg.uniqueness.perturbation *
                        std::sin(2.0 * M_PI * mesh.unit_coord(mesh.node(i)));
    const auto probe =
        l1_contraction_probe(mesh, model, scheme, model.u0, perturbed, {state.cfg.rng.seed},
                             state.cfg.uniqueness.paths, state.cfg.uniqueness.varthetas,
                             state.threads);

    std::vector<std::string> columns = {"time", "l1_mean"};
    for (double vartheta : probe.varthetas)
        columns.push_back("upsilon_" + format_double(vartheta));
    CsvWriter csv(state.path_for("uniqueness_curves.csv"), state.meta, columns);
    for (std::size_t k = 0; k < probe.times.size(); ++k) {
        std::vector<double> row = {probe.times[k], probe.l1_mean[k]};
        for (std::size_t t = 0; t < probe.varthetas.size(); ++t)
            row.push_back(probe.smoothed_mean[t][k]);
        csv.row(row);
    }

    bool sandwich_ok = true;
    for (std::size_t t = 0; t < probe.varthetas.size(); ++t)
        for (std::size_t k = 0; k < probe.times.size(); ++k) {
            if (probe.smoothed_mean[t][k] > probe.l1_mean[k] + 1e-14) sandwich_ok = false;
            if (probe.smoothed_mean[t][k] <
                probe.l1_mean[k] - UpsilonSpec::M1 * probe.varthetas[t] * mesh.measure() - 1e-14)
                sandwich_ok = false;
        }

    nlohmann::json payload;
    payload["identical_data_zero_curve"] = zero_probe.identically_zero;
    payload["sandwich_ok"] = sandwich_ok;
    payload["growth_trend"] = {{"mean_slope", probe.growth_trend.mean_slope},
                               {"se", probe.growth_trend.se},
                               {"tstat", probe.growth_trend.tstat},
                               {"significant_upward", probe.growth_trend.significant_upward}};
    payload["paths"] = probe.paths;
    write_json_report(state.path_for("uniqueness.json"), state.meta, payload);

    std::cout << "uniqueness: zero-curve " << (zero_probe.identically_zero ? "exact" : "VIOLATED")
              << ", sandwich " << (sandwich_ok ? "ok" : "VIOLATED") << "\n";
    return (zero_probe.identically_zero && sandwich_ok) ? 0 : 2;
}

int run_control_opt(const CliState& state) {
    const auto mesh = state.cfg.make_mesh();
    const auto model = state.cfg.make_model(mesh);
    const auto scheme = state.cfg.make_scheme();
    scheme.validate(model);

    const auto family = ControlFamily::separable(mesh, scheme.steps, scheme.horizon,
                                                 state.cfg.control.time_blocks,
                                                 state.cfg.control.space_modes);
    CostSpec spec;
    if (state.cfg.control.target == "decayed") {
        const auto reference = run_trajectory(mesh, model, scheme, ControlSignal::zero(),
                                              {state.cfg.rng.seed}, 999999);
        spec.target = reference.states;
    } else if (state.cfg.control.target == "profile") {
        const double amp = state.cfg.control.target_amplitude;
        spec.target.assign(static_cast<std::size_t>(scheme.steps) + 1,
                           interpolate(mesh, [&](double x) {
                               return amp * std::sin(M_PI * mesh.unit_coord(x));
                           }));
    } else {
        throw ConfigError("control.target must be decayed|profile");
    }
    if (state.cfg.control.psi == "affine" || state.cfg.control.psi == "clipped_linear") {
        spec.payoff.kind = state.cfg.control.psi == "affine"
                               ? TerminalPayoff::Kind::affine
                               : TerminalPayoff::Kind::clipped_linear;
        spec.payoff.slope = state.cfg.control.psi_slope;
        spec.payoff.offset = state.cfg.control.psi_offset;
        spec.payoff.clip = state.cfg.control.psi_clip;
        spec.payoff.anchor = spec.target.back();
    } else if (state.cfg.control.psi != "none") {
        throw ConfigError("control.psi must be none|affine|clipped_linear");
    }

    OptimizerConfig opt;
    opt.budget = state.cfg.control.budget;
    opt.mc_paths = state.cfg.control.mc_paths;
    opt.initial_step = state.cfg.control.initial_step;
    opt.min_step = state.cfg.control.min_step;
    opt.threads = state.threads;

    const auto result =
        optimize_control(mesh, model, scheme, family, spec, {state.cfg.rng.seed}, opt);

    std::vector<std::string> columns = {"evaluation", "cost", "se"};
    for (int j = 0; j < family.dimension(); ++j) columns.push_back("theta_" + std::to_string(j));
    CsvWriter csv(state.path_for("control_trace.csv"), state.meta, columns);
    for (const auto& point : result.incumbents) {
        std::vector<double> row = {static_cast<double>(point.evaluation), point.cost, point.se};
        row.insert(row.end(), point.theta.begin(), point.theta.end());
        csv.row(row);
    }

    nlohmann::json payload;
    payload["theta"] = result.theta;
    payload["cost"] = result.cost;
    payload["evaluations"] = result.evaluations;
    payload["budget_exhausted"] = result.budget_exhausted;
    payload["failures"] = result.failures;
    payload["control_norm"] = std::sqrt(family.penalty(result.theta));
    write_json_report(state.path_for("control_opt.json"), state.meta, payload);

    std::cout << "control-opt: cost " << result.cost << " after " << result.evaluations
              << " evaluations\n";
    return result.failures > 0 ? 4 : 0;
}

int run_invariant(const CliState& state) {
    const auto mesh = state.cfg.make_mesh();
    const auto model = state.cfg.make_model(mesh);
    const auto scheme = state.cfg.make_scheme();
    scheme.validate(model);

    const double delta = state.cfg.ergodic.delta > 0.0
                             ? state.cfg.ergodic.delta
                             : 0.5 * delta_suggestion(mesh, model);
    TimeAverageOptions options;
    options.burn_in_time = state.cfg.ergodic.burn_in;
    options.stride = state.cfg.ergodic.stride;
    options.margin_delta = delta;

    const auto result =
        time_average_measure(mesh, model, scheme, {state.cfg.rng.seed}, 0, options);
    const auto& measure = result.measure;

    TestFunctional phi_exp;
    phi_exp.kind = TestFunctional::Kind::bounded_exponential;
    phi_exp.c = state.cfg.ergodic.phi_c;
    TestFunctional phi_lin;
    phi_lin.kind = TestFunctional::Kind::bounded_linear;
    phi_lin.weight = interpolate(mesh, [&](double x) {
        return std::sin(M_PI * mesh.unit_coord(x));
    });

    nlohmann::json payload;
    payload["snapshots"] = measure.snapshots.size();
    payload["partial"] = measure.partial;
    payload["delta"] = delta;
    payload["min_margin"] = result.min_margin;
    if (measure.snapshots.size() >= 2) {
        const auto avg_exp = test_function_average(mesh, measure, phi_exp);
        const auto avg_lin = test_function_average(mesh, measure, phi_lin);
        payload["phi_exponential"] = {{"average", avg_exp.final_average},
                                      {"cauchy_gap", avg_exp.cauchy_gap},
                                      {"batch_se", avg_exp.batch_se}};
        payload["phi_linear"] = {{"average", avg_lin.final_average},
                                 {"cauchy_gap", avg_lin.cauchy_gap},
                                 {"batch_se", avg_lin.batch_se}};

        CsvWriter averages(state.path_for("invariant_averages.csv"), state.meta,
                           {"snapshot", "time", "running_phi_exp", "running_phi_lin", "l2_norm"});
        for (std::size_t m = 0; m < measure.snapshots.size(); ++m)
            averages.row({static_cast<double>(m), measure.times[m], avg_exp.running[m],
                          avg_lin.running[m], l2_norm(mesh, measure.snapshots[m])});

        const auto rows = boundedness_profile(mesh, model, measure, state.cfg.ergodic.radii,
                                              delta, scheme.horizon);
        CsvWriter occupation(state.path_for("invariant_occupation.csv"), state.meta,
                             {"radius", "fraction", "fraction_se", "analytic_bound"});
        payload["occupation"] = nlohmann::json::array();
        for (const auto& row : rows) {
            occupation.row({row.radius, row.fraction, row.fraction_se, row.analytic_bound});
            payload["occupation"].push_back({{"radius", row.radius},
                                             {"fraction", row.fraction},
                                             {"fraction_se", row.fraction_se},
                                             {"analytic_bound", row.analytic_bound}});
        }
    }
    if (state.cfg.ergodic.binary_states)
        write_state_binary(state.path_for("invariant_states.bin"), state.meta, measure.snapshots);
    write_json_report(state.path_for("invariant.json"), state.meta, payload);

    std::cout << "invariant: " << measure.snapshots.size() << " snapshots, min margin "
              << result.min_margin << (measure.partial ? " (PARTIAL)" : "") << "\n";
    return measure.partial ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plevy: p-Laplacian SPDE laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--set", overrides, "override: section.key=value (repeatable)");
    app.add_option("--seed", seed, "master RNG seed");
    app.add_option("--threads", threads, "worker threads (clamped to logical cores)");
    app.add_option("--output", out_dir, "output directory");

    auto* check = app.add_subcommand("check-model", "validate coefficient assumptions");
    auto* simulate = app.add_subcommand("simulate", "run trajectories with energy ledgers");
    std::optional<int> sim_paths;
    simulate->add_option("--paths", sim_paths, "number of Monte Carlo paths");
    auto* certify = app.add_subcommand("certify", "a-priori bound certification");
    auto* uniqueness = app.add_subcommand("uniqueness", "L1 contraction probe");
    auto* control_opt = app.add_subcommand("control-opt", "cost functional minimization");
    auto* invariant = app.add_subcommand("invariant", "invariant measure estimation");

    CLI11_PARSE(app, argc, argv);

    try {
        const CliState state = prepare(config_path, overrides, seed, threads, out_dir, sim_paths);
        if (*check) return run_check_model(state);
        if (*simulate) return run_simulate(state);
        if (*certify) return run_certify(state);
        if (*uniqueness) return run_uniqueness(state);
        if (*control_opt) return run_control_opt(state);
        if (*invariant) return run_invariant(state);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const ConfigError& err) {
        std::cerr << "configuration error: " << err.what() << "\n";
        return 2;
    } catch (const ValidationError& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return 2;
    } catch (const DataError& err) {
        std::cerr << "data error: " << err.what() << "\n";
        return 2;
    } catch (const SolverError& err) {
        std::cerr << "solver error: " << err.what() << "\n";
        return 3;
    } catch (const NumericError& err) {
        std::cerr << "numeric error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    }
}
