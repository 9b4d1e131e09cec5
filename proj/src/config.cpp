#include "plevy/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace plevy {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& doc, const json& schema, const std::string& prefix) {
    if (!doc.is_object()) return;
    for (const auto& [key, value] : doc.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!schema.contains(key)) throw ConfigError("unknown config key: " + path);
        if (value.is_object()) reject_unknown_keys(value, schema.at(key), path);
    }
}

template <typename T>
void read(const json& doc, const char* key, T& out) {
    if (doc.contains(key)) doc.at(key).get_to(out);
}

json section(const json& doc, const char* key) {
    return doc.contains(key) ? doc.at(key) : json::object();
}

}  // namespace

json RunConfig::to_json() const {
    json doc;
    doc["mesh"] = {{"nodes", mesh.nodes}, {"a", mesh.a}, {"b", mesh.b}};
    doc["flux"] = {{"kind", flux.kind},       {"p", flux.p},
                   {"c_base", flux.c_base},   {"c_space", flux.c_space},
                   {"c_state", flux.c_state}, {"eps_reg", flux.eps_reg}};
    doc["convection"] = {{"mode", convection.mode},
                         {"b", convection.b},
                         {"saturation", convection.saturation}};
    doc["diffusion"] = {{"mode", diffusion.mode},
                        {"n_modes", diffusion.n_modes},
                        {"sigma", diffusion.sigma},
                        {"decay_a", diffusion.decay_a}};
    doc["jumps"] = {{"g_amp", jumps.g_amp},     {"g_shape", jumps.g_shape},
                    {"lambda_star", jumps.lambda_star}, {"variant", jumps.variant},
                    {"rate", jumps.rate},       {"mark_sd", jumps.mark_sd},
                    {"alpha", jumps.alpha},     {"beta", jumps.beta},
                    {"scale", jumps.scale},     {"eps_jump", jumps.eps_jump}};
    doc["initial"] = {{"kind", initial.kind},
                      {"amplitude", initial.amplitude},
                      {"mode", initial.mode},
                      {"seed", initial.seed}};
    doc["scheme"] = {{"steps", scheme.steps},
                     {"horizon", scheme.horizon},
                     {"tol_nl", scheme.tol_nl},
                     {"max_newton", scheme.max_newton},
                     {"oracle_mode", scheme.oracle_mode}};
    doc["simulate"] = {{"paths", simulate.paths}, {"binary_states", simulate.binary_states}};
    doc["certify"] = {{"levels", certify.levels},
                      {"paths", certify.paths},
                      {"initial", certify.initial}};
    doc["uniqueness"] = {{"paths", uniqueness.paths},
                         {"perturbation", uniqueness.perturbation},
                         {"varthetas", uniqueness.varthetas}};
    doc["control"] = {{"time_blocks", control.time_blocks},
                      {"space_modes", control.space_modes},
                      {"target", control.target},
                      {"target_amplitude", control.target_amplitude},
                      {"psi", control.psi},
                      {"psi_slope", control.psi_slope},
                      {"psi_offset", control.psi_offset},
                      {"psi_clip", control.psi_clip},
                      {"budget", control.budget},
                      {"mc_paths", control.mc_paths},
                      {"initial_step", control.initial_step},
                      {"min_step", control.min_step}};
    doc["ergodic"] = {{"burn_in", ergodic.burn_in}, {"stride", ergodic.stride},
                      {"radii", ergodic.radii},     {"delta", ergodic.delta},
                      {"phi_c", ergodic.phi_c},     {"binary_states", ergodic.binary_states}};
    doc["rng"] = {{"seed", rng.seed}};
    doc["output"] = {{"dir", output.dir}};
    doc["threads"] = threads;
    return doc;
}

RunConfig RunConfig::from_json(const json& doc) {
    RunConfig cfg;
    reject_unknown_keys(doc, cfg.to_json(), "");

    const json m = section(doc, "mesh");
    read(m, "nodes", cfg.mesh.nodes);
    read(m, "a", cfg.mesh.a);
    read(m, "b", cfg.mesh.b);

    const json f = section(doc, "flux");
    read(f, "kind", cfg.flux.kind);
    read(f, "p", cfg.flux.p);
    read(f, "c_base", cfg.flux.c_base);
    read(f, "c_space", cfg.flux.c_space);
    read(f, "c_state", cfg.flux.c_state);
    read(f, "eps_reg", cfg.flux.eps_reg);

    const json c = section(doc, "convection");
    read(c, "mode", cfg.convection.mode);
    read(c, "b", cfg.convection.b);
    read(c, "saturation", cfg.convection.saturation);

    const json d = section(doc, "diffusion");
    read(d, "mode", cfg.diffusion.mode);
    read(d, "n_modes", cfg.diffusion.n_modes);
    read(d, "sigma", cfg.diffusion.sigma);
    read(d, "decay_a", cfg.diffusion.decay_a);

    const json j = section(doc, "jumps");
    read(j, "g_amp", cfg.jumps.g_amp);
    read(j, "g_shape", cfg.jumps.g_shape);
    read(j, "lambda_star", cfg.jumps.lambda_star);
    read(j, "variant", cfg.jumps.variant);
    read(j, "rate", cfg.jumps.rate);
    read(j, "mark_sd", cfg.jumps.mark_sd);
    read(j, "alpha", cfg.jumps.alpha);
    read(j, "beta", cfg.jumps.beta);
    read(j, "scale", cfg.jumps.scale);
    read(j, "eps_jump", cfg.jumps.eps_jump);

    const json i = section(doc, "initial");
    read(i, "kind", cfg.initial.kind);
    read(i, "amplitude", cfg.initial.amplitude);
    read(i, "mode", cfg.initial.mode);
    read(i, "seed", cfg.initial.seed);

    const json s = section(doc, "scheme");
    read(s, "steps", cfg.scheme.steps);
    read(s, "horizon", cfg.scheme.horizon);
    read(s, "tol_nl", cfg.scheme.tol_nl);
    read(s, "max_newton", cfg.scheme.max_newton);
    read(s, "oracle_mode", cfg.scheme.oracle_mode);

    const json sim = section(doc, "simulate");
    read(sim, "paths", cfg.simulate.paths);
    read(sim, "binary_states", cfg.simulate.binary_states);

    const json cert = section(doc, "certify");
    read(cert, "levels", cfg.certify.levels);
    read(cert, "paths", cfg.certify.paths);
    read(cert, "initial", cfg.certify.initial);

    const json uniq = section(doc, "uniqueness");
    read(uniq, "paths", cfg.uniqueness.paths);
    read(uniq, "perturbation", cfg.uniqueness.perturbation);
    read(uniq, "varthetas", cfg.uniqueness.varthetas);

    const json ctl = section(doc, "control");
    read(ctl, "time_blocks", cfg.control.time_blocks);
    read(ctl, "space_modes", cfg.control.space_modes);
    read(ctl, "target", cfg.control.target);
    read(ctl, "target_amplitude", cfg.control.target_amplitude);
    read(ctl, "psi", cfg.control.psi);
    read(ctl, "psi_slope", cfg.control.psi_slope);
    read(ctl, "psi_offset", cfg.control.psi_offset);
    read(ctl, "psi_clip", cfg.control.psi_clip);
    read(ctl, "budget", cfg.control.budget);
    read(ctl, "mc_paths", cfg.control.mc_paths);
    read(ctl, "initial_step", cfg.control.initial_step);
    read(ctl, "min_step", cfg.control.min_step);

    const json erg = section(doc, "ergodic");
    read(erg, "burn_in", cfg.ergodic.burn_in);
    read(erg, "stride", cfg.ergodic.stride);
    read(erg, "radii", cfg.ergodic.radii);
    read(erg, "delta", cfg.ergodic.delta);
    read(erg, "phi_c", cfg.ergodic.phi_c);
    read(erg, "binary_states", cfg.ergodic.binary_states);

    const json r = section(doc, "rng");
    read(r, "seed", cfg.rng.seed);

    const json o = section(doc, "output");
    read(o, "dir", cfg.output.dir);

    read(doc, "threads", cfg.threads);
    return cfg;
}

nlohmann::json RunConfig::science_json() const {
    json doc = to_json();
    doc.erase("threads");
    doc.erase("output");
    return doc;
}

std::string RunConfig::hash() const {
    const std::string dump = science_json().dump();
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

SpatialMesh RunConfig::make_mesh() const {
    return build_mesh(mesh.nodes, mesh.a, mesh.b);
}

NodalField RunConfig::make_initial(const SpatialMesh& m) const {
    if (initial.kind == "zero") return zero_field(m);
    if (initial.kind == "sine") {
        const double amp = initial.amplitude;
        const int mode = initial.mode;
        return interpolate(m, [&](double x) {
            return amp * std::sin(mode * M_PI * m.unit_coord(x));
        });
    }
    if (initial.kind == "bump") {
        const double amp = initial.amplitude;
        return interpolate(m, [&](double x) {
            const double s = m.unit_coord(x);
            return amp * s * (1.0 - s);
        });
    }
    if (initial.kind == "random_h1") {
        CounterStream stream({initial.seed}, 0, 0, RngChannel::initial);
        NodalField f(static_cast<std::size_t>(m.node_count));
        for (int k = 1; k <= 8; ++k) {
            const double coef = initial.amplitude * (2.0 * stream.uniform() - 1.0) / (k * k);
            for (int idx = 0; idx < m.node_count; ++idx)
                f[idx] += coef * std::sin(k * M_PI * m.unit_coord(m.node(idx)));
        }
        return f;
    }
    throw ConfigError("initial.kind must be zero|sine|bump|random_h1, got " + initial.kind);
}

ModelSpec RunConfig::make_model(const SpatialMesh& m) const {
    ModelSpec model;
    if (flux.kind == "power_law")
        model.flux.kind = FluxModel::Kind::power_law;
    else if (flux.kind == "adversarial_negated")
        model.flux.kind = FluxModel::Kind::adversarial_negated;
    else
        throw ConfigError("flux.kind must be power_law|adversarial_negated");
    model.flux.p = flux.p;
    model.flux.c_base = flux.c_base;
    model.flux.c_space = flux.c_space;
    model.flux.c_state = flux.c_state;
    model.flux.eps_reg = flux.eps_reg;

    if (convection.mode == "linear")
        model.convection.mode = ConvectionModel::Mode::linear;
    else if (convection.mode == "saturated")
        model.convection.mode = ConvectionModel::Mode::saturated;
    else
        throw ConfigError("convection.mode must be linear|saturated");
    model.convection.b = convection.b;
    model.convection.saturation = convection.saturation;

    if (diffusion.mode == "linear")
        model.diffusion.mode = WienerDiffusionModel::Mode::linear;
    else if (diffusion.mode == "bounded")
        model.diffusion.mode = WienerDiffusionModel::Mode::bounded;
    else
        throw ConfigError("diffusion.mode must be linear|bounded");
    model.diffusion.n_modes = diffusion.n_modes;
    model.diffusion.sigma = diffusion.sigma;
    model.diffusion.decay_a = diffusion.decay_a;

    model.jumps.g_amp = jumps.g_amp;
    if (jumps.g_shape == "bump")
        model.jumps.g_shape = JumpModel::GShape::bump;
    else if (jumps.g_shape == "constant")
        model.jumps.g_shape = JumpModel::GShape::constant;
    else
        throw ConfigError("jumps.g_shape must be bump|constant");
    model.jumps.lambda_star = jumps.lambda_star;
    if (jumps.variant == "compound_poisson")
        model.jumps.measure = LevyMeasureSpec::compound_poisson(jumps.rate, jumps.mark_sd);
    else if (jumps.variant == "tempered_truncated")
        model.jumps.measure =
            LevyMeasureSpec::tempered_truncated(jumps.alpha, jumps.beta, jumps.scale, jumps.eps_jump);
    else if (jumps.variant == "none")
        model.jumps.measure = LevyMeasureSpec::none();
    else
        throw ConfigError("jumps.variant must be compound_poisson|tempered_truncated|none");

    model.u0 = make_initial(m);
    return model;
}

SchemeConfig RunConfig::make_scheme() const {
    SchemeConfig cfg;
    cfg.steps = scheme.steps;
    cfg.horizon = scheme.horizon;
    cfg.tol_nl = scheme.tol_nl;
    cfg.max_newton = scheme.max_newton;
    cfg.oracle_mode = scheme.oracle_mode;
    return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    json doc = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        try {
            in >> doc;
        } catch (const json::parse_error& err) {
            throw ConfigError(std::string("config parse error: ") + err.what());
        }
    }
    for (const std::string& entry : overrides) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must look like section.key=value: " + entry);
        const std::string dotted = entry.substr(0, eq);
        const std::string value = entry.substr(eq + 1);
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error&) {
            parsed = value;  // bare strings are allowed unquoted
        }
        json* cursor = &doc;
        std::stringstream keys(dotted);
        std::string key;
        std::vector<std::string> parts;
        while (std::getline(keys, key, '.')) parts.push_back(key);
        if (parts.empty()) throw ConfigError("empty override path");
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) cursor = &((*cursor)[parts[i]]);
        (*cursor)[parts.back()] = parsed;
    }
    RunConfig cfg = RunConfig::from_json(doc);
    if (const char* env_seed = std::getenv("PLEVY_SEED")) {
        if (!doc.contains("rng") || !doc.at("rng").contains("seed")) {
            bool overridden = false;
            for (const std::string& entry : overrides)
                if (entry.rfind("rng.seed=", 0) == 0) overridden = true;
            if (!overridden) cfg.rng.seed = std::strtoull(env_seed, nullptr, 10);
        }
    }
    return cfg;
}

}  // namespace plevy
