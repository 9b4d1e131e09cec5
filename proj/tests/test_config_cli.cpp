#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "plevy/config.hpp"
#include "plevy/io.hpp"

using namespace plevy;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("config: defaults round-trip and unknown keys rejected") {
    const RunConfig defaults;
    const auto doc = defaults.to_json();
    const RunConfig parsed = RunConfig::from_json(doc);
    CHECK(parsed.to_json().dump() == doc.dump());

    auto bad = doc;
    bad["scheme"]["stepz"] = 7;
    CHECK_THROWS_WITH_AS(RunConfig::from_json(bad), "unknown config key: scheme.stepz",
                         ConfigError);
    nlohmann::json top = {{"bogus", 1}};
    CHECK_THROWS_AS(RunConfig::from_json(top), ConfigError);
}

TEST_CASE("config: dotted overrides, seed env, hash semantics") {
    const RunConfig base = load_config("", {});
    const RunConfig overridden =
        load_config("", {"scheme.steps=128", "flux.p=3.0", "initial.kind=bump", "rng.seed=9"});
    CHECK(overridden.scheme.steps == 128);
    CHECK(overridden.flux.p == 3.0);
    CHECK(overridden.initial.kind == "bump");
    CHECK(overridden.rng.seed == 9);
    CHECK_THROWS_AS(load_config("", {"not-an-override"}), ConfigError);

    // Hash tracks science keys only.
    CHECK(base.hash() != overridden.hash());
    const RunConfig threads_changed = load_config("", {"threads=1", "output.dir=elsewhere"});
    CHECK(base.hash() == threads_changed.hash());

    // Environment variable provides the default seed; explicit config wins.
    setenv("PLEVY_SEED", "777", 1);
    CHECK(load_config("", {}).rng.seed == 777);
    CHECK(load_config("", {"rng.seed=5"}).rng.seed == 5);
    unsetenv("PLEVY_SEED");
}

TEST_CASE("config: initial datum kinds") {
    RunConfig cfg;
    const auto mesh = cfg.make_mesh();

    cfg.initial.kind = "zero";
    for (double v : cfg.make_initial(mesh).v) CHECK(v == 0.0);

    cfg.initial.kind = "sine";
    cfg.initial.amplitude = 2.0;
    const auto sine = cfg.make_initial(mesh);
    CHECK(sine[31] == doctest::Approx(2.0).epsilon(1e-12));  // midpoint of 63 nodes

    cfg.initial.kind = "bump";
    cfg.initial.amplitude = 1.0;
    const auto bump = cfg.make_initial(mesh);
    CHECK(bump[31] == doctest::Approx(0.25).epsilon(1e-12));

    cfg.initial.kind = "random_h1";
    const auto rough = cfg.make_initial(mesh);
    CHECK(rough.finite());
    CHECK(grad_lp_norm(mesh, rough, 2.0) < 50.0);  // low-pass by construction

    cfg.initial.kind = "nope";
    CHECK_THROWS_AS(cfg.make_initial(mesh), ConfigError);
}

TEST_CASE("io: binary state round trip and csv headers") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "plevy_io_test";
    fs::create_directories(dir);

    const auto mesh = build_mesh(15, 0.0, 1.0);
    std::vector<NodalField> states;
    for (int k = 0; k < 5; ++k)
        states.push_back(interpolate(mesh, [k](double x) { return std::sin((k + 1) * x); }));

    OutputMeta meta{artifact_version, "deadbeef", 7};
    const std::string bin = (dir / "states.bin").string();
    write_state_binary(bin, meta, states);
    const auto loaded = read_state_binary(bin, mesh.node_count);
    REQUIRE(loaded.size() == states.size());
    for (std::size_t k = 0; k < states.size(); ++k)
        for (std::size_t i = 0; i < states[k].size(); ++i)
            CHECK(loaded[k][i] == states[k][i]);  // bitwise
    CHECK(fs::exists(bin + ".meta.json"));

    const std::string csv_path = (dir / "table.csv").string();
    {
        CsvWriter csv(csv_path, meta, {"a", "b"});
        csv.row({1.0, 0.1});
        CHECK_THROWS_AS(csv.row({1.0}), DataError);
    }
    const std::string content = slurp(csv_path);
    CHECK(content.find("# version: ") != std::string::npos);
    CHECK(content.find("# config_hash: deadbeef") != std::string::npos);
    CHECK(content.find("# seed: 7") != std::string::npos);
    CHECK(content.find("a,b\n") != std::string::npos);
    CHECK(content.find("0.10000000000000001") != std::string::npos);  // %.17g round trip

    fs::remove_all(dir);
}

#ifdef PLEVY_BIN
TEST_CASE("cli: exit codes and deterministic outputs") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "plevy_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string bin = PLEVY_BIN;
    const std::string base = " --set scheme.steps=8 --set simulate.paths=2 --seed 7 ";

    const auto run = [&](const std::string& args) {
        const std::string cmd = bin + " " + args + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    CHECK(run("simulate" + base + "--output " + (dir / "a").string()) == 0);
    CHECK(run("simulate" + base + "--output " + (dir / "b").string() + " --threads 1") == 0);
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename().string();
        CHECK(slurp(entry.path().string()) == slurp((dir / "b" / name).string()));
    }

    CHECK(run("simulate --set bogus.key=1 --output " + (dir / "c").string()) == 2);
    CHECK(run("check-model --output " + (dir / "d").string()) == 0);
    CHECK(run("check-model --set jumps.lambda_star=1.2 --output " + (dir / "e").string()) == 2);
    // Stepping the adversarial flux is a configuration misuse.
    CHECK(run("simulate" + base + "--set flux.kind=adversarial_negated --output " +
              (dir / "f").string()) == 2);
    // A zero iteration cap cannot satisfy the residual contract: exit 3.
    CHECK(run("simulate" + base + "--set scheme.max_newton=0 --output " +
              (dir / "g").string()) == 3);

    fs::remove_all(dir);
}
#endif
