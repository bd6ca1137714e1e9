#include "doctest.h"

#include "langmix/harness/acceptance.hpp"
#include "langmix/harness/commands.hpp"
#include "langmix/harness/config.hpp"
#include "langmix/harness/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace langmix;
using namespace langmix::harness;
namespace fs = std::filesystem;

namespace {

json base_config() {
    return json::parse(R"({
        "schema": 1, "seed": 7,
        "oracle": {"family": "quadratic", "S": [[1]], "theta_star": [0], "B": [[1]]},
        "stream": {"kind": "iid-gaussian"},
        "sampler": {"lambda": 0.1, "steps": 50, "replicas": 64, "record_every": 10},
        "experiment": {"kind": "couple"}
    })");
}

std::string scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("langmix-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

} // namespace

TEST_CASE("config: unknown keys and the mandatory seed") {
    CHECK_NOTHROW(parse_config(base_config()));

    auto j = base_config();
    j["extra"] = 1;
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = base_config();
    j["sampler"]["lamda"] = 0.1; // typo
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = base_config();
    j["oracle"]["theta0"] = {0};
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = base_config();
    j.erase("seed");
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = base_config();
    j["schema"] = 2;
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = base_config();
    j["stream"] = {{"kind", "linear"}, {"decay", {{"c", 1.0}, {"beta", 1.2}}}}; // beta <= 3/2
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("config: values and overrides") {
    auto j = base_config();
    j["stream"] = {{"kind", "linear"}, {"coeffs", {1.0, 0.5}}, {"seed", 11}};
    auto c = parse_config(j);
    CHECK(c.seed == 7);
    CHECK(c.sampler.seed == 7);
    CHECK(c.sampler.data_seed.value() == 11);
    CHECK(c.stream.spec.coeffs.size() == 2);
    CHECK(*c.sampler.steps == 50);

    // scalar S with a dimension
    j = base_config();
    j["oracle"] = {{"family", "quadratic"}, {"S", 2.0}, {"d", 3}};
    c = parse_config(j);
    CHECK(c.oracle.quadratic.S.rows() == 3);
    CHECK(c.oracle.quadratic.S(1, 1) == 2.0);
    CHECK(c.oracle.quadratic.B.isIdentity());

    Overrides ov;
    ov.lambda = 0.05;
    ov.seed = 99;
    ov.output_dir = "/tmp/x";
    apply_overrides(c, ov);
    CHECK(c.sampler.lambda == 0.05);
    CHECK(c.sampler.seed == 99);
    CHECK(c.echo["sampler"]["lambda"] == 0.05);
    CHECK(c.echo["seed"] == 99);
    CHECK(c.output_dir == "/tmp/x");

    ov = {};
    ov.replicas = 0;
    CHECK_THROWS_AS(apply_overrides(c, ov), ConfigError);
}

TEST_CASE("config: iid-rho needs an iid stream") {
    auto j = base_config();
    j["oracle"] = {{"family", "iid-rho"}, {"d", 1}, {"s", 1.0}, {"rho", 0.5}, {"b", 1.0}};
    CHECK_NOTHROW(build_oracle(parse_config(j)));
    j["stream"] = {{"kind", "linear"}, {"coeffs", {1.0, 0.5}}};
    CHECK_THROWS_AS(build_oracle(parse_config(j)), ConfigError);
}

TEST_CASE("CSV and JSON round trips are exact") {
    const std::string dir = scratch("io");
    CsvTable t;
    t.header = {"n", "v"};
    t.columns = {{0, 1, 2, 3}, {0.1, 1.0 / 3.0, -2.5e17, std::numeric_limits<double>::denorm_min()}};
    write_csv(join_path(dir, "t.csv"), t);
    const auto r = read_csv(join_path(dir, "t.csv"));
    CHECK(r.header == t.header);
    CHECK(r.columns == t.columns);

    Matrix P(3, 2);
    P << 0.1, -1e-300, std::nextafter(1.0, 2.0), 7.0, -0.0, 1.0 / 7.0;
    write_points_csv(join_path(dir, "p.csv"), P);
    CHECK(read_points_csv(join_path(dir, "p.csv")) == P);

    const json j = {{"x", 0.1}, {"y", 1.0 / 3.0}, {"z", {1e-310, 123456789.123456789}}};
    write_json(join_path(dir, "j.json"), j);
    CHECK(read_json(join_path(dir, "j.json")) == j);
    CHECK(fmt17(0.1) == "0.10000000000000001");
}

TEST_CASE("manifest exists as incomplete before results") {
    const std::string dir = scratch("manifest");
    const std::string path = join_path(dir, "manifest.json");
    {
        ManifestWriter m(path, "couple", {{"seed", 1}});
        const auto j = read_json(path);
        CHECK(j["status"] == "incomplete");
        CHECK(j.contains("rng_algorithm"));
        CHECK(j["library_version"] == kVersion);
        m.body()["constants"]["x"] = 1.5;
        m.complete();
    }
    const auto j = read_json(path);
    CHECK(j["status"] == "complete");
    CHECK(j["constants"]["x"] == 1.5);
    CHECK(j["config"]["seed"] == 1);
}

TEST_CASE("couple writes trace, report and manifest") {
    auto cfg = parse_config(base_config());
    cfg.output_dir = scratch("couple");
    const auto r = cmd_couple(cfg);
    CHECK(r.verified);
    const auto t = read_csv(join_path(cfg.output_dir, "trace.csv"));
    CHECK(t.header[0] == "n");
    CHECK(t.header[1] == "mean_sq_dist");
    CHECK(t.columns[0].back() == 50);
    CHECK(read_json(join_path(cfg.output_dir, "manifest.json"))["status"] == "complete");
    CHECK(r.report.contains("example34"));
    CHECK(r.report["envelope"]["pass"] == true);

    cfg.sampler.lambda = 1.0; // lambda_bar = 1
    CHECK_THROWS_AS(cmd_couple(cfg), HypothesisViolation);
}

TEST_CASE("rate sweep: skipped points and the degenerate L2 = 0 case") {
    SamplerConfig c;
    c.replicas = 64;
    c.seed = 3;
    const auto f = rate_sweep(make_scalar_quadratic(1.0, 0.0), LinearProcessSpec::iid(), c, {0.1, 0.05, 1.5}, 50);
    CHECK(f.skipped.size() == 1);
    CHECK(f.points.size() == 2);
    CHECK(f.degenerate);
    for (const auto& p : f.points)
        CHECK(p.distance == 0.0);
    CHECK(sweep_to_json(f)["fitted_slope"].is_null());
}

TEST_CASE("ula-bias closed form") {
    auto cfg = parse_config(base_config());
    cfg.output_dir = scratch("bias");
    cfg.sampler.steps = 20000;
    const auto r = cmd_ula_bias(cfg);
    CHECK(r.report["w2_closed"].get<double>() == doctest::Approx(std::sqrt(2.0 / 1.9) - 1.0).epsilon(1e-12));
    CHECK(r.verified);
    CHECK(r.report["small_lambda_slope"].get<double>() == doctest::Approx(1.0).epsilon(0.01));
    cfg.sampler.lambda = 0.0;
    CHECK(cmd_ula_bias(cfg).report["w2_closed"] == 0.0);
}

TEST_CASE("plan: range errors and the identities") {
    auto cfg = parse_config(base_config());
    cfg.output_dir = scratch("plan");
    cfg.experiment.planner = "dependent";
    cfg.experiment.epsilon = 0.6;
    CHECK_THROWS_AS(cmd_plan(cfg), HypothesisViolation);
    cfg.experiment.epsilon = std::exp(-1.0);
    const auto r = cmd_plan(cfg);
    CHECK(r.report["identity_contraction"].get<double>() >= -1e-12);
    cfg.experiment.planner = "iid";
    cfg.experiment.epsilon = 0.3;
    const auto ri = cmd_plan(cfg);
    CHECK(ri.report["identity_bias"].get<double>() <= 0.15 * (1 + 1e-12));
    CHECK(ri.report["n"].get<double>() > 0);
}

TEST_CASE("constants command uses the exact names") {
    ConstantsArgs a;
    const auto r = cmd_constants(a);
    for (const char* k : {"Cprime", "cprime", "Cunder", "Cflat_stmt", "Cflat_proof", "Cstar", "C0", "c_hat", "c",
                          "c1_kappa", "c2_kappa", "lambda0", "iid_C", "c0", "cbar", "Cbar", "c1", "c2"})
        CHECK_MESSAGE(r.report.contains(k), k);
    CHECK(r.report["a_tilde"] == 0.5);
    CHECK(r.report["lambda"] == 0.5);
}

TEST_CASE("w2 command on sample files") {
    const std::string dir = scratch("w2");
    Matrix A(3, 1), B(3, 1);
    A << 0, 1, 2;
    B << 1, 2, 3;
    write_points_csv(join_path(dir, "a.csv"), A);
    write_points_csv(join_path(dir, "b.csv"), B);
    W2Args w{join_path(dir, "a.csv"), join_path(dir, "b.csv"), "1d"};
    CHECK(cmd_w2(w).report["w2"].get<double>() == doctest::Approx(1.0));
    w.method = "assign";
    CHECK(cmd_w2(w).report["w2"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("mixing profile round trip through JSON") {
    LinearProcessSpec s;
    s.coeffs = {1.0, 0.5};
    const auto p = profile_build(s, 2, 1, 8, 1);
    const auto a = mixing_inputs_from_profile(p);
    const auto b = mixing_inputs_from_json(json::parse(profile_to_json(p).dump()));
    CHECK(a.script_M == b.script_M);
    CHECK(a.C32 == b.C32);
    CHECK(a.C21 == b.C21);
}

TEST_CASE("tampering with a~ fails the constants check") {
    CHECK(run_check("constants", Level::quick, 1).pass);
    {
        ScopedATildeOverride bad([](double a, double L1) { return a * L1 / (a + L1) * 1.01; });
        CHECK_FALSE(run_check("constants", Level::quick, 1).pass);
    }
    CHECK(run_check("constants", Level::quick, 1).pass);
}

TEST_CASE("verify subset is deterministic") {
    VerifyOptions o;
    o.only = {"constants", "8", "10"};
    const auto a = run_verify(o).dump(), b = run_verify(o).dump();
    CHECK(a == b);
    CHECK_THROWS_AS(run_check("nope", Level::quick, 1), ConfigError);
    CHECK_THROWS_AS(parse_level("medium"), ConfigError);
}
