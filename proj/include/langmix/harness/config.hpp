#pragma once

// Experiment configuration: one JSON file, schema version 1.
//
//   { "schema": 1, "seed": 42,
//     "oracle":  { "family": "quadratic", "S": [[1]], "theta_star": [0], "B": [[1]] }
//              | { "family": "iid-rho", "d": 1, "s": 1, "rho": 0, "b": 1, "theta_star": [0] },
//     "stream":  { "kind": "linear", "coeffs": [1, 0.5], "decay": {"c": 1, "beta": 2}, "seed": 7 }
//              | { "kind": "iid-gaussian", "seed": 7 },
//     "sampler": { "lambda": 0.1, "steps": 1000, "replicas": 256, "record_every": 10,
//                  "moment_orders": [1, 2], "theta0": { "mean": [0], "stddev": 0 } },
//     "experiment": { "kind": "couple", ... kind-specific keys ... },
//     "output": { "dir": "runs/demo" } }
//
// Unknown keys are rejected at every level. Command-line flags override the
// file; the file overrides built-in defaults.

#include "langmix/model.hpp"
#include "langmix/samplers.hpp"
#include "langmix/streams.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace langmix::harness {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct OracleConfig {
    std::string family = "quadratic";
    QuadraticSpec quadratic;
    IidRhoSpec iid;
};

struct StreamConfig {
    std::string kind = "iid-gaussian";
    LinearProcessSpec spec;
    std::optional<std::uint64_t> seed;
};

struct ExperimentParams {
    std::string kind = "couple";
    std::vector<double> lambdas; // rate-sweep grid
    std::size_t bootstrap = 1000;
    double epsilon = 0.3;
    double kappa = 1.0;
    std::string planner = "iid"; // iid | dependent
    bool execute = false;
    std::string chain = "sgld"; // sample: sgld | ula
    std::size_t tau_max = 64;
    std::string level = "quick";
};

struct ExperimentConfig {
    int schema = kSchemaVersion;
    std::uint64_t seed = 0;
    OracleConfig oracle;
    StreamConfig stream;
    SamplerConfig sampler;
    ExperimentParams experiment;
    std::string output_dir = ".";
    json echo; // the parsed file, after overrides
};

// Throws ConfigError on schema problems (unknown key, wrong type, missing seed).
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);

struct Overrides {
    std::optional<double> lambda;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> replicas;
    std::optional<std::size_t> record_every;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

struct OracleBundle {
    GradientOracle oracle;
    std::optional<IidOracle> iid;
};

OracleBundle build_oracle(const ExperimentConfig& cfg);

json stream_to_json(const LinearProcessSpec& spec);
json oracle_constants_json(const GradientOracle& o);

} // namespace langmix::harness
