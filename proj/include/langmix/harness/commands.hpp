#pragma once

// One function per CLI subcommand. Each returns the JSON report it wrote;
// `verified` is false when a checked inequality failed (exit code 4).

#include "langmix/constants.hpp"
#include "langmix/harness/config.hpp"
#include "langmix/mixing.hpp"

#include <optional>
#include <string>

namespace langmix::harness {

struct CommandResult {
    json report;
    bool verified = true;
};

CommandResult cmd_sample(const ExperimentConfig& cfg);
CommandResult cmd_couple(const ExperimentConfig& cfg);
CommandResult cmd_rate_sweep(const ExperimentConfig& cfg);
CommandResult cmd_moments(const ExperimentConfig& cfg);
CommandResult cmd_ula_bias(const ExperimentConfig& cfg);
CommandResult cmd_plan(const ExperimentConfig& cfg);

struct MixingArgs {
    std::size_t tau_max = 64;
    int r = 2;
    int s = 1;
    std::string out;
};
CommandResult cmd_mixing(const ExperimentConfig& cfg, const MixingArgs& a);

struct ConstantsArgs {
    double a = 1.0, l1 = 1.0, l2 = 1.0;
    int d = 1;
    int m = 1; // data dimension for the default Gaussian mixing profile
    int p = 4;
    double h_star = 0.0;
    double theta_star_norm = 0.0;
    double theta0_sq_dev = 0.0;
    std::optional<double> lambda; // for c(lambda); default lambda_bar / 2
    double epsilon = 0.25;
    double kappa = 1.0;
    double rho = 0.0;
    std::string mixing_file; // from `langmix mixing`
    std::string out;
};
CommandResult cmd_constants(const ConstantsArgs& a);

struct W2Args {
    std::string a, b;
    std::string method = "1d"; // 1d | assign
};
CommandResult cmd_w2(const W2Args& a);

// ---- shared pieces, also used by the acceptance suite ----

// MixingInputs from the analytic n = 0 profile of a stacked linear process
MixingInputs mixing_inputs_from_profile(const MixingProfile& p);
MixingInputs analytic_mixing_inputs(const LinearProcessSpec& spec, int m);
MixingInputs mixing_inputs_from_json(const json& j);
json profile_to_json(const MixingProfile& p);
json chain_to_json(const ChainReport& r);
json dependent_plan_to_json(const DependentPlan& p);
json iid_plan_to_json(const IidPlan& p);

ChainInputs chain_inputs(const GradientOracle& o, const LinearProcessSpec& stream, const InitialLaw& theta0);
// iid planner inputs for the quadratic (rho = 0) and iid-rho families
IidInputs iid_inputs(const OracleBundle& ob, const InitialLaw& theta0);

// ULA and SGLD drift / sup-moment checks plus the iid second-moment bound
CommandResult moments_report(const OracleBundle& ob, const LinearProcessSpec& stream, SamplerConfig c);

// H(theta, x) = theta + x with d = m = 1
bool is_example34(const GradientOracle& o);

struct SweepPoint {
    double lambda = 0.0;
    std::size_t steps = 0;
    std::size_t window_start = 0;
    double msd = 0.0; // window mean over replicas
    double msd_se = 0.0;
    double distance = 0.0;
    double plateau_change = 0.0; // (second half - first half) / window mean
    double plateau_tolerance = 0.0; // max(1%, 3 SE of the change), relative
    bool plateaued = false;
    std::optional<double> oracle_msd; // example34_variance at the window midpoint
    std::vector<double> replica_msd;
};

struct SweepFit {
    std::vector<SweepPoint> points;
    std::vector<std::string> skipped;
    bool degenerate = false;
    double slope = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
};

SweepFit rate_sweep(const GradientOracle& o, const LinearProcessSpec& stream, const SamplerConfig& base,
                    const std::vector<double>& lambdas, std::size_t bootstrap);
json sweep_to_json(const SweepFit& f);

} // namespace langmix::harness
