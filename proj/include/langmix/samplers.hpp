#pragma once

// ULA and SGLD recursions, synchronous coupling and the restarted block
// process used to split the coupling error.
//
// Replicas run in fixed blocks of 64. Each replica draws its noise, data and
// initial point from separate derived seeds, and block partial sums are
// reduced in block order, so statistics do not depend on the worker count.

#include "langmix/constants.hpp"
#include "langmix/metrics.hpp"
#include "langmix/model.hpp"
#include "langmix/streams.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace langmix {

inline constexpr std::size_t kReplicaBlock = 64;

// isotropic Gaussian N(mean, stddev^2 I); stddev = 0 is a point mass, an
// empty mean stands for theta*
struct InitialLaw {
    Vector mean;
    double stddev = 0.0;

    Vector resolved_mean(const Vector& theta_star) const;
    // E|theta0 - theta*|^2
    double sq_dev(const Vector& theta_star) const;
    // E|theta0 - theta*|^{2p}, exact for integer p >= 0
    double moment(const Vector& theta_star, int p) const;
    // |theta0 - theta*|_{2q} = moment(q)^{1/2q}
    double norm_2q(const Vector& theta_star, int q) const;
};

struct SamplerConfig {
    double lambda = 0.1;
    std::optional<std::size_t> steps; // default: 3 ceil(ln(1/lambda)/(a~ lambda))
    InitialLaw theta0;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> data_seed; // base for the data substream; defaults to seed
    std::size_t replicas = 1;
    std::size_t record_every = 1;
    std::vector<int> moment_orders; // p in E|theta - theta*|^{2p}
};

ConvexityConstants oracle_base(const GradientOracle& oracle);
std::size_t default_horizon(double lambda, double a_tilde);
std::size_t resolve_steps(const SamplerConfig& cfg, const GradientOracle& oracle);
// throws HypothesisViolation unless 0 < lambda < lambda_bar
void check_step_size(const GradientOracle& oracle, double lambda);

template <class D1, class D2>
Vector ula_step(const Eigen::MatrixBase<D1>& theta, const GradientOracle& oracle, double lambda,
                const Eigen::MatrixBase<D2>& xi) {
    const Vector t = theta;
    return t - lambda * oracle.eval_h(t) + std::sqrt(2.0 * lambda) * xi;
}

template <class D1, class D2, class D3>
Vector sgld_step(const Eigen::MatrixBase<D1>& theta, const GradientOracle& oracle, double lambda,
                 const Eigen::MatrixBase<D2>& x_next, const Eigen::MatrixBase<D3>& xi) {
    const Vector t = theta;
    return t - lambda * oracle.eval_H(t, x_next) + std::sqrt(2.0 * lambda) * xi;
}

struct TraceStat {
    std::vector<double> mean;
    std::vector<double> se;
};

struct CoupledStats {
    double lambda = 0.0;
    std::size_t steps = 0;
    std::size_t replicas = 0;
    std::size_t record_every = 1;
    std::vector<std::size_t> n; // recorded steps, 0 included
    TraceStat msd; // E|theta_n - theta_bar_n|^2
    std::vector<double> sup_so_far; // running max of msd.mean
    std::map<int, TraceStat> moment_sgld;
    std::map<int, TraceStat> moment_ula;
    std::size_t window_start = 0; // last third of the horizon
    std::vector<double> replica_window_msd; // per replica, averaged over every step of the window
    // the same average over the first and second half of the window
    std::vector<double> replica_window_first;
    std::vector<double> replica_window_second;
};

CoupledStats run_coupled(const GradientOracle& oracle, const LinearProcessSpec& stream, const SamplerConfig& cfg);

struct MomentRun {
    double lambda = 0.0;
    std::size_t steps = 0;
    std::size_t replicas = 0;
    std::vector<std::size_t> n;
    std::map<int, TraceStat> moments;
    Matrix path; // replica 0 at the recorded steps, d x records
    Matrix final_states; // d x replicas
};

MomentRun run_sgld(const GradientOracle& oracle, const LinearProcessSpec& stream, const SamplerConfig& cfg);
MomentRun run_ula(const GradientOracle& oracle, const SamplerConfig& cfg);

// Every step of replica 0 of a ULA chain (d x (steps+1)); for long single-chain
// experiments.
Matrix ula_trajectory(const GradientOracle& oracle, const SamplerConfig& cfg, const InitialLaw& start);

struct ContractionStats {
    std::vector<std::size_t> n;
    TraceStat msd; // E|theta_bar_n(1) - theta_bar_n(2)|^2
    double initial_sq = 0.0; // E|eta_1 - eta_2|^2 from the laws
};

// two ULA chains sharing noise, initial points drawn independently from law1, law2
ContractionStats run_ula_contraction(const GradientOracle& oracle, const SamplerConfig& cfg, const InitialLaw& law1,
                                     const InitialLaw& law2);

struct BlockDiagnostics {
    std::size_t block_length = 1; // T = floor(1/lambda)
    std::vector<std::size_t> n;
    TraceStat sgld_to_aux; // E|theta_k - z_k|^2
    TraceStat aux_to_ula; // E|z_k - theta_bar_k|^2
    TraceStat coupled; // E|theta_k - theta_bar_k|^2
};

BlockDiagnostics run_auxiliary_blocks(const GradientOracle& oracle, const LinearProcessSpec& stream,
                                      const SamplerConfig& cfg);

// invariant law N(theta*, V) of the ULA chain for a quadratic oracle;
// per eigenvalue v_i = 2 lambda / (1 - (1 - lambda s_i)^2)
GaussianLaw stationary_ula_gaussian(const GradientOracle& oracle, double lambda);
// the target N(theta*, S^{-1}) of the same oracle
GaussianLaw target_gaussian(const GradientOracle& oracle);

} // namespace langmix
