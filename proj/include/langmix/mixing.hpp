#pragma once

// Conditional L-mixing quantities of Gaussian linear processes, evaluated at
// n = 0 where the conditioning field is trivial. There the residual
// X_m - E[X_m | eps_{<= m - tau}] = sum_{k >= tau} a_k eps_{m-k} is centred
// Gaussian with sd sigma(tau), independent of m, so every quantity is a
// Gaussian moment.
//
// Data vectors with m > 1 coordinates stack independent copies of the scalar
// process; norms are Euclidean and the moments become chi moments.

#include "langmix/streams.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace langmix {

// E|Y|^r for Y ~ N(0, I_m), any real r >= 0
double gaussian_norm_abs_moment(double r, int m = 1);
// (E|Y|^r)^{1/r}
double gaussian_norm_root(double r, int m = 1);

// sigma(0..K), suffix sums from the smallest coefficient up
std::vector<double> tail_sigmas(const LinearProcessSpec& spec);

// gamma_r(tau) = sigma(tau) * (E|Z|^r)^{1/r}; integer r >= 1
double gamma_linear_analytic(const LinearProcessSpec& spec, std::size_t tau, int r, int m = 1);

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t paths = 0;
};

// Simulates the residual sum_{k >= tau} a_k eps directly and returns the
// empirical r-th moment root with a bootstrap standard error.
McEstimate gamma_mc_estimate(const LinearProcessSpec& spec, std::size_t tau, int r, std::size_t paths,
                             std::uint64_t seed, std::size_t bootstrap = 200);

enum class Provenance { analytic, monte_carlo };

struct MixingProfile {
    int r = 2;
    int s = 1;
    int m = 1;
    Provenance provenance = Provenance::analytic;
    double M_r = 0.0; // |X|_r, rooted
    std::vector<double> gamma; // tau = 0..tau_max
    double Gamma_r = 0.0; // sum of gamma
    // upper end of the interval for the untruncated process
    double Gamma_r_upper = 0.0;
    double remainder_bound = 0.0;
    bool remainder_bounded = true;
    std::size_t K = 0;
    double script_M_r = 0.0; // E|X|^r
    std::map<int, double> script_M; // E|X|^q for q = 1..16
    std::map<std::pair<int, int>, double> script_C; // Gamma_q^t at n = 0
    std::vector<std::string> notes;
};

// Gamma_r, M_r, script quantities for order r plus the pairs (3,2), (2,1)
// and (r,s) used by the constants chain.
MixingProfile profile_build(const LinearProcessSpec& spec, int r, int s, std::size_t tau_max, int m = 1);

// C(r) = sqrt(r-1) and C'(r) = sqrt(r-1) / (2^{1/2} - 2^{1/r})
double burkholder_constant(double r);
double maximal_constant(double r);

struct MaximalReport {
    double lhs = 0.0; // E^{1/r} max_k |sum_{i<=k} b_i X_i|^r (or the plain sum)
    double lhs_se = 0.0;
    double rhs = 0.0;
    double constant = 0.0;
    double M_r = 0.0;
    double Gamma_r = 0.0;
    bool pass = false;
    std::size_t replicas = 0;
};

// The root E^{1/r}[.] is compared against C'(r) |b|_2 (M_r + Gamma_r);
// pass means lhs <= rhs + 3 SE.
MaximalReport maximal_inequality_check(std::span<const double> b, const LinearProcessSpec& spec, int r,
                                       std::size_t replicas, std::uint64_t seed);

// Non-maximal companion with C(r); r >= 2.
MaximalReport sum_inequality_check(std::span<const double> b, const LinearProcessSpec& spec, int r,
                                   std::size_t replicas, std::uint64_t seed);

} // namespace langmix
