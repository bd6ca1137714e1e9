#pragma once

// Data streams: iid Gaussian and causal linear processes
//     X_n = sum_k a_k eps_{n-k},  eps iid N(0,1),
// plus the spectral tools used to bracket the coupled-chain variance.

#include "langmix/rng.hpp"
#include "langmix/types.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace langmix {

// |a_k| <= c (1+k)^(-beta), beta > 3/2
struct DecayCertificate {
    double c = 1.0;
    double beta = 2.0;
};

enum class InnovationLaw { gaussian };

struct LinearProcessSpec {
    std::vector<double> coeffs{1.0}; // a_0..a_K
    std::optional<DecayCertificate> decay;
    InnovationLaw innovation = InnovationLaw::gaussian;

    std::size_t order() const { return coeffs.size() - 1; } // K

    static LinearProcessSpec iid() { return {}; }
    // a_k = c (1+k)^(-beta), truncated by truncation_order()
    static LinearProcessSpec power_decay(double c, double beta);
};

// Default tail tolerance for truncating an infinite coefficient sequence.
inline constexpr double kTailTolerance = 1e-12;

// Smallest K with c^2 (K+1)^(1-2beta)/(2beta-1) < tol, an upper bound on the
// discarded tail variance sum_{k>K} c^2 (1+k)^(-2beta).
std::size_t truncation_order(const DecayCertificate& cert, double tol = kTailTolerance);

// Throws DomainError on empty coefficients, non-finite values, beta <= 3/2 or
// a certificate violated by a stored coefficient.
void validate(const LinearProcessSpec& spec);

bool is_iid(const LinearProcessSpec& spec);

// sum_k a_k a_{k+lag}
double autocovariance(const LinearProcessSpec& spec, std::size_t lag);

// sigma(tau) = sqrt(sum_{k>=tau} a_k^2), the sd of X_n - E[X_n | eps_{<=n-tau}]
double tail_sigma(const LinearProcessSpec& spec, std::size_t tau);

// |sum_k a_k e^{-i mu k}|
double spectral_density_modulus(const LinearProcessSpec& spec, double mu);

// Variance of the synchronous ULA/SGLD gap after n steps for H(theta,x)=theta+x:
//   (lambda^2/2pi) int |A(mu)|^2 |sum_{k<n} (1-lambda)^k e^{-ik mu}|^2 dmu
// by a periodic trapezoid rule sized to integrate the trigonometric
// polynomial exactly, confirmed by one node doubling.
double example34_variance(const LinearProcessSpec& spec, double lambda, std::size_t n);

// lambda (1-(1-lambda)^{2n}) / (2-lambda), the flat-spectrum special case
double iid_gap_variance(double lambda, std::size_t n);

struct SpectralBounds {
    double m = 0.0; // refined minimum of the modulus (an attained value)
    double M = 0.0; // refined maximum
    double m_lower = 0.0; // certified lower bound on the infimum: grid min - L h/2
    double tolerance = 0.0; // L h / 2 with L = sum k|a_k|
    std::size_t grid = 0;
    bool m_zero = false; // bracket inapplicable
};

SpectralBounds spectral_bounds(const LinearProcessSpec& spec, std::size_t grid = 4096);

// Live generator. Holds the last K+1 innovations per data coordinate in a
// doubled ring so the convolution is a contiguous dot product.
class StreamState {
  public:
    StreamState() = default;
    StreamState(const LinearProcessSpec& spec, std::uint64_t seed, int dim = 1);

    bool initialized() const { return kernel_ != nullptr; }
    std::uint64_t index() const { return n_; }
    int dim() const { return dim_; }
    std::uint64_t seed() const { return seed_; }

    // X_{n+1}; requires dim() == 1
    double next();
    void next(Eigen::Ref<Vector> out);

  private:
    double push_and_convolve(int coord, double eps);

    std::shared_ptr<const std::vector<double>> kernel_; // a_K..a_0
    std::vector<double> buf_;
    std::size_t L_ = 0;
    std::size_t w_ = 0;
    int dim_ = 0;
    std::uint64_t n_ = 0;
    std::uint64_t seed_ = 0;
    NormalSource rng_;
};

} // namespace langmix
