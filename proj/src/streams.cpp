#include "langmix/streams.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace langmix {

namespace {

constexpr double kPi = std::numbers::pi;

// |A(mu)|^2 by Horner in e^{-i mu}
double modulus_sq(const std::vector<double>& a, double mu) {
    const std::complex<double> z = std::polar(1.0, -mu);
    std::complex<double> acc = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it)
        acc = acc * z + *it;
    return std::norm(acc);
}

// |sum_{k<n} q^k|^2 with q = r e^{-i mu}
double geometric_sq(double r, double mu, std::size_t n) {
    const std::complex<double> q = std::polar(r, -mu);
    const std::complex<double> qn = std::polar(std::pow(r, static_cast<double>(n)), -mu * static_cast<double>(n));
    return std::norm((1.0 - qn) / (1.0 - q));
}

// (1/N) sum_j f(2 pi j / N) for an even function, N a power of two
template <class F>
double periodic_mean_even(F&& f, std::size_t N) {
    const double h = 2.0 * kPi / static_cast<double>(N);
    double acc = f(0.0) + f(kPi);
    for (std::size_t j = 1; j < N / 2; ++j)
        acc += 2.0 * f(h * static_cast<double>(j));
    return acc / static_cast<double>(N);
}

} // namespace

LinearProcessSpec LinearProcessSpec::power_decay(double c, double beta) {
    LinearProcessSpec s;
    s.decay = DecayCertificate{c, beta};
    const std::size_t K = truncation_order(*s.decay);
    s.coeffs.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k)
        s.coeffs[k] = c * std::pow(1.0 + static_cast<double>(k), -beta);
    return s;
}

std::size_t truncation_order(const DecayCertificate& cert, double tol) {
    if (!(cert.beta > 1.5) || !(cert.c > 0.0) || !(tol > 0.0))
        throw DomainError("decay certificate needs c > 0 and beta > 3/2");
    const double e = 2.0 * cert.beta - 1.0;
    auto tail = [&](double K) { return cert.c * cert.c * std::pow(K + 1.0, -e) / e; };
    double guess = std::pow(cert.c * cert.c / (e * tol), 1.0 / e) - 1.0;
    auto K = static_cast<std::size_t>(std::max(0.0, std::floor(guess)));
    while (K > 0 && tail(static_cast<double>(K - 1)) < tol)
        --K;
    while (!(tail(static_cast<double>(K)) < tol))
        ++K;
    return K;
}

void validate(const LinearProcessSpec& spec) {
    if (spec.coeffs.empty())
        throw DomainError("linear process needs at least one coefficient");
    for (double a : spec.coeffs)
        if (!std::isfinite(a))
            throw DomainError("non-finite stream coefficient");
    if (spec.decay) {
        const auto& d = *spec.decay;
        if (!(d.beta > 1.5) || !(d.c > 0.0))
            throw DomainError("decay certificate needs c > 0 and beta > 3/2");
        for (std::size_t k = 0; k < spec.coeffs.size(); ++k) {
            const double bound = d.c * std::pow(1.0 + static_cast<double>(k), -d.beta);
            if (std::abs(spec.coeffs[k]) > bound * (1.0 + 1e-12))
                throw DomainError("coefficient a_" + std::to_string(k) + " violates the decay certificate");
        }
    }
}

bool is_iid(const LinearProcessSpec& spec) {
    for (std::size_t k = 1; k < spec.coeffs.size(); ++k)
        if (spec.coeffs[k] != 0.0)
            return false;
    return true;
}

double autocovariance(const LinearProcessSpec& spec, std::size_t lag) {
    const auto& a = spec.coeffs;
    double s = 0.0;
    for (std::size_t k = 0; k + lag < a.size(); ++k)
        s += a[k] * a[k + lag];
    return s;
}

double tail_sigma(const LinearProcessSpec& spec, std::size_t tau) {
    const auto& a = spec.coeffs;
    double s = 0.0;
    // smallest terms first
    for (std::size_t k = a.size(); k-- > tau;)
        s += a[k] * a[k];
    return std::sqrt(s);
}

double spectral_density_modulus(const LinearProcessSpec& spec, double mu) {
    return std::sqrt(modulus_sq(spec.coeffs, mu));
}

double iid_gap_variance(double lambda, std::size_t n) {
    const double r2n = std::pow(1.0 - lambda, 2.0 * static_cast<double>(n));
    return lambda * (1.0 - r2n) / (2.0 - lambda);
}

double example34_variance(const LinearProcessSpec& spec, double lambda, std::size_t n) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw DomainError("example34_variance needs lambda in (0,1)");
    if (n == 0)
        return 0.0;
    const double r = 1.0 - lambda;
    // Beyond n_eff the geometric factor changes by < e^-40 relative, so the
    // integrand's effective bandwidth is K + min(n, n_eff).
    const auto n_eff = static_cast<std::size_t>(std::ceil(40.0 / lambda));
    const std::size_t band = spec.order() + std::min(n, n_eff) + 1;
    std::size_t N = std::size_t{1} << 14;
    while (N < 2 * band && N < (std::size_t{1} << 24))
        N <<= 1;
    auto f = [&](double mu) { return modulus_sq(spec.coeffs, mu) * geometric_sq(r, mu, n); };
    const double coarse = periodic_mean_even(f, N);
    const double fine = periodic_mean_even(f, 2 * N);
    if (std::abs(fine - coarse) > 1e-9 * std::abs(fine))
        throw Error("example34_variance quadrature did not converge");
    return lambda * lambda * fine;
}

SpectralBounds spectral_bounds(const LinearProcessSpec& spec, std::size_t grid) {
    if (grid < 1024)
        throw DomainError("spectral_bounds needs grid >= 1024");
    SpectralBounds out;
    out.grid = grid;
    double lip = 0.0;
    for (std::size_t k = 1; k < spec.coeffs.size(); ++k)
        lip += static_cast<double>(k) * std::abs(spec.coeffs[k]);
    // the modulus is even in mu, so [0, pi] covers [-pi, pi]
    const double h = kPi / static_cast<double>(grid);
    std::vector<double> vals(grid + 1);
    for (std::size_t j = 0; j <= grid; ++j)
        vals[j] = spectral_density_modulus(spec, h * static_cast<double>(j));
    const auto imin = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    const auto imax = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());

    // golden-section refinement on the bracket around a grid extremum
    auto refine = [&](std::size_t i, double sign) {
        double lo = h * static_cast<double>(i > 0 ? i - 1 : 0);
        double hi = h * static_cast<double>(std::min(i + 1, grid));
        auto g = [&](double mu) { return sign * spectral_density_modulus(spec, mu); };
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        double g1 = g(x1), g2 = g(x2);
        for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
            if (g1 < g2) {
                hi = x2;
                x2 = x1;
                g2 = g1;
                x1 = hi - phi * (hi - lo);
                g1 = g(x1);
            } else {
                lo = x1;
                x1 = x2;
                g1 = g2;
                x2 = lo + phi * (hi - lo);
                g2 = g(x2);
            }
        }
        return std::min({sign * g1, sign * g2, vals[i]}, [&](double u, double v) { return sign * u < sign * v; });
    };
    out.m = refine(imin, 1.0);
    out.M = refine(imax, -1.0);
    out.tolerance = lip * h / 2.0;
    out.m_lower = std::max(0.0, vals[imin] - out.tolerance);
    out.m_zero = out.m < 1e-8 * std::max(1.0, out.M);
    return out;
}

StreamState::StreamState(const LinearProcessSpec& spec, std::uint64_t seed, int dim)
    : dim_(dim), seed_(seed), rng_(seed) {
    if (spec.coeffs.empty())
        throw ContractViolation("stream spec has no coefficients");
    if (dim < 1)
        throw ContractViolation("stream dimension must be positive");
    auto rev = std::make_shared<std::vector<double>>(spec.coeffs.rbegin(), spec.coeffs.rend());
    kernel_ = std::move(rev);
    L_ = spec.coeffs.size();
    buf_.assign(2 * L_ * static_cast<std::size_t>(dim), 0.0);
    w_ = L_ - 1;
    // burn in eps_{-K+1..0}
    for (std::size_t k = 0; k + 1 < L_; ++k) {
        w_ = (w_ + 1) % L_;
        for (int c = 0; c < dim_; ++c) {
            double* b = buf_.data() + 2 * L_ * static_cast<std::size_t>(c);
            b[w_] = b[w_ + L_] = rng_();
        }
    }
}

double StreamState::push_and_convolve(int coord, double eps) {
    double* b = buf_.data() + 2 * L_ * static_cast<std::size_t>(coord);
    b[w_] = b[w_ + L_] = eps;
    const double* win = b + w_ + 1;
    const auto& k = *kernel_;
    if (L_ == 1)
        return k[0] * eps;
    double s = 0.0;
    for (std::size_t j = 0; j < L_; ++j)
        s += k[j] * win[j];
    return s;
}

double StreamState::next() {
    if (!initialized())
        throw ContractViolation("stream state not initialised");
    if (dim_ != 1)
        throw ContractViolation("scalar next() on a multi-dimensional stream");
    w_ = (w_ + 1) % L_;
    ++n_;
    return push_and_convolve(0, rng_());
}

void StreamState::next(Eigen::Ref<Vector> out) {
    if (!initialized())
        throw ContractViolation("stream state not initialised");
    if (out.size() != dim_)
        throw ContractViolation("stream output has wrong dimension");
    w_ = (w_ + 1) % L_;
    ++n_;
    for (int c = 0; c < dim_; ++c)
        out[c] = push_and_convolve(c, rng_());
}

} // namespace langmix
