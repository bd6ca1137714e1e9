#include "langmix/mixing.hpp"

#include "langmix/parallel.hpp"
#include "langmix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace langmix {

namespace {

constexpr std::size_t kBlock = 64;

struct BlockSums {
    double sum = 0.0;
    double sumsq = 0.0;
};

// replicas split in fixed blocks, each block reduced in order, blocks reduced in order
template <class Draw>
std::pair<double, double> mc_mean(std::size_t replicas, std::uint64_t seed, Draw&& draw) {
    const std::size_t nb = (replicas + kBlock - 1) / kBlock;
    std::vector<BlockSums> parts(nb);
    parallel_for(nb, [&](std::size_t b) {
        BlockSums s;
        const std::size_t hi = std::min(replicas, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < hi; ++i) {
            const double v = draw(derive_seed(seed, i));
            s.sum += v;
            s.sumsq += v * v;
        }
        parts[b] = s;
    });
    double sum = 0.0, sumsq = 0.0;
    for (const auto& p : parts) {
        sum += p.sum;
        sumsq += p.sumsq;
    }
    const double n = static_cast<double>(replicas);
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean) * n / std::max(1.0, n - 1.0);
    return {mean, std::sqrt(var / n)};
}

MaximalReport inequality_check(std::span<const double> b, const LinearProcessSpec& spec, int r, std::size_t replicas,
                               std::uint64_t seed, bool maximal) {
    validate(spec);
    if (replicas < 2)
        throw DomainError("inequality check needs at least two replicas");
    MaximalReport rep;
    rep.replicas = replicas;
    rep.constant = maximal ? maximal_constant(r) : burkholder_constant(r);
    const auto prof = profile_build(spec, r, 1, spec.order());
    rep.M_r = prof.M_r;
    rep.Gamma_r = prof.Gamma_r;
    double bnorm = 0.0;
    for (double v : b)
        bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    rep.rhs = rep.constant * bnorm * (rep.M_r + rep.Gamma_r);
    const bool zero = std::all_of(b.begin(), b.end(), [](double v) { return v == 0.0; });
    if (b.empty() || zero) {
        rep.pass = rep.lhs <= rep.rhs;
        return rep;
    }
    auto [mean, se] = mc_mean(replicas, seed, [&](std::uint64_t s) {
        StreamState st(spec, s);
        double partial = 0.0, best = 0.0;
        for (double w : b) {
            partial += w * st.next();
            best = std::max(best, std::abs(partial));
        }
        const double v = maximal ? best : std::abs(partial);
        return std::pow(v, r);
    });
    rep.lhs = std::pow(mean, 1.0 / r);
    // delta method for the r-th root
    rep.lhs_se = mean > 0.0 ? se / (r * std::pow(mean, 1.0 - 1.0 / r)) : 0.0;
    rep.pass = rep.lhs <= rep.rhs + 3.0 * rep.lhs_se;
    return rep;
}

} // namespace

double gaussian_norm_abs_moment(double r, int m) {
    if (m < 1 || r < 0.0)
        throw DomainError("gaussian_norm_abs_moment needs m >= 1 and r >= 0");
    return std::exp(0.5 * r * std::log(2.0) + std::lgamma(0.5 * (m + r)) - std::lgamma(0.5 * m));
}

double gaussian_norm_root(double r, int m) {
    if (!(r > 0.0))
        throw DomainError("moment order must be positive");
    return std::pow(gaussian_norm_abs_moment(r, m), 1.0 / r);
}

std::vector<double> tail_sigmas(const LinearProcessSpec& spec) {
    const auto& a = spec.coeffs;
    std::vector<double> out(a.size());
    double s = 0.0;
    for (std::size_t k = a.size(); k-- > 0;) {
        s += a[k] * a[k];
        out[k] = std::sqrt(s);
    }
    return out;
}

double gamma_linear_analytic(const LinearProcessSpec& spec, std::size_t tau, int r, int m) {
    if (r < 1)
        throw DomainError("moment order r must be >= 1");
    if (tau > spec.order())
        return 0.0;
    return tail_sigma(spec, tau) * gaussian_norm_root(r, m);
}

McEstimate gamma_mc_estimate(const LinearProcessSpec& spec, std::size_t tau, int r, std::size_t paths,
                             std::uint64_t seed, std::size_t bootstrap) {
    validate(spec);
    if (paths < 1000)
        throw DomainError("gamma_mc_estimate needs at least 1000 paths");
    if (r < 1)
        throw DomainError("moment order r must be >= 1");
    McEstimate out;
    out.paths = paths;
    if (tau > spec.order())
        return out;
    const std::size_t len = spec.order() + 1 - tau;
    const std::size_t nb = (paths + kBlock - 1) / kBlock;
    std::vector<double> vals(paths);
    parallel_for(nb, [&](std::size_t b) {
        const std::size_t hi = std::min(paths, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < hi; ++i) {
            NormalSource ns(derive_seed(seed, i));
            double res = 0.0;
            for (std::size_t k = 0; k < len; ++k)
                res += spec.coeffs[tau + k] * ns();
            vals[i] = std::pow(std::abs(res), r);
        }
    });
    const double n = static_cast<double>(paths);
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
    out.estimate = std::pow(mean, 1.0 / r);
    // bootstrap over paths, replicate b drawing from its own generator
    std::vector<double> boots(bootstrap);
    parallel_for(bootstrap, [&](std::size_t bi) {
        Xoshiro256pp eng(derive_seed(seed ^ 0xb0075747ULL, bi));
        double s = 0.0;
        for (std::size_t i = 0; i < paths; ++i)
            s += vals[static_cast<std::size_t>(eng.uniform() * n)];
        boots[bi] = std::pow(s / n, 1.0 / r);
    });
    const double bm = std::accumulate(boots.begin(), boots.end(), 0.0) / static_cast<double>(bootstrap);
    double ss = 0.0;
    for (double v : boots)
        ss += (v - bm) * (v - bm);
    out.std_error = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(1, bootstrap - 1)));
    return out;
}

MixingProfile profile_build(const LinearProcessSpec& spec, int r, int s, std::size_t tau_max, int m) {
    validate(spec);
    if (r < 1 || s < 1)
        throw DomainError("profile needs r >= 1 and s >= 1");
    MixingProfile p;
    p.r = r;
    p.s = s;
    p.m = m;
    p.K = spec.order();
    const auto sig = tail_sigmas(spec);
    auto Gamma_of = [&](int q) {
        double g = 0.0;
        const std::size_t top = std::min(tau_max, p.K);
        for (std::size_t t = 0; t <= top; ++t)
            g += sig[t];
        return g * gaussian_norm_root(q, m);
    };
    const double gr = gaussian_norm_root(r, m);
    p.gamma.resize(tau_max + 1, 0.0);
    for (std::size_t t = 0; t <= tau_max && t <= p.K; ++t)
        p.gamma[t] = sig[t] * gr;
    p.Gamma_r = Gamma_of(r);
    p.M_r = sig[0] * gr;
    const double var = sig[0] * sig[0];
    p.script_M_r = std::pow(var, 0.5 * r) * gaussian_norm_abs_moment(r, m);
    for (int q = 1; q <= 16; ++q)
        p.script_M[q] = std::pow(var, 0.5 * q) * gaussian_norm_abs_moment(q, m);
    for (auto [q, t] : {std::pair{3, 2}, std::pair{2, 1}, std::pair{r, s}})
        p.script_C[{q, t}] = std::pow(Gamma_of(q), t);

    // remainder of Gamma_r for the untruncated sequence
    if (spec.decay) {
        const double c = spec.decay->c, beta = spec.decay->beta;
        const double T = static_cast<double>(std::min(tau_max, p.K));
        double tail_sum; // bound on sum_{tau > T} tau^{1/2 - beta}
        if (T >= 1.0)
            tail_sum = std::pow(T, 1.5 - beta) / (beta - 1.5);
        else
            tail_sum = 1.0 + 1.0 / (beta - 1.5);
        const double beyond = gr * c / std::sqrt(2.0 * beta - 1.0) * tail_sum;
        // each retained sigma(tau) misses at most the discarded tail variance
        const double Kd = static_cast<double>(p.K);
        const double dropped = c * c * std::pow(Kd + 1.0, 1.0 - 2.0 * beta) / (2.0 * beta - 1.0);
        const double within = (T + 1.0) * gr * std::sqrt(dropped);
        p.remainder_bound = beyond + within;
        p.remainder_bounded = true;
        p.notes.push_back("Gamma interval covers the untruncated coefficient sequence via the decay certificate");
    } else if (tau_max >= p.K) {
        p.remainder_bound = 0.0;
        p.remainder_bounded = true;
        p.notes.push_back("finite coefficient list taken as exact; tail empty");
    } else {
        p.remainder_bound = std::numeric_limits<double>::infinity();
        p.remainder_bounded = false;
        p.notes.push_back("no decay certificate and tau_max < K: remainder unbounded");
    }
    p.Gamma_r_upper = p.Gamma_r + p.remainder_bound;
    p.notes.push_back("evaluated at n = 0 (trivial conditioning); for non-stationary streams this is a lower bound");
    return p;
}

double burkholder_constant(double r) {
    if (!(r >= 2.0))
        throw DomainError("C(r) needs r >= 2");
    return std::sqrt(r - 1.0);
}

double maximal_constant(double r) {
    if (!(r > 2.0))
        throw DomainError("C'(r) needs r > 2; it diverges at r = 2");
    return std::sqrt(r - 1.0) / (std::sqrt(2.0) - std::pow(2.0, 1.0 / r));
}

MaximalReport maximal_inequality_check(std::span<const double> b, const LinearProcessSpec& spec, int r,
                                       std::size_t replicas, std::uint64_t seed) {
    if (r <= 2)
        throw DomainError("maximal inequality needs r > 2");
    return inequality_check(b, spec, r, replicas, seed, true);
}

MaximalReport sum_inequality_check(std::span<const double> b, const LinearProcessSpec& spec, int r,
                                   std::size_t replicas, std::uint64_t seed) {
    if (r < 2)
        throw DomainError("sum inequality needs r >= 2");
    return inequality_check(b, spec, r, replicas, seed, false);
}

} // namespace langmix
