#pragma once

// Reproducible random numbers.
//
// Every random quantity is drawn from a xoshiro256++ engine whose 256-bit
// state is expanded from a 64-bit seed through SplitMix64. Normals come from
// our own Box-Muller transform, so paths do not depend on the standard
// library's distribution implementations.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>

namespace langmix {

inline constexpr const char* kRngAlgorithm = "xoshiro256pp+splitmix64/box-muller-v1";

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t x) { return SplitMix64(x)(); }

// Independent child seed for (base, i, j). Used for per-replica substreams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t i, std::uint64_t j = 0) {
    return mix64(mix64(mix64(base) ^ (i + 0x632be59bd9b4e019ULL)) ^ (j + 0x2545f4914f6cdd1dULL));
}

// Substream tags so noise, data and initial draws never share a generator.
enum class Substream : std::uint64_t { noise = 1, data = 2, init = 3, aux = 4 };

inline std::uint64_t replica_seed(std::uint64_t base, std::uint64_t replica, Substream s) {
    return derive_seed(base, replica, static_cast<std::uint64_t>(s));
}

class Xoshiro256pp {
  public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_)
            w = sm();
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on (0, 1], never returns 0 so log() is safe
    double uniform_open0() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }
    // uniform on [0, 1)
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Standard normal draws via Box-Muller; the second variate of each pair is cached.
class NormalSource {
  public:
    explicit NormalSource(std::uint64_t seed = 0) : eng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = eng_.uniform_open0();
        const double u2 = eng_.uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    template <class Derived>
    void fill(Eigen::DenseBase<Derived>& out) {
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            for (Eigen::Index i = 0; i < out.rows(); ++i)
                out(i, j) = (*this)();
    }
    template <class Derived>
    void fill(Eigen::DenseBase<Derived>&& out) {
        fill(out);
    }

    Xoshiro256pp& engine() { return eng_; }

  private:
    Xoshiro256pp eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace langmix
