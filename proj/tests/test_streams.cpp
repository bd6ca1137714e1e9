#include "doctest.h"

#include "langmix/streams.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace langmix;

namespace {

LinearProcessSpec coeffs(std::vector<double> a) {
    LinearProcessSpec s;
    s.coeffs = std::move(a);
    return s;
}

// mean and batch-means standard error of f over a path
template <class F>
std::pair<double, double> batch_mean(const std::vector<double>& xs, std::size_t batch, F f) {
    const std::size_t nb = xs.size() / batch;
    std::vector<double> means(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t i = 0; i < batch; ++i)
            means[b] += f(xs, b * batch + i);
        means[b] /= static_cast<double>(batch);
    }
    double m = 0.0;
    for (double v : means)
        m += v;
    m /= static_cast<double>(nb);
    double var = 0.0;
    for (double v : means)
        var += (v - m) * (v - m);
    var /= static_cast<double>(nb - 1);
    return {m, std::sqrt(var / static_cast<double>(nb))};
}

std::vector<double> draw(const LinearProcessSpec& s, std::uint64_t seed, std::size_t n) {
    StreamState st(s, seed);
    std::vector<double> out(n);
    for (auto& x : out)
        x = st.next();
    return out;
}

} // namespace

TEST_CASE("spectral modulus at the worked angles") {
    CHECK(spectral_density_modulus(coeffs({1.0}), 0.7) == doctest::Approx(1.0));
    CHECK(spectral_density_modulus(coeffs({1.0, 1.0}), std::numbers::pi) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(spectral_density_modulus(coeffs({1.0, 1.0}), 0.0) == doctest::Approx(2.0));
    // |1 + 0.5 e^{-i pi/2}| = sqrt(1.25)
    CHECK(spectral_density_modulus(coeffs({1.0, 0.5}), std::numbers::pi / 2) == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("example34_variance frozen values") {
    const auto iid = coeffs({1.0});
    CHECK(example34_variance(iid, 0.5, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(example34_variance(iid, 0.5, 200) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(example34_variance(iid, 0.5, 0) == 0.0);
    CHECK(example34_variance(coeffs({1.0, 0.5}), 0.3, 0) == 0.0);
    CHECK_THROWS_AS(example34_variance(iid, 1.0, 5), DomainError);
    CHECK_THROWS_AS(example34_variance(iid, 0.0, 5), DomainError);

    // n = 1 is lambda^2 sum a_k^2 (Parseval)
    CHECK(example34_variance(coeffs({1.0, 0.5}), 0.1, 1) == doctest::Approx(0.01 * 1.25).epsilon(1e-10));
    const auto pd = LinearProcessSpec::power_decay(1.0, 2.0);
    double sq = 0.0;
    for (double a : pd.coeffs)
        sq += a * a;
    CHECK(example34_variance(pd, 0.2, 1) == doctest::Approx(0.04 * sq).epsilon(1e-9));

    // MA(1), two steps: gap = lambda (X_2 + (1-lambda) X_1), Var = lambda^2 (1.25 (1 + r^2) + 2 r 0.5)
    const double lam = 0.1, r = 1.0 - lam;
    const double want = lam * lam * (1.25 * (1.0 + r * r) + 2.0 * r * 0.5);
    CHECK(example34_variance(coeffs({1.0, 0.5}), lam, 2) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("iid closed form agrees with the quadrature") {
    for (double lam : {0.5, 0.1, 0.02})
        for (std::size_t n : {1u, 7u, 200u})
            CHECK(example34_variance(coeffs({1.0}), lam, n) == doctest::Approx(iid_gap_variance(lam, n)).epsilon(1e-10));
}

TEST_CASE("example34_variance lies inside the spectral bracket") {
    const auto pd = LinearProcessSpec::power_decay(1.0, 2.0);
    const auto sb = spectral_bounds(pd);
    REQUIRE_FALSE(sb.m_zero);
    const double v = example34_variance(pd, 0.1, 100);
    const double base = iid_gap_variance(0.1, 100);
    CHECK(v >= sb.m_lower * sb.m_lower * base);
    CHECK(v <= sb.M * sb.M * base);
}

TEST_CASE("spectral bounds") {
    auto one = spectral_bounds(coeffs({1.0}));
    CHECK(one.m == doctest::Approx(1.0));
    CHECK(one.M == doctest::Approx(1.0));
    auto two = spectral_bounds(coeffs({1.0, 0.5}));
    CHECK(two.m == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(two.M == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(two.m_lower <= two.m);
    CHECK_FALSE(two.m_zero);
    auto flat = spectral_bounds(coeffs({1.0, 1.0}));
    CHECK(flat.m == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(flat.m_zero);
    CHECK_THROWS_AS(spectral_bounds(coeffs({1.0}), 512), DomainError);
}

TEST_CASE("truncation order for c=1, beta=2") {
    // (K+1)^{-3}/3 < 1e-12  <=>  K+1 > 6933.6
    CHECK(truncation_order({1.0, 2.0}) == 6933);
    const auto pd = LinearProcessSpec::power_decay(1.0, 2.0);
    CHECK(pd.order() == 6933);
    CHECK(pd.coeffs[3] == doctest::Approx(1.0 / 16.0));
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(validate(coeffs({})), DomainError);
    auto bad = coeffs({1.0, 0.9});
    bad.decay = DecayCertificate{1.0, 2.0}; // 0.9 > 2^{-2}
    CHECK_THROWS_AS(validate(bad), DomainError);
    auto slow = coeffs({1.0});
    slow.decay = DecayCertificate{1.0, 1.5};
    CHECK_THROWS_AS(validate(slow), DomainError);
    CHECK(is_iid(coeffs({1.0})));
    CHECK_FALSE(is_iid(coeffs({1.0, 0.5})));
    CHECK(autocovariance(coeffs({1.0, 0.5, 0.25}), 1) == doctest::Approx(0.625));
    CHECK(tail_sigma(coeffs({1.0, 0.5}), 1) == doctest::Approx(0.5));
}

TEST_CASE("stream determinism and contract") {
    const auto s = coeffs({1.0, 0.5});
    CHECK(draw(s, 42, 100) == draw(s, 42, 100));
    CHECK(draw(s, 42, 100) != draw(s, 43, 100));
    StreamState empty;
    CHECK_THROWS_AS(empty.next(), ContractViolation);
}

TEST_CASE("stream moments within 3 SE") {
    auto sq = [](const std::vector<double>& x, std::size_t i) { return x[i] * x[i]; };
    {
        const auto xs = draw(coeffs({1.0}), 7, 100000);
        auto [m, se] = batch_mean(xs, 1000, sq);
        CHECK(std::abs(m - 1.0) <= 3.0 * se);
    }
    {
        const auto xs = draw(coeffs({1.0, 1.0}), 8, 100000);
        auto [m, se] = batch_mean(xs, 1000, sq);
        CHECK(std::abs(m - 2.0) <= 3.0 * se);
    }
    {
        const auto s = coeffs({1.0, 0.5, 0.25});
        const auto xs = draw(s, 9, 100001);
        // 100 batches of 1000 use indices below 100000, so i+1 stays in range
        auto [m, se] = batch_mean(xs, 1000, [](const std::vector<double>& x, std::size_t i) { return x[i] * x[i + 1]; });
        CHECK(std::abs(m - autocovariance(s, 1)) <= 3.0 * se);
    }
}

TEST_CASE("vector-valued stream stacks independent copies") {
    StreamState st(coeffs({1.0, 0.5}), 11, 3);
    Vector x(3);
    st.next(x);
    CHECK(x.allFinite());
    CHECK(st.index() == 1);
    CHECK_THROWS_AS(st.next(), ContractViolation);
}
