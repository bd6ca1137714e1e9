#include "doctest.h"

#include "langmix/mixing.hpp"

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

} // namespace

TEST_CASE("analytic gamma") {
    CHECK(gamma_linear_analytic(coeffs({1.0}), 1, 2) == 0.0);
    CHECK(gamma_linear_analytic(coeffs({1.0}), 0, 2) == doctest::Approx(1.0));
    CHECK(gamma_linear_analytic(coeffs({1.0, 0.5}), 1, 2) == doctest::Approx(0.5));
    CHECK(gamma_linear_analytic(coeffs({1.0}), 0, 4) == doctest::Approx(std::pow(3.0, 0.25)));
    // zeta(4) = pi^4/90
    const double z4 = std::pow(std::numbers::pi, 4) / 90.0;
    CHECK(gamma_linear_analytic(LinearProcessSpec::power_decay(1.0, 2.0), 0, 2) == doctest::Approx(std::sqrt(z4)).epsilon(1e-9));
    // odd order: E|Z|^3 = 2 sqrt(2/pi)
    CHECK(gamma_linear_analytic(coeffs({1.0}), 0, 3) == doctest::Approx(std::cbrt(2.0 * std::sqrt(2.0 / std::numbers::pi))));
    CHECK(gamma_linear_analytic(coeffs({1.0, 0.5}), 9, 2) == 0.0);
}

TEST_CASE("chi moments") {
    CHECK(gaussian_norm_abs_moment(2, 3) == doctest::Approx(3.0));
    CHECK(gaussian_norm_abs_moment(4, 1) == doctest::Approx(3.0));
    CHECK(gaussian_norm_abs_moment(4, 2) == doctest::Approx(8.0));
    CHECK(gaussian_norm_abs_moment(1, 2) == doctest::Approx(std::sqrt(std::numbers::pi / 2.0)));
    CHECK(gaussian_norm_root(2, 1) == doctest::Approx(1.0));
}

TEST_CASE("Monte Carlo gamma agrees with the analytic value") {
    const auto s = coeffs({1.0, 0.5});
    const auto e = gamma_mc_estimate(s, 1, 2, 100000, 17);
    CHECK(std::abs(e.estimate - 0.5) <= 3.0 * e.std_error);
    CHECK(gamma_mc_estimate(s, 2, 2, 1000, 1).estimate == 0.0);
    const auto four = gamma_mc_estimate(coeffs({1.0}), 0, 4, 100000, 18);
    CHECK(std::abs(four.estimate - std::pow(3.0, 0.25)) <= 3.0 * four.std_error);
    CHECK_THROWS(gamma_mc_estimate(s, 0, 2, 999, 1));
}

TEST_CASE("Monte Carlo gamma doubling property") {
    const auto s = coeffs({1.0, 0.5, 0.25});
    std::vector<McEstimate> g;
    for (std::size_t tau = 0; tau <= 3; ++tau)
        g.push_back(gamma_mc_estimate(s, tau, 2, 20000, 100 + tau));
    for (std::size_t t1 = 0; t1 < g.size(); ++t1)
        for (std::size_t t2 = t1; t2 < g.size(); ++t2)
            CHECK(g[t2].estimate <= 2.0 * g[t1].estimate + 3.0 * (g[t1].std_error + g[t2].std_error));
}

TEST_CASE("profiles") {
    const auto iid = profile_build(coeffs({1.0}), 2, 2, 8);
    CHECK(iid.Gamma_r == doctest::Approx(1.0));
    CHECK(iid.script_M_r == doctest::Approx(1.0));
    CHECK(iid.M_r == doctest::Approx(1.0));
    CHECK(iid.script_C.at({2, 2}) == doctest::Approx(1.0));
    CHECK(iid.remainder_bounded);
    CHECK(iid.remainder_bound == 0.0);

    const auto ma = profile_build(coeffs({1.0, 0.5}), 2, 1, 8);
    CHECK(ma.Gamma_r == doctest::Approx(std::sqrt(1.25) + 0.5));
    CHECK(ma.script_M.at(2) == doctest::Approx(1.25));
    CHECK(ma.script_C.at({2, 1}) == doctest::Approx(std::sqrt(1.25) + 0.5));
    CHECK(ma.script_C.count({3, 2}) == 1);

    for (double v : ma.gamma)
        CHECK(v >= 0.0);
}

TEST_CASE("truncated profiles need a certificate") {
    auto long_tail = LinearProcessSpec::power_decay(1.0, 2.0);
    const auto cert = profile_build(long_tail, 2, 1, 50);
    CHECK(cert.remainder_bounded);
    CHECK(cert.remainder_bound > 0.0);
    CHECK(cert.Gamma_r_upper >= cert.Gamma_r + cert.remainder_bound - 1e-12);

    long_tail.decay.reset();
    const auto none = profile_build(long_tail, 2, 1, 50);
    CHECK_FALSE(none.remainder_bounded);
    CHECK(std::isinf(none.Gamma_r_upper));
}

TEST_CASE("maximal inequality constants and trivial cases") {
    CHECK(burkholder_constant(3) == doctest::Approx(std::sqrt(2.0)));
    CHECK(maximal_constant(3) == doctest::Approx(std::sqrt(2.0) / (std::sqrt(2.0) - std::cbrt(2.0))));
    CHECK(maximal_constant(4) > 1.0);
    CHECK_THROWS_AS(maximal_constant(2), DomainError);

    const std::vector<double> zeros(8, 0.0), one{1.0};
    const auto z = maximal_inequality_check(zeros, coeffs({1.0}), 3, 1000, 1);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    CHECK(z.pass);
    const auto s = maximal_inequality_check(one, coeffs({1.0}), 3, 20000, 2);
    CHECK(std::abs(s.lhs - s.M_r) <= 3.0 * s.lhs_se);
    CHECK(s.pass);
    CHECK_THROWS_AS(maximal_inequality_check(one, coeffs({1.0}), 2, 1000, 1), DomainError);
}

TEST_CASE("maximal inequality for iid and linear streams") {
    const std::vector<double> ones(64, 1.0);
    const auto r = maximal_inequality_check(ones, coeffs({1.0}), 3, 10000, 3);
    CHECK(r.rhs == doctest::Approx(maximal_constant(3) * 8.0 * (r.M_r + r.Gamma_r)));
    CHECK(r.pass);
    CHECK(maximal_inequality_check(ones, coeffs({1.0, 0.5}), 4, 10000, 4).pass);
    for (int rr : {2, 3, 4})
        CHECK(sum_inequality_check(ones, coeffs({1.0}), rr, 10000, 5).pass);
}
