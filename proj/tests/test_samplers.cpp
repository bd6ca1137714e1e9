#include "doctest.h"

#include "langmix/samplers.hpp"

#include <cmath>
#include <cstdlib>

using namespace langmix;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

SamplerConfig cfg(double lambda, std::size_t steps, std::size_t replicas, std::uint64_t seed) {
    SamplerConfig c;
    c.lambda = lambda;
    c.steps = steps;
    c.replicas = replicas;
    c.seed = seed;
    return c;
}

} // namespace

TEST_CASE("single steps") {
    const auto o = make_scalar_quadratic();
    CHECK(ula_step(v1(1.0), o, 1.0, v1(0.0))[0] == doctest::Approx(0.0));
    CHECK(ula_step(o.theta_star(), o, 0.3, v1(0.0))[0] == 0.0);
    CHECK(ula_step(v1(0.0), o, 0.5, v1(1.0))[0] == doctest::Approx(1.0));
    CHECK(sgld_step(v1(1.0), o, 1.0, v1(0.5), v1(0.0))[0] == doctest::Approx(-0.5));
    CHECK(sgld_step(v1(0.0), o, 0.1, v1(1.0), v1(0.0))[0] == doctest::Approx(-0.1));
    CHECK(sgld_step(v1(0.7), o, 0.2, v1(0.0), v1(0.3))[0] == doctest::Approx(ula_step(v1(0.7), o, 0.2, v1(0.3))[0]));
}

TEST_CASE("step-size guard") {
    const auto o = make_scalar_quadratic();
    CHECK_THROWS_AS(run_coupled(o, LinearProcessSpec::iid(), cfg(1.0, 10, 4, 1)), HypothesisViolation);
    CHECK_THROWS_AS(run_ula(o, cfg(1.5, 10, 4, 1)), HypothesisViolation);
    CHECK_NOTHROW(run_ula(o, cfg(0.99, 10, 4, 1)));
    CHECK(default_horizon(0.1, 0.5) == 3 * 47); // ceil(ln 10 / 0.05) = 47
}

TEST_CASE("noiseless data gives coincident chains") {
    const auto o = make_scalar_quadratic(1.0, 0.0);
    const auto s = run_coupled(o, LinearProcessSpec::iid(), cfg(0.3, 50, 64, 2));
    for (double m : s.msd.mean)
        CHECK(m == 0.0);
}

TEST_CASE("one-step coupled gap is lambda X_1") {
    const auto o = make_scalar_quadratic();
    const auto s = run_coupled(o, LinearProcessSpec::iid(), cfg(0.5, 1, 20000, 3));
    REQUIRE(s.n.size() == 2);
    CHECK(s.msd.mean[0] == 0.0);
    CHECK(std::abs(s.msd.mean[1] - 0.25) <= 3.0 * s.msd.se[1]);
}

TEST_CASE("coupled gap variance matches the closed form") {
    const auto o = make_scalar_quadratic();
    auto c = cfg(0.5, 200, 20000, 4);
    c.record_every = 50;
    const auto s = run_coupled(o, LinearProcessSpec::iid(), c);
    CHECK(s.n.back() == 200);
    CHECK(std::abs(s.msd.mean.back() - 1.0 / 3.0) <= 3.0 * s.msd.se.back());
    for (std::size_t i = 1; i < s.sup_so_far.size(); ++i)
        CHECK(s.sup_so_far[i] >= s.sup_so_far[i - 1]);
    CHECK(s.replica_window_msd.size() == 20000);
    CHECK(s.window_start == 200 - 66);
}

TEST_CASE("record points include zero and the horizon") {
    const auto o = make_scalar_quadratic();
    auto c = cfg(0.1, 10, 8, 5);
    c.record_every = 4;
    const auto s = run_coupled(o, LinearProcessSpec::iid(), c);
    CHECK(s.n == std::vector<std::size_t>{0, 4, 8, 10});
}

TEST_CASE("determinism across reruns and worker counts") {
    const auto o = make_scalar_quadratic();
    LinearProcessSpec ma;
    ma.coeffs = {1.0, 0.5};
    auto c = cfg(0.2, 40, 300, 6);
    c.moment_orders = {1, 2};
    setenv("LANGMIX_THREADS", "1", 1);
    const auto a = run_coupled(o, ma, c);
    setenv("LANGMIX_THREADS", "3", 1);
    const auto b = run_coupled(o, ma, c);
    unsetenv("LANGMIX_THREADS");
    CHECK(a.msd.mean == b.msd.mean);
    CHECK(a.msd.se == b.msd.se);
    CHECK(a.moment_sgld.at(2).mean == b.moment_sgld.at(2).mean);
    CHECK(a.replica_window_msd == b.replica_window_msd);
}

TEST_CASE("ULA stationary variance") {
    const auto o = make_scalar_quadratic();
    auto c = cfg(0.5, 60, 20000, 7);
    c.moment_orders = {1};
    const auto r = run_ula(o, c);
    const auto& m = r.moments.at(1);
    CHECK(std::abs(m.mean.back() - 2.0 / 1.5) <= 3.0 * m.se.back());
    CHECK(r.final_states.cols() == 20000);
}

TEST_CASE("SGLD stationary second moment") {
    const auto o = make_scalar_quadratic();
    auto c = cfg(0.1, 300, 20000, 8);
    c.moment_orders = {1};
    c.record_every = 100;
    const auto r = run_sgld(o, LinearProcessSpec::iid(), c);
    const auto& m = r.moments.at(1);
    CHECK(std::abs(m.mean.back() - 2.1 / 1.9) <= 3.0 * m.se.back());
}

TEST_CASE("zero-step moment trace starts at zero") {
    const auto o = make_scalar_quadratic();
    auto c = cfg(0.1, 0, 16, 9);
    c.moment_orders = {1, 3};
    const auto r = run_sgld(o, LinearProcessSpec::iid(), c);
    CHECK(r.n == std::vector<std::size_t>{0});
    CHECK(r.moments.at(3).mean[0] == 0.0);
}

TEST_CASE("contraction of shared-noise ULA chains") {
    const auto o = make_scalar_quadratic();
    auto c = cfg(0.1, 100, 4000, 10);
    c.record_every = 10;
    const auto s = run_ula_contraction(o, c, InitialLaw{v1(0.0), 1.0}, InitialLaw{v1(5.0), 1.0});
    CHECK(s.initial_sq == doctest::Approx(27.0));
    const double at = 0.5;
    for (std::size_t i = 0; i < s.n.size(); ++i)
        CHECK(s.msd.mean[i] <= std::exp(-2 * at * 0.1 * s.n[i]) * s.initial_sq + 3 * s.msd.se[i]);
}

TEST_CASE("auxiliary blocks") {
    const auto o = make_scalar_quadratic();
    auto c = cfg(0.1, 100, 2000, 11);
    c.record_every = 10; // = T, so every record is a block boundary
    const auto b = run_auxiliary_blocks(o, LinearProcessSpec::iid(), c);
    CHECK(b.block_length == 10);
    for (double v : b.sgld_to_aux.mean)
        CHECK(v == 0.0);

    c.record_every = 3;
    const auto t = run_auxiliary_blocks(o, LinearProcessSpec::iid(), c);
    for (std::size_t i = 0; i < t.n.size(); ++i) {
        const double lhs = std::sqrt(t.sgld_to_aux.mean[i]) + std::sqrt(t.aux_to_ula.mean[i]);
        const double se = t.sgld_to_aux.se[i] + t.aux_to_ula.se[i] + t.coupled.se[i];
        CHECK(lhs * lhs >= t.coupled.mean[i] - 3 * se);
    }

    const auto flat = run_auxiliary_blocks(make_scalar_quadratic(1.0, 0.0), LinearProcessSpec::iid(), c);
    for (std::size_t i = 0; i < flat.n.size(); ++i) {
        CHECK(flat.sgld_to_aux.mean[i] == 0.0);
        CHECK(flat.aux_to_ula.mean[i] == 0.0);
    }
}

TEST_CASE("closed-form Gaussian laws") {
    const auto o = make_scalar_quadratic();
    CHECK(stationary_ula_gaussian(o, 1.0).cov(0, 0) == doctest::Approx(2.0));
    CHECK(stationary_ula_gaussian(o, 1e-9).cov(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
    Matrix S = Matrix::Zero(2, 2);
    S.diagonal() << 1.0, 2.0;
    const auto o2 = make_quadratic_oracle({S, Vector::Zero(2), Matrix::Identity(2, 2)});
    const auto g = stationary_ula_gaussian(o2, 0.1);
    // v_i = 2 lambda / (1 - (1 - lambda s_i)^2)
    CHECK(g.cov(0, 0) == doctest::Approx(0.2 / (1 - 0.81)));
    CHECK(g.cov(1, 1) == doctest::Approx(0.2 / (1 - 0.64)));
    CHECK(g.cov(0, 1) == 0.0);
    CHECK_THROWS_AS(stationary_ula_gaussian(o2, 1.0), HypothesisViolation);
    const auto t = target_gaussian(o2);
    CHECK(t.cov(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("initial-law moments") {
    const Vector zero = Vector::Zero(3);
    InitialLaw point{Vector::Constant(3, 1.0), 0.0};
    CHECK(point.moment(zero, 2) == doctest::Approx(9.0)); // |(1,1,1)|^4
    InitialLaw centred{Vector(), 2.0};
    // E|2 Z|^4 in d = 3: 16 * d (d+2) = 240
    CHECK(centred.moment(zero, 2) == doctest::Approx(240.0));
    CHECK(centred.norm_2q(zero, 1) == doctest::Approx(std::sqrt(12.0)));
    // d = 1, N(3, 1): E X^4 = 81 + 6*9 + 3 = 138
    InitialLaw shifted{v1(3.0), 1.0};
    CHECK(shifted.moment(v1(0.0), 2) == doctest::Approx(138.0));
    CHECK(shifted.sq_dev(v1(0.0)) == doctest::Approx(10.0));
    // d = 2, mean (1,0), sd 1: E|X|^4 = E(1+Z1)^4 + 2 E(1+Z1)^2 E Z2^2 + E Z2^4 = 10 + 4 + 3
    InitialLaw two{Vector::Unit(2, 0), 1.0};
    CHECK(two.moment(Vector::Zero(2), 2) == doctest::Approx(17.0));
}
