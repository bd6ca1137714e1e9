#include "doctest.h"

#include "langmix/constants.hpp"
#include "langmix/model.hpp"
#include "langmix/rng.hpp"

#include <cmath>

using namespace langmix;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

QuadraticSpec diag_spec(std::initializer_list<double> s, double b) {
    const Vector sv = vec(s);
    const auto d = sv.size();
    return {sv.asDiagonal(), Vector::Zero(d), b * Matrix::Identity(d, d)};
}

} // namespace

TEST_CASE("quadratic oracle evaluations") {
    const auto o = make_scalar_quadratic();
    CHECK(o.eval_H(vec({2.0}), vec({3.0}))[0] == doctest::Approx(5.0));
    CHECK(o.eval_h(vec({2.0}))[0] == doctest::Approx(2.0));
    CHECK(o.eval_h(o.theta_star()).norm() == 0.0);
    CHECK(o.H_star() == 0.0);
    CHECK(o.a() == doctest::Approx(1.0));
    CHECK(o.L1() == doctest::Approx(1.0));
    CHECK(o.L2() == doctest::Approx(1.0));

    const auto o2 = make_quadratic_oracle(diag_spec({1.0, 2.0}, 0.0));
    const Vector H = o2.eval_H(vec({1.0, 1.0}), vec({-7.0, 9.0}));
    CHECK(H[0] == doctest::Approx(1.0));
    CHECK(H[1] == doctest::Approx(2.0));
    CHECK(o2.L1() == doctest::Approx(3.0));
    CHECK(o2.L2() == 0.0);
}

TEST_CASE("dimension mismatch is a contract violation") {
    const auto o = make_quadratic_oracle(diag_spec({1.0, 2.0}, 1.0));
    CHECK_THROWS_AS(o.eval_H(vec({1.0}), vec({0.0, 0.0})), ContractViolation);
    CHECK_THROWS_AS(o.eval_H(vec({1.0, 1.0}), vec({0.0})), ContractViolation);
    CHECK_THROWS_AS(o.eval_h(vec({1.0, 2.0, 3.0})), ContractViolation);
}

TEST_CASE("quadratic spec validation") {
    QuadraticSpec bad{Matrix::Identity(2, 2), Vector::Zero(2), Matrix::Identity(2, 2)};
    bad.S(0, 1) = 0.5; // not symmetric
    CHECK_THROWS(make_quadratic_oracle(bad));
    QuadraticSpec indef{vec({1.0, -1.0}).asDiagonal(), Vector::Zero(2), Matrix::Identity(2, 2)};
    CHECK_THROWS(make_quadratic_oracle(indef));
}

TEST_CASE("H_star is recomputed, not declared") {
    // H(theta, x) = theta - 1 + 0.3 + x with declared theta* = 1: H(theta*, 0) = 0.3
    BatchGradient H = [](const Eigen::Ref<const Matrix>& t, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out) {
        out = t.array() - 0.7 + x.array();
    };
    DeclaredConstants c{vec({1.0}), 1.0, {1.0}, {1.0}};
    GradientOracle o(1, 1, H, std::nullopt, c);
    CHECK(o.H_star() == doctest::Approx(0.3));
    CHECK_FALSE(o.has_closed_form_h());
    CHECK_THROWS_AS(o.eval_h(vec({0.0})), UnsupportedOperation);
}

TEST_CASE("declared constants are validated") {
    BatchGradient H = [](const Eigen::Ref<const Matrix>& t, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out) {
        out = t + x;
    };
    CHECK_THROWS(GradientOracle(1, 1, H, std::nullopt, DeclaredConstants{vec({0.0}), 0.0, {1.0}, {1.0}}));
    CHECK_THROWS(GradientOracle(1, 1, H, std::nullopt, DeclaredConstants{vec({0.0}), 1.0, {0.0}, {1.0}}));
    CHECK_THROWS(GradientOracle(1, 1, H, std::nullopt, DeclaredConstants{vec({0.0}), 1.0, {1.0, 1.0}, {1.0}}));
}

TEST_CASE("Monte Carlo mean field within 3 SE") {
    const auto o = make_scalar_quadratic();
    const auto est = estimate_h(o, vec({1.0}), LinearProcessSpec::iid(), 1000000, 5);
    CHECK(est.samples == 1000000);
    CHECK(est.std_error[0] == doctest::Approx(1e-3).epsilon(0.02));
    CHECK(std::abs(est.mean[0] - 1.0) <= 3.0 * est.std_error[0]);
}

TEST_CASE("structural checks") {
    const auto spec = diag_spec({1.0}, 1.0);
    CHECK(check_structural_constants(make_quadratic_oracle(spec), 10000, 1).violation_count == 0);

    auto too_convex = make_quadratic_oracle(spec, DeclaredConstants{Vector::Zero(1), 1.5, {1.0}, {1.0}});
    const auto r1 = check_structural_constants(too_convex, 10000, 1);
    CHECK(r1.violation_count >= 1);
    REQUIRE_FALSE(r1.witnesses.empty());
    CHECK(r1.witnesses.front().kind == "monotonicity");

    // S = diag(1, 3): declared L1^2 = 2 sits below |row_2| = 3
    auto spec2 = diag_spec({1.0, 3.0}, 1.0);
    auto weak_l1 = make_quadratic_oracle(spec2, DeclaredConstants{Vector::Zero(2), 1.0, {1.0, 2.0}, {1.0, 1.0}});
    const auto r2 = check_structural_constants(weak_l1, 10000, 2);
    CHECK(r2.violation_count >= 1);
    bool lip = false;
    for (const auto& w : r2.witnesses)
        lip = lip || (w.kind == "lipschitz" && w.coord == 1);
    CHECK(lip);

    // rotated S with smallest eigenvalue 0.5: a = 0.6 must be caught
    Matrix Q(2, 2);
    Q << std::cos(0.4), -std::sin(0.4), std::sin(0.4), std::cos(0.4);
    const Matrix S = Q * vec({0.5, 2.0}).asDiagonal() * Q.transpose();
    QuadraticSpec rot{S, Vector::Zero(2), Matrix::Identity(2, 2)};
    CHECK(make_quadratic_oracle(rot).a() == doctest::Approx(0.5));
    auto wrong = make_quadratic_oracle(rot, DeclaredConstants{Vector::Zero(2), 0.6, {S.row(0).norm(), S.row(1).norm()}, {1.0, 1.0}});
    CHECK(check_structural_constants(wrong, 1000, 3).violation_count >= 1);
}

TEST_CASE("co-coercive mean field inequality on random pairs") {
    Matrix M(3, 3);
    M << 1.0, 0.2, -0.4, 0.3, 1.1, 0.5, -0.6, 0.1, 0.9;
    const Matrix Q = Eigen::HouseholderQR<Matrix>(M).householderQ();
    const Matrix S = Q * vec({0.7, 1.5, 2.5}).asDiagonal() * Q.transpose();
    const auto o = make_quadratic_oracle({S, vec({0.1, -0.2, 0.3}), Matrix::Identity(3, 3)});
    const auto b = compute_base(o.a(), o.L1(), o.L2(), o.dim());
    Xoshiro256pp g(99);
    for (int t = 0; t < 1000; ++t) {
        Vector x(3), y(3);
        for (int i = 0; i < 3; ++i) {
            x[i] = -10.0 + 20.0 * g.uniform();
            y[i] = -10.0 + 20.0 * g.uniform();
        }
        const Vector dh = o.eval_h(x) - o.eval_h(y);
        const double lhs = (x - y).dot(dh);
        const double rhs = b.a_tilde * (x - y).squaredNorm() + dh.squaredNorm() / (b.a + b.L1);
        CHECK(lhs >= rhs - 1e-9 * (1.0 + rhs));
    }
}

TEST_CASE("iid-rho family") {
    IidRhoSpec spec;
    spec.d = 2;
    spec.s = 1.0;
    spec.rho = 1.0;
    spec.b = 0.5;
    const auto io = make_iid_rho_oracle(spec);
    // a = s E(1+|X|) with |X| ~ chi_2: E|X| = sqrt(pi/2)
    CHECK(io.a == doctest::Approx(1.0 + std::sqrt(std::acos(-1.0) / 2.0)).epsilon(1e-8));
    CHECK(io.mean_growth == doctest::Approx(io.a));
    CHECK(check_iid_constants(io, 2000, 4).violation_count == 0);
    CHECK(io.A(vec({3.0, 4.0}))(0, 0) == doctest::Approx(6.0));

    spec.rho = 0.0;
    const auto flat = make_iid_rho_oracle(spec);
    CHECK(flat.a == doctest::Approx(1.0));
    CHECK(flat.oracle.eval_h(vec({1.0, 2.0}))[1] == doctest::Approx(2.0));
}

TEST_CASE("chi-density expectations") {
    CHECK(gaussian_norm_expectation(1, 0.0, 2) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(gaussian_norm_expectation(3, 0.0, 2) == doctest::Approx(3.0).epsilon(1e-9));
    // E(1+|X|)^2 for X ~ N(0,1) = 2 + 2 sqrt(2/pi)
    CHECK(gaussian_norm_expectation(1, 2.0, 0) == doctest::Approx(2.0 + 2.0 * std::sqrt(2.0 / std::acos(-1.0))).epsilon(1e-9));
}
