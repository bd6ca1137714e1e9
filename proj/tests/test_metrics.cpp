#include "doctest.h"

#include "langmix/metrics.hpp"
#include "langmix/rng.hpp"

#include <cmath>
#include <vector>

using namespace langmix;

namespace {

GaussianLaw law(std::initializer_list<double> mean, Matrix cov) {
    Vector m(static_cast<Eigen::Index>(mean.size()));
    Eigen::Index i = 0;
    for (double v : mean)
        m[i++] = v;
    return {m, std::move(cov)};
}

Matrix cloud(NormalSource& ns, Eigen::Index n, Eigen::Index d) {
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            m(i, j) = ns();
    return m;
}

} // namespace

TEST_CASE("w2 in one dimension") {
    const std::vector<double> a{0.0, 2.0}, b{1.0, 3.0}, p{0.0}, q{3.0};
    CHECK(w2_empirical_1d(a, a) == 0.0);
    CHECK(w2_empirical_1d(p, q) == doctest::Approx(3.0));
    CHECK(w2_empirical_1d(a, b) == doctest::Approx(1.0));
    // unequal sizes: quantile cells (1/3,1/2) and (1/2,2/3) each cost 1/4, W2^2 = 1/12
    const std::vector<double> u{0.0, 1.0}, v{0.0, 0.5, 1.0};
    CHECK(w2_empirical_1d(u, v) == doctest::Approx(std::sqrt(1.0 / 12.0)));
    CHECK(w2_empirical_1d(v, u) == doctest::Approx(std::sqrt(1.0 / 12.0)));
    const std::vector<double> empty;
    CHECK_THROWS_AS(w2_empirical_1d(empty, a), DomainError);
}

TEST_CASE("w2 consistency for shifted normals") {
    NormalSource s1(1), s2(2);
    std::vector<double> x(10000), y(10000);
    for (auto& v : x)
        v = s1();
    for (auto& v : y)
        v = 1.0 + s2();
    CHECK(std::abs(w2_empirical_1d(x, y) - 1.0) <= 0.03);
}

TEST_CASE("Bures distance") {
    const Matrix one = Matrix::Identity(1, 1), four = 4.0 * Matrix::Identity(1, 1);
    CHECK(w2_gaussian(law({0.0}, one), law({0.0}, four)) == doctest::Approx(1.0));
    CHECK(w2_gaussian(law({0.0}, one), law({0.0}, one)) == 0.0);
    const double v = 2.0 / 1.9;
    CHECK(w2_gaussian(law({0.0, 0.0}, Matrix::Identity(2, 2)), law({0.0, 0.0}, v * Matrix::Identity(2, 2))) ==
          doctest::Approx(0.0367394).epsilon(1e-5));
    CHECK(w2_gaussian(law({0.0}, one), law({3.0}, one)) == doctest::Approx(3.0));

    // full-matrix path: rotating both laws leaves the distance unchanged
    Matrix Q(2, 2);
    Q << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
    Matrix D1 = Matrix::Zero(2, 2), D2 = Matrix::Zero(2, 2);
    D1.diagonal() << 1.0, 4.0;
    D2.diagonal() << 9.0, 1.0;
    const double diag = w2_gaussian(law({0.0, 0.0}, D1), law({0.0, 0.0}, D2));
    CHECK(diag == doctest::Approx(std::sqrt(4.0 + 1.0)));
    CHECK(w2_gaussian(law({0.0, 0.0}, Q * D1 * Q.transpose()), law({0.0, 0.0}, Q * D2 * Q.transpose())) ==
          doctest::Approx(diag).epsilon(1e-10));
    // indefinite covariance
    Matrix bad = Matrix::Identity(2, 2);
    bad(1, 1) = -1.0;
    CHECK_THROWS_AS(w2_gaussian(law({0.0, 0.0}, bad), law({0.0, 0.0}, Matrix::Identity(2, 2))), DomainError);
}

TEST_CASE("sqrt_psd") {
    Matrix A(2, 2);
    A << 2.0, 1.0, 1.0, 2.0;
    const Matrix R = sqrt_psd(A);
    CHECK((R * R - A).norm() <= 1e-12);
    Matrix Z = Matrix::Zero(2, 2);
    Z(0, 0) = -1e-14;
    CHECK(sqrt_psd(Z).norm() == 0.0);
}

TEST_CASE("quantile distance to a normal") {
    const std::vector<double> zero{0.0};
    CHECK(w2_empirical_to_normal(zero, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(w2_empirical_to_normal(zero, 2.0, 0.0) == doctest::Approx(2.0));
    NormalSource ns(3);
    std::vector<double> xs(200000);
    for (auto& x : xs)
        x = ns();
    CHECK(w2_empirical_to_normal(xs, 0.0, 1.0) < 0.02);
    CHECK(w2_empirical_to_normal(xs, 0.0, 1.1) == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("assignment solver") {
    Matrix c(3, 3);
    c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    const auto a = solve_assignment(c);
    CHECK(a.cost == doctest::Approx(5.0)); // 1 + 2 + 2
    CHECK(a.match == std::vector<int>{1, 0, 2});

    Matrix p(2, 2), q(2, 2);
    p << 0, 0, 1, 0;
    q << 1, 0, 0, 0;
    CHECK(w2_assignment(EmpiricalMeasure(p), EmpiricalMeasure(q)) == 0.0);

    NormalSource ns(4);
    const std::vector<double> x{0.3, -1.2, 2.5, 0.0, 0.7}, y{1.1, 0.4, -0.5, 3.0, -2.0};
    CHECK(w2_assignment(EmpiricalMeasure::from_1d(x), EmpiricalMeasure::from_1d(y)) ==
          doctest::Approx(w2_empirical_1d(x, y)).epsilon(1e-12));
    const Matrix m = cloud(ns, 30, 3);
    CHECK(w2_assignment(EmpiricalMeasure(m), EmpiricalMeasure(m)) == 0.0);
    CHECK_THROWS(w2_assignment(EmpiricalMeasure(cloud(ns, 3, 2)), EmpiricalMeasure(cloud(ns, 4, 2))));
    CHECK_THROWS(w2_assignment(EmpiricalMeasure(Matrix::Zero(2049, 1)), EmpiricalMeasure(Matrix::Zero(2049, 1))));
}

TEST_CASE("assignment metric axioms on random triples") {
    NormalSource ns(5);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index n = 8 + 4 * (t % 5);
        EmpiricalMeasure a(cloud(ns, n, 2)), b(cloud(ns, n, 2)), c(cloud(ns, n, 2));
        const double ab = w2_assignment(a, b), ba = w2_assignment(b, a), bc = w2_assignment(b, c), ac = w2_assignment(a, c);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ac <= ab + bc + 1e-12);
    }
}

TEST_CASE("Gaussian norm moments") {
    auto m11 = gaussian_norm_moment(1, 1);
    CHECK(m11.exact == doctest::Approx(1.0));
    CHECK(m11.bound == doctest::Approx(4.0));
    auto m22 = gaussian_norm_moment(2, 2);
    CHECK(m22.exact == doctest::Approx(8.0));
    CHECK(m22.bound == doctest::Approx(512.0));
    auto m31 = gaussian_norm_moment(3, 1);
    CHECK(m31.exact == doctest::Approx(3.0));
    CHECK(m31.bound == doctest::Approx(12.0));
    for (int d = 1; d <= 10; ++d)
        for (int r = 1; r <= 6; ++r)
            CHECK(gaussian_norm_moment(d, r).holds);
}

TEST_CASE("Gaussian norm moments against Monte Carlo") {
    NormalSource ns(6);
    for (int d = 1; d <= 5; ++d)
        for (int r = 1; r <= 3; ++r) {
            const int n = 200000;
            double s = 0.0, ss = 0.0;
            for (int i = 0; i < n; ++i) {
                double q = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double z = ns();
                    q += z * z;
                }
                const double v = std::pow(q, r);
                s += v;
                ss += v * v;
            }
            const double m = s / n, se = std::sqrt((ss / n - m * m) / n);
            CHECK(std::abs(m - gaussian_norm_moment(d, r).exact) <= 3.0 * se);
        }
}

TEST_CASE("multinomial inequality") {
    Vector x(2), y = Vector::Zero(2);
    x << 1.0, -2.0;
    for (int p = 1; p <= 4; ++p) {
        auto c = multinomial_inequality_check(x, y, p);
        CHECK(c.lhs == doctest::Approx(std::pow(5.0, p)));
        CHECK(c.rhs == doctest::Approx(std::pow(5.0, p)));
        CHECK(c.pass);
    }
    // p = 1 by hand: lhs = |x|^2 + |y|^2, rhs = |x|^2 + |y|^2
    Vector u(2), v(2);
    u << 1.0, 0.0;
    v << 0.5, 0.5;
    auto one = multinomial_inequality_check(u, v, 1);
    CHECK(one.lhs == doctest::Approx(1.5));
    CHECK(one.rhs == doctest::Approx(1.5));

    NormalSource ns(7);
    int fails = 0;
    for (int t = 0; t < 1000; ++t) {
        const int d = 1 + t % 4, p = 1 + t % 4;
        Vector a(d), b(d);
        ns.fill(a);
        ns.fill(b);
        fails += multinomial_inequality_check(a, b, p).pass ? 0 : 1;
    }
    CHECK(fails == 0);
    CHECK_THROWS(multinomial_inequality_check(u, v, 0));
    CHECK_THROWS(multinomial_inequality_check(u, v, 11));
}
