#include "langmix/metrics.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace langmix {

namespace {

std::vector<double> sorted_copy(std::span<const double> xs) {
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    return v;
}

bool is_diagonal(const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (i != j && m(i, j) != 0.0)
                return false;
    return true;
}

// exact in double up to 22!
double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

double binom(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

double multinom(int p, int i, int j, int k) { return factorial(p) / (factorial(i) * factorial(j) * factorial(k)); }

} // namespace

EmpiricalMeasure::EmpiricalMeasure(Matrix s) : samples(std::move(s)) {
    if (!samples.allFinite())
        throw DomainError("empirical measure has non-finite coordinates");
}

EmpiricalMeasure EmpiricalMeasure::from_1d(std::span<const double> xs) {
    Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
    for (std::size_t i = 0; i < xs.size(); ++i)
        m(static_cast<Eigen::Index>(i), 0) = xs[i];
    return EmpiricalMeasure(std::move(m));
}

void validate(const GaussianLaw& g) {
    const auto d = g.mean.size();
    if (d == 0 || g.cov.rows() != d || g.cov.cols() != d)
        throw ContractViolation("Gaussian law shape mismatch");
    if ((g.cov - g.cov.transpose()).cwiseAbs().maxCoeff() > kPsdTolerance * (1.0 + g.cov.cwiseAbs().maxCoeff()))
        throw DomainError("covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPsdTolerance * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
        throw DomainError("covariance is not positive semidefinite");
}

double w2_empirical_1d(std::span<const double> mu, std::span<const double> nu) {
    if (mu.empty() || nu.empty())
        throw DomainError("empty measure");
    const auto a = sorted_copy(mu), b = sorted_copy(nu);
    const std::size_t n = a.size(), m = b.size();
    double acc = 0.0;
    if (n == m) {
        for (std::size_t i = 0; i < n; ++i)
            acc += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(acc / static_cast<double>(n));
    }
    // merge the breakpoints i/n and j/m in integer arithmetic: u = t/(n m)
    std::size_t i = 0, j = 0, t = 0;
    const std::size_t total = n * m;
    while (t < total) {
        const std::size_t next_a = (i + 1) * m, next_b = (j + 1) * n;
        const std::size_t stop = std::min(next_a, next_b);
        const double diff = a[i] - b[j];
        acc += diff * diff * static_cast<double>(stop - t);
        t = stop;
        if (t == next_a)
            ++i;
        if (t == next_b)
            ++j;
    }
    return std::sqrt(acc / static_cast<double>(total));
}

double w2_empirical_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.size() == 0 || nu.size() == 0)
        throw DomainError("empty measure");
    if (mu.dim() != 1 || nu.dim() != 1)
        throw ContractViolation("w2_empirical_1d needs one-dimensional samples");
    return w2_empirical_1d(std::span<const double>(mu.samples.data(), static_cast<std::size_t>(mu.size())),
                           std::span<const double>(nu.samples.data(), static_cast<std::size_t>(nu.size())));
}

double w2_gaussian(const GaussianLaw& p, const GaussianLaw& q) {
    validate(p);
    validate(q);
    if (p.mean.size() != q.mean.size())
        throw ContractViolation("Gaussian laws live in different dimensions");
    double w = (p.mean - q.mean).squaredNorm();
    if (is_diagonal(p.cov) && is_diagonal(q.cov)) {
        for (Eigen::Index i = 0; i < p.mean.size(); ++i) {
            const double s = std::sqrt(std::max(0.0, p.cov(i, i))) - std::sqrt(std::max(0.0, q.cov(i, i)));
            w += s * s;
        }
        return std::sqrt(w);
    }
    const Matrix r = sqrt_psd(q.cov);
    const Matrix mid = r * p.cov * r;
    const Matrix cross = sqrt_psd(0.5 * (mid + mid.transpose()));
    w += (p.cov + q.cov - 2.0 * cross).trace();
    return std::sqrt(std::max(0.0, w));
}

double w2_empirical_to_normal(std::span<const double> xs, double mean, double sd) {
    if (xs.empty())
        throw DomainError("empty measure");
    if (!(sd >= 0.0))
        throw DomainError("negative standard deviation");
    const auto v = sorted_copy(xs);
    const std::size_t n = v.size();
    const boost::math::normal_distribution<double> N01;
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    auto phi = [&](double z) { return std::isinf(z) ? 0.0 : inv_sqrt2pi * std::exp(-0.5 * z * z); };
    auto zphi = [&](double z) { return std::isinf(z) ? 0.0 : z * phi(z); };
    auto zq = [&](std::size_t i) {
        if (i == 0)
            return -std::numeric_limits<double>::infinity();
        if (i == n)
            return std::numeric_limits<double>::infinity();
        return boost::math::quantile(N01, static_cast<double>(i) / static_cast<double>(n));
    };
    const double w = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    double z_lo = zq(0);
    for (std::size_t i = 0; i < n; ++i) {
        const double z_hi = zq(i + 1);
        // cell moments of Z restricted to (z_lo, z_hi), scaled by 1/w
        const double m1 = (phi(z_lo) - phi(z_hi)) / w;
        const double m2 = (w + zphi(z_lo) - zphi(z_hi)) / w;
        const double c = v[i] - mean - sd * m1;
        acc += w * (c * c + sd * sd * std::max(0.0, m2 - m1 * m1));
        z_lo = z_hi;
    }
    return std::sqrt(acc);
}

double w2_marginal_to_gaussian(const EmpiricalMeasure& mu, const GaussianLaw& q) {
    validate(q);
    if (mu.dim() != q.mean.size())
        throw ContractViolation("dimension mismatch");
    if (!is_diagonal(q.cov))
        throw UnsupportedOperation("marginal quantile distance needs a diagonal covariance");
    double acc = 0.0;
    std::vector<double> col(static_cast<std::size_t>(mu.size()));
    for (Eigen::Index j = 0; j < mu.dim(); ++j) {
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            col[static_cast<std::size_t>(i)] = mu.samples(i, j);
        const double wj = w2_empirical_to_normal(col, q.mean[j], std::sqrt(q.cov(j, j)));
        acc += wj * wj;
    }
    return std::sqrt(acc);
}

Assignment solve_assignment(const Matrix& cost) {
    const auto n = static_cast<int>(cost.rows());
    if (cost.cols() != n)
        throw ContractViolation("assignment needs a square cost matrix");
    Assignment out;
    if (n == 0)
        return out;
    // shortest augmenting path with potentials, 1-based bookkeeping
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    out.match.assign(n, -1);
    for (int j = 1; j <= n; ++j)
        out.match[p[j] - 1] = j - 1;
    for (int i = 0; i < n; ++i)
        out.cost += cost(i, out.match[i]);
    return out;
}

double w2_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.size() == 0 || nu.size() == 0)
        throw DomainError("empty measure");
    if (mu.size() != nu.size())
        throw DomainError("w2_assignment needs equal sample counts; subsample the larger cloud");
    if (mu.size() > kAssignmentMax)
        throw DomainError("w2_assignment is limited to 2048 points; subsample both clouds");
    if (mu.dim() != nu.dim())
        throw ContractViolation("clouds live in different dimensions");
    const auto n = mu.size();
    Matrix C(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            C(i, j) = (mu.samples.row(i) - nu.samples.row(j)).squaredNorm();
    const Assignment a = solve_assignment(C);
    return std::sqrt(std::max(0.0, a.cost / static_cast<double>(n)));
}

NormMoment gaussian_norm_moment(int d, int r) {
    if (d < 1 || r < 1)
        throw DomainError("gaussian_norm_moment needs d, r >= 1");
    NormMoment out;
    // 2^r Gamma(d/2 + r) / Gamma(d/2) = prod_{j<r} (d + 2j)
    out.exact = 1.0;
    for (int j = 0; j < r; ++j)
        out.exact *= d + 2.0 * j;
    out.bound = std::pow(2.0, 2.0 * r) * std::pow(static_cast<double>(d), r) * std::pow(static_cast<double>(r), 1.5 * r);
    out.holds = out.exact <= out.bound;
    return out;
}

InequalityCheck multinomial_inequality_check(const Vector& x, const Vector& y, int p) {
    if (p < 1 || p > 10)
        throw DomainError("multinomial check needs 1 <= p <= 10");
    if (x.size() != y.size())
        throw ContractViolation("x and y differ in dimension");
    const double nx = x.norm(), ny = y.norm(), ip = x.dot(y);
    InequalityCheck out;
    for (int i = 0; i <= p; ++i)
        for (int j = 0; i + j <= p; ++j) {
            const int k = p - i - j;
            if (i == p - 1 && j == 1)
                continue;
            out.lhs += multinom(p, i, j, k) * std::pow(nx, 2 * i) * std::pow(2.0 * ip, j) * std::pow(ny, 2 * k);
        }
    for (int k = 0; k <= 2 * p; ++k) {
        if (k == 1)
            continue;
        out.rhs += binom(2 * p, k) * std::pow(nx, 2 * p - k) * std::pow(ny, k);
    }
    out.pass = out.lhs <= out.rhs * (1.0 + 1e-12) + 1e-300;
    return out;
}

} // namespace langmix
