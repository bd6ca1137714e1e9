#pragma once

// Wasserstein-2 estimators and two elementary inequality checks.
//
// Empirical measures hold one point per row with implicit uniform weights.

#include "langmix/types.hpp"

#include <span>
#include <vector>

namespace langmix {

struct EmpiricalMeasure {
    Matrix samples; // n x d

    EmpiricalMeasure() = default;
    explicit EmpiricalMeasure(Matrix s);
    static EmpiricalMeasure from_1d(std::span<const double> xs);

    Eigen::Index size() const { return samples.rows(); }
    Eigen::Index dim() const { return samples.cols(); }
};

struct GaussianLaw {
    Vector mean;
    Matrix cov;
};

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kEigenClamp = 1e-12;
inline constexpr Eigen::Index kAssignmentMax = 2048;

// Symmetric PSD square root; eigenvalues in [-kEigenClamp, 0) are clamped.
template <class Derived>
Matrix sqrt_psd(const Eigen::MatrixBase<Derived>& A) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(A.derived());
    Vector ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -kPsdTolerance * scale)
        throw DomainError("matrix is not positive semidefinite");
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        ev[i] = ev[i] < kEigenClamp * scale ? 0.0 : std::sqrt(ev[i]);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void validate(const GaussianLaw& g);

// exact via the monotone coupling; unequal sizes integrate the quantile functions
double w2_empirical_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);
double w2_empirical_1d(std::span<const double> mu, std::span<const double> nu);

// Bures closed form; diagonal covariances take the coordinatewise path
double w2_gaussian(const GaussianLaw& p, const GaussianLaw& q);

// W2 between the empirical law of xs and N(mean, sd^2), integrating the
// Gaussian quantile exactly on each of the n quantile cells.
double w2_empirical_to_normal(std::span<const double> xs, double mean, double sd);

// sqrt of the sum over coordinates of squared marginal distances to the
// diagonal Gaussian law q (cov must be diagonal)
double w2_marginal_to_gaussian(const EmpiricalMeasure& mu, const GaussianLaw& q);

struct Assignment {
    std::vector<int> match; // row i -> column match[i]
    double cost = 0.0;
};

// Minimum-cost perfect matching on a square cost matrix, O(n^3).
Assignment solve_assignment(const Matrix& cost);

// exact discrete OT between equal-size uniform clouds
double w2_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

struct NormMoment {
    double exact = 0.0; // E|xi|^{2r}, xi ~ N(0, I_d)
    double bound = 0.0; // 2^{2r} d^r r^{3r/2}
    bool holds = false;
};

NormMoment gaussian_norm_moment(int d, int r);

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

// lhs: multinomial expansion of (|x|^2 + 2<x,y> + |y|^2)^p with the single
// term (i,j,k) = (p-1,1,0) removed; rhs: sum_{k != 1} C(2p,k)|x|^{2p-k}|y|^k.
InequalityCheck multinomial_inequality_check(const Vector& x, const Vector& y, int p);

} // namespace langmix
