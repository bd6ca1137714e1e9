#pragma once

// Gradient oracles H(theta, x) and mean fields h(theta) with their declared
// structural constants.
//
// Batch entry points take matrices whose columns are independent points
// (one column per replica); the scalar entry points wrap them.

#include "langmix/streams.hpp"
#include "langmix/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace langmix {

using BatchGradient = std::function<void(const Eigen::Ref<const Matrix>& theta, const Eigen::Ref<const Matrix>& x,
                                         Eigen::Ref<Matrix> out)>;
using BatchMeanField = std::function<void(const Eigen::Ref<const Matrix>& theta, Eigen::Ref<Matrix> out)>;

struct DeclaredConstants {
    Vector theta_star;
    double a = 0.0;
    std::vector<double> L1_per_coord;
    std::vector<double> L2_per_coord;
};

class GradientOracle {
  public:
    GradientOracle() = default;
    // H_star is recomputed from H at (theta*, 0); it is never taken on trust.
    GradientOracle(int d, int m, BatchGradient H, std::optional<BatchMeanField> h, DeclaredConstants c,
                   std::string family = "custom");

    int dim() const { return d_; }
    int data_dim() const { return m_; }
    const std::string& family() const { return family_; }

    Vector eval_H(const Vector& theta, const Vector& x) const;
    // closed form only; UnsupportedOperation otherwise (see estimate_h)
    Vector eval_h(const Vector& theta) const;
    void eval_H_batch(const Eigen::Ref<const Matrix>& theta, const Eigen::Ref<const Matrix>& x,
                      Eigen::Ref<Matrix> out) const;
    void eval_h_batch(const Eigen::Ref<const Matrix>& theta, Eigen::Ref<Matrix> out) const;
    bool has_closed_form_h() const { return impl_ && impl_->h.has_value(); }

    const Vector& theta_star() const { return impl_->c.theta_star; }
    double a() const { return impl_->c.a; }
    const std::vector<double>& L1_per_coord() const { return impl_->c.L1_per_coord; }
    const std::vector<double>& L2_per_coord() const { return impl_->c.L2_per_coord; }
    double L1() const { return L1_; }
    double L2() const { return L2_; }
    double H_star() const { return H_star_; }

  private:
    struct Impl {
        BatchGradient H;
        std::optional<BatchMeanField> h;
        DeclaredConstants c;
    };
    std::shared_ptr<const Impl> impl_;
    int d_ = 0;
    int m_ = 0;
    double L1_ = 0.0;
    double L2_ = 0.0;
    double H_star_ = 0.0;
    std::string family_;
};

// H(theta, x) = S (theta - theta*) + B x
struct QuadraticSpec {
    Matrix S;
    Vector theta_star;
    Matrix B;
};

// a = lambda_min(S), L1^i = |row_i(S)|, L2^i = |row_i(B)|.
GradientOracle make_quadratic_oracle(const QuadraticSpec& spec);
// declared constants given explicitly (for validation experiments)
GradientOracle make_quadratic_oracle(const QuadraticSpec& spec, DeclaredConstants declared);
// d = m = 1, S = s, B = b, theta* = 0
GradientOracle make_scalar_quadratic(double s = 1.0, double b = 1.0);

// H(theta, x) = s (1+|x|)^rho (theta - theta*) + b x with x ~ N(0, I_d).
struct IidRhoSpec {
    int d = 1;
    double s = 1.0;
    double rho = 0.0;
    double b = 1.0;
    Vector theta_star; // empty means zero
};

struct IidOracle {
    GradientOracle oracle; // declared a, L1 are the mean-field constants
    IidRhoSpec spec;
    double rho = 0.0;
    double L1 = 0.0; // |H(t,x)-H(t',x)| <= L1 (1+|x|)^rho |t-t'|
    double L2 = 0.0; // |H(t,x)-H(t,x')| <= L2 (1+|x|+|x'|)^rho (1+|t|) |x-x'|
    double a = 0.0; // lambda_min E[A(X)]
    double mean_growth = 0.0; // E(1+|X|)^rho, the mean-field Lipschitz factor
    Matrix A(const Vector& x) const;
};

IidOracle make_iid_rho_oracle(const IidRhoSpec& spec);

// E[(1+|X|)^q |X|^k] for X ~ N(0, I_m), by quadrature over the chi density
double gaussian_norm_expectation(int m, double q, int k = 0);

struct MeanFieldEstimate {
    Vector mean;
    Vector std_error;
    std::size_t samples = 0;
};

// Monte Carlo h(theta) = E H(theta, X) over the stationary stream law
MeanFieldEstimate estimate_h(const GradientOracle& oracle, const Vector& theta, const LinearProcessSpec& stream,
                             std::size_t samples, std::uint64_t seed);

struct ConstantViolation {
    std::string kind; // "monotonicity" | "lipschitz"
    int coord = -1;
    Vector theta, theta_prime, x, x_prime;
    double lhs = 0.0, rhs = 0.0;
};

struct StructuralReport {
    std::size_t trials = 0;
    std::size_t violation_count = 0;
    std::vector<ConstantViolation> witnesses; // first few only
    double box = 10.0;
};

// theta, theta' uniform on [-R,R]^d and x, x' uniform on [-R,R]^m; every
// tenth trial is an axis probe (theta - theta' along a coordinate or an
// eigenvector-like direction of the empirical Jacobian) and x = x' in half
// the trials, so the monotonicity inequality is also tested at equal data.
StructuralReport check_structural_constants(const GradientOracle& oracle, std::size_t trials, std::uint64_t seed,
                                            double R = 10.0);

// Local-Lipschitz bound and A(x) >= 0 on sampled pairs.
StructuralReport check_iid_constants(const IidOracle& oracle, std::size_t trials, std::uint64_t seed, double R = 10.0);

} // namespace langmix
