#pragma once

// Explicit constants of the moment bounds, the SGLD/ULA tracking bound and
// the two step-size planners.
//
// Terms that grow like 2^{p(2p-1)} are summed in log space; a LogValue keeps
// the natural log next to the (possibly infinite) value.

#include "langmix/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace langmix {

struct ConvexityConstants {
    double a = 0.0;
    double L1 = 0.0;
    double L2 = 0.0;
    double H_star = 0.0;
    int d = 1;
    double lambda_bar = 0.0; // 2/(a+L1)
    double a_tilde = 0.0; // a L1/(a+L1)

    double rho(double lambda) const { return 1.0 - a_tilde * lambda; }
};

// a, L1 > 0 and L2, H* >= 0 (L2 = 0 is the noiseless-data degenerate case).
ConvexityConstants compute_base(double a, double L1, double L2, int d, double H_star = 0.0);

struct LogValue {
    double log = 0.0; // natural log; -inf for zero
    double value = 0.0; // exp(log), +inf on overflow
    bool overflow = false;

    static LogValue from_log(double lg);
    double log10() const;
};

struct MomentConstant {
    int p = 1;
    LogValue C; // C'(p) or C''(p)
    double c = 0.0; // c'(p) or c''(p)
    bool dominance = false; // C^{1/2p} <= c
};

MomentConstant compute_Cprime(int p, int d, double a_tilde);

struct DataTerms {
    double L1 = 0.0;
    double L2 = 0.0;
    double theta_star_norm = 0.0;
    double H_star = 0.0;
    double script_M_2p = 0.0; // E|X|^{2p}
};

MomentConstant compute_Cdprime(int p, int d, double a_tilde, const DataTerms& data);

struct MixingInputs {
    std::map<int, double> script_M; // E|X|^q
    double C32 = 0.0; // script C_{3,2}
    double C21 = 0.0; // script C_{2,1}
    double M(int q) const;
};

// |theta_0 - theta*|_{2q}; the default is the point mass at theta*
using Theta0Moment = std::function<double(int q)>;

struct ChainInputs {
    ConvexityConstants base;
    double theta_star_norm = 0.0;
    MixingInputs mixing;
    Theta0Moment theta0_norm = [](int) { return 0.0; };
};

struct ChainReport {
    int p = 4;
    int q = 2;
    MomentConstant Cprime_q, Cdprime_q, Cprime_1, Cdprime_1;
    double Cunder_q = 0.0; // C underbar(p/2)
    double Cunder_1 = 0.0;
    double Cflat_stmt = 0.0;
    double Cflat_proof = 0.0;
    double Cstar = 0.0;
    double C0 = 0.0; // built on Cflat_stmt
    double C0_proof = 0.0; // same chain on Cflat_proof
};

// p even and >= 4
ChainReport compute_chain(int p, const ChainInputs& in);

struct Thm6Constants {
    double lambda = 0.0;
    double c_hat = 0.0;
    double c = 0.0;
};

// theta0_sq_dev = E|theta_0 - theta*|^2; lambda < lambda_bar
Thm6Constants thm6_constants(double lambda, const ConvexityConstants& base, double theta0_sq_dev = 0.0);
// c alone, without the lambda_bar guard (used for limits and scans)
double thm6_c(double lambda, const ConvexityConstants& base);

struct DependentPlan {
    double epsilon = 0.0;
    double kappa = 0.0;
    int p = 4;
    bool exponent_consistent = false; // 1/2 - 1/p >= 1/(2+kappa)
    int p_consistent = 4; // smallest even p >= 4 meeting the line above
    double C0 = 0.0;
    double c_hat = 0.0;
    double c = 0.0; // at the final lambda
    double c_initial = 0.0; // at lambda_bar / 2
    double C_tilde = 0.0;
    double c1_kappa = 0.0;
    double c2_kappa = 0.0;
    double lambda = 0.0;
    double n_min = 0.0; // may exceed 2^64; kept as double
    bool lambda_scaled = false;
    bool circularity_ok = false;
    double identity_bias = 0.0; // 2 C~ lambda^{1/(2+kappa)}
    double identity_contraction = 0.0; // a lambda n - ln(2 C~/eps)
    std::vector<std::string> warnings;
};

// smallest even p >= 4 with kappa > 2/(p-1)
int planner_order(double kappa);

DependentPlan plan_dependent(double epsilon, double kappa, const ChainInputs& in, double theta0_sq_dev = 0.0);

struct IidInputs {
    double a = 0.0; // lambda_min E[A(X)]
    double L1 = 0.0; // local Lipschitz scale
    double L2 = 0.0;
    double rho = 0.0;
    int d = 1;
    double H_star = 0.0;
    double theta_star_norm = 0.0;
    double theta0_sq_dev = 0.0;
    double E_rho = 1.0; // E(1+|X|)^rho
    double E_2rho = 1.0; // E(1+|X|)^{2 rho}
    double E_2rho2 = 1.0; // E(1+|X|)^{2 rho + 2}
    double var_w = 0.0; // E[(1+|X|+|EX|)^{2 rho} |X - EX|^2]
};

struct IidPlan {
    double epsilon = 0.0;
    ConvexityConstants base; // a with the mean-field Lipschitz constant L1 E(1+|X|)^rho
    double lambda0 = 0.0;
    double step_cap = 0.0;
    double iid_C = 0.0;
    double c0 = 0.0;
    double cbar = 0.0;
    double c_hat = 0.0;
    double c = 0.0;
    double Cbar = 0.0;
    double c1 = 0.0; // (4 Cbar)^{-2}
    double c1_verbatim = 0.0; // (4 Cbar)^{-1}
    double c2 = 0.0; // (a c1)^{-1} (ln(2 Cbar) + 1)
    double lambda = 0.0;
    double n_formula = 0.0; // ceil(c2 eps^{-2} ln(1/eps))
    double n_min = 0.0;
    bool n_raised = false;
    bool c1_verbatim_consistent = false;
    bool c2_consistent = false;
    double identity_bias = 0.0; // 2 Cbar sqrt(lambda)
    double identity_contraction = 0.0; // a lambda n - ln(2 Cbar/eps)
    std::vector<std::string> warnings;
};

double iid_c2(double a, double c1, double Cbar);

IidPlan plan_iid(double epsilon, const IidInputs& in);

// Test seam: replace the a~ formula for the lifetime of the object.
class ScopedATildeOverride {
  public:
    explicit ScopedATildeOverride(std::function<double(double a, double L1)> f);
    ~ScopedATildeOverride();
    ScopedATildeOverride(const ScopedATildeOverride&) = delete;
    ScopedATildeOverride& operator=(const ScopedATildeOverride&) = delete;

  private:
    std::function<double(double, double)> prev_;
};

} // namespace langmix
