#include "langmix/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace langmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLn2 = std::log(2.0);

std::function<double(double, double)>& a_tilde_hook() {
    static std::function<double(double, double)> hook;
    return hook;
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

double lse(std::initializer_list<double> logs) {
    double m = kNegInf;
    for (double v : logs)
        m = std::max(m, v);
    if (m == kNegInf)
        return kNegInf;
    double s = 0.0;
    for (double v : logs)
        s += std::exp(v - m);
    return m + std::log(s);
}

void require_p(int p) {
    if (p < 1)
        throw DomainError("moment order p must be an integer >= 1");
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw DomainError(std::string(what) + " must be positive and finite");
}

} // namespace

LogValue LogValue::from_log(double lg) {
    LogValue v;
    v.log = lg;
    v.value = std::exp(lg);
    v.overflow = std::isinf(v.value) && std::isfinite(lg);
    return v;
}

double LogValue::log10() const { return log / std::log(10.0); }

ScopedATildeOverride::ScopedATildeOverride(std::function<double(double, double)> f) : prev_(a_tilde_hook()) {
    a_tilde_hook() = std::move(f);
}

ScopedATildeOverride::~ScopedATildeOverride() { a_tilde_hook() = std::move(prev_); }

ConvexityConstants compute_base(double a, double L1, double L2, int d, double H_star) {
    require_positive(a, "a");
    require_positive(L1, "L1");
    if (!(L2 >= 0.0) || !std::isfinite(L2))
        throw DomainError("L2 must be nonnegative and finite");
    if (!(H_star >= 0.0))
        throw DomainError("H* must be nonnegative");
    if (d < 1)
        throw DomainError("dimension must be >= 1");
    ConvexityConstants c;
    c.a = a;
    c.L1 = L1;
    c.L2 = L2;
    c.H_star = H_star;
    c.d = d;
    c.lambda_bar = 2.0 / (a + L1);
    c.a_tilde = a_tilde_hook() ? a_tilde_hook()(a, L1) : a * L1 / (a + L1);
    return c;
}

MomentConstant compute_Cprime(int p, int d, double a_tilde) {
    require_p(p);
    require_positive(a_tilde, "a~");
    if (d < 1)
        throw DomainError("dimension must be >= 1");
    const double P = p, lnd = std::log(static_cast<double>(d)), lnp = std::log(P), ln2p1 = std::log(2.0 * P - 1.0);
    const double t1 = P * lnd + P * ln2p1 + P * lnp + P * (2.0 * P - 1.0) * kLn2 + (1.0 - P) * std::log(a_tilde);
    const double t2 = ln2p1 + lnp + (3.0 * P - 2.0) * kLn2 + 2.0 * P * kLn2 + P * lnd + 1.5 * P * lnp;
    MomentConstant out;
    out.p = p;
    out.C = LogValue::from_log(lse({t1, t2}));
    out.c = P * std::sqrt(static_cast<double>(d)) *
            (std::pow(2.0, P + 0.5) * std::pow(a_tilde, 1.0 / (2.0 * P) - 0.5) + 24.0);
    out.dominance = out.C.log / (2.0 * P) <= std::log(out.c) + 1e-12;
    return out;
}

MomentConstant compute_Cdprime(int p, int d, double a_tilde, const DataTerms& x) {
    require_p(p);
    require_positive(a_tilde, "a~");
    if (d < 1)
        throw DomainError("dimension must be >= 1");
    if (x.L1 < 0.0 || x.L2 < 0.0 || x.theta_star_norm < 0.0 || x.H_star < 0.0 || x.script_M_2p < 0.0)
        throw DomainError("data terms must be nonnegative");
    const double P = p, lnd = std::log(static_cast<double>(d)), lnp = std::log(P), ln2p1 = std::log(2.0 * P - 1.0);
    const double l2a = std::log(2.0 / a_tilde);
    const double T1 = P * (2.0 * P * kLn2 + lnd + lnp + ln2p1) + (P - 1.0) * l2a;
    const double T2 = (5.0 * P - 4.0) * kLn2 + lnp + ln2p1 + 2.0 * P * kLn2 + P * lnd + 1.5 * P * lnp;
    const double f1 = 2.0 * P * std::log(2.0 * P) + (2.0 * P - 1.0) * l2a;
    const double f2 = P * ((2.0 * P - 1.0) * kLn2 + lnp + ln2p1) + (P - 1.0) * l2a;
    const double f3 = (4.0 * P - 4.0) * kLn2 + lnp + ln2p1;
    const double F = (2.0 * P - 1.0) * kLn2 + lse({f1, f2, f3});
    const double d1 = (2.0 * P - 1.0) * kLn2 + 2.0 * P * (safe_log(x.L1) + safe_log(x.theta_star_norm));
    const double d2 = (2.0 * P - 1.0) * kLn2 + 2.0 * P * safe_log(x.L2) + safe_log(x.script_M_2p);
    const double d3 = 2.0 * P * safe_log(x.H_star);
    const double D = lse({d1, d2, d3});
    MomentConstant out;
    out.p = p;
    out.C = LogValue::from_log(lse({T1, T2, D == kNegInf ? kNegInf : F + D}));
    const double sd = std::sqrt(static_cast<double>(d));
    const double brace = 4.0 * P / std::pow(a_tilde, 1.0 - 1.0 / (2.0 * P)) +
                         std::pow(2.0, P) * P * std::sqrt(2.0) * std::pow(2.0 / a_tilde, 0.5 - 1.0 / (2.0 * P)) + 12.0;
    const double data = 2.0 * x.L1 * x.theta_star_norm + 2.0 * x.L2 * std::pow(x.script_M_2p, 1.0 / (2.0 * P)) + x.H_star;
    out.c = P * sd * (std::pow(2.0, P + 0.5) * std::pow(a_tilde, 1.0 / (2.0 * P) - 0.5) + 48.0) + 2.0 * brace * data;
    out.dominance = out.C.log / (2.0 * P) <= std::log(out.c) + 1e-12;
    return out;
}

double MixingInputs::M(int q) const {
    const auto it = script_M.find(q);
    if (it == script_M.end())
        throw DomainError("mixing inputs lack the moment of order " + std::to_string(q));
    return it->second;
}

ChainReport compute_chain(int p, const ChainInputs& in) {
    if (p < 4 || p % 2 != 0)
        throw DomainError("the tracking bound holds for even p >= 4 only; got p = " + std::to_string(p));
    const auto& b = in.base;
    ChainReport r;
    r.p = p;
    r.q = p / 2;
    auto data = [&](int q) { return DataTerms{b.L1, b.L2, in.theta_star_norm, b.H_star, in.mixing.M(2 * q)}; };
    auto Cunder = [&](int q, const MomentConstant& cp, const MomentConstant& cdp) {
        return in.theta0_norm(q) + (cp.c + cdp.c) / std::pow(b.a_tilde, 1.0 / (2.0 * q));
    };
    r.Cprime_q = compute_Cprime(r.q, b.d, b.a_tilde);
    r.Cdprime_q = compute_Cdprime(r.q, b.d, b.a_tilde, data(r.q));
    r.Cprime_1 = compute_Cprime(1, b.d, b.a_tilde);
    r.Cdprime_1 = compute_Cdprime(1, b.d, b.a_tilde, data(1));
    r.Cunder_q = Cunder(r.q, r.Cprime_q, r.Cdprime_q);
    r.Cunder_1 = Cunder(1, r.Cprime_1, r.Cdprime_1);
    const double C2 = r.Cdprime_1.C.value;
    const double tail = 2.0 * b.L2 * std::sqrt(in.mixing.M(2)) + 2.0 * b.H_star + r.Cunder_1 * b.L1;
    r.Cflat_stmt = b.L1 * (in.theta0_norm(1) + C2 / b.a_tilde) + tail;
    r.Cflat_proof = b.L1 * (in.theta0_norm(1) + std::sqrt(C2 / b.a_tilde)) + tail;
    r.Cstar = 10.0 * (b.L1 * r.Cunder_q + b.L2 * std::sqrt(in.mixing.C32) + b.L2 * std::cbrt(in.mixing.M(3)) + b.H_star) +
              2.0 * b.L2 * in.mixing.C21;
    const double denom = 1.0 - std::exp(-b.a_tilde);
    const double lead = 30.0 * std::exp(b.L1) * r.Cstar;
    r.C0 = (lead + r.Cflat_stmt) / denom + r.Cstar;
    r.C0_proof = (lead + r.Cflat_proof) / denom + r.Cstar;
    return r;
}

double thm6_c(double lambda, const ConvexityConstants& b) {
    const double L = b.L1, d = b.d, at = b.a_tilde;
    const double v = L * L / at * (2.0 * lambda + 1.0 / at) *
                     (d + lambda * lambda * L * L * d / 12.0 + L * L * lambda * d / (2.0 * b.a));
    return std::sqrt(v);
}

Thm6Constants thm6_constants(double lambda, const ConvexityConstants& b, double theta0_sq_dev) {
    if (!(lambda > 0.0) || !(lambda < b.lambda_bar))
        throw HypothesisViolation("step size " + std::to_string(lambda) + " must lie in (0, lambda_bar = " +
                                  std::to_string(b.lambda_bar) + ")");
    if (theta0_sq_dev < 0.0)
        throw DomainError("E|theta0 - theta*|^2 must be nonnegative");
    Thm6Constants t;
    t.lambda = lambda;
    t.c_hat = std::sqrt(2.0) * std::sqrt(theta0_sq_dev + b.d / b.a_tilde);
    t.c = thm6_c(lambda, b);
    return t;
}

int planner_order(double kappa) {
    if (!(kappa > 0.0))
        throw DomainError("kappa must be positive");
    int p = 4;
    while (!(kappa > 2.0 / (p - 1.0)))
        p += 2;
    return p;
}

DependentPlan plan_dependent(double eps, double kappa, const ChainInputs& in, double theta0_sq_dev) {
    if (!(eps > 0.0) || eps > std::exp(-1.0))
        throw DomainError("epsilon must lie in (0, 1/e]");
    DependentPlan pl;
    pl.epsilon = eps;
    pl.kappa = kappa;
    pl.p = planner_order(kappa);
    pl.exponent_consistent = 0.5 - 1.0 / pl.p >= 1.0 / (2.0 + kappa);
    pl.p_consistent = 4;
    while (0.5 - 1.0 / pl.p_consistent < 1.0 / (2.0 + kappa))
        pl.p_consistent += 2;
    if (!pl.exponent_consistent)
        pl.warnings.push_back("with p = " + std::to_string(pl.p) + " the tracking exponent 1/2 - 1/p is below 1/(2+kappa); p = " +
                              std::to_string(pl.p_consistent) + " would close the gap");
    const auto& b = in.base;
    pl.C0 = compute_chain(pl.p, in).C0;
    pl.c_hat = std::sqrt(2.0) * std::sqrt(theta0_sq_dev + b.d / b.a_tilde);
    const double e = 2.0 + kappa;
    auto lambda_for = [&](double Ct) { return std::pow(eps, e) / std::pow(4.0 * Ct, e); };
    // one sweep: c at lambda_bar/2, then at the resulting lambda
    pl.c_initial = thm6_c(0.5 * b.lambda_bar, b);
    const double Ct1 = std::max({pl.C0, pl.c_hat, pl.c_initial});
    const double lam1 = lambda_for(Ct1);
    pl.c = thm6_c(lam1, b);
    pl.C_tilde = std::max({pl.C0, pl.c_hat, pl.c});
    pl.lambda = lambda_for(pl.C_tilde);
    pl.circularity_ok = thm6_c(pl.lambda, b) <= pl.C_tilde;
    if (!pl.circularity_ok)
        pl.warnings.push_back("c at the final step size exceeds C~; the one-sweep rule did not settle");
    pl.c1_kappa = std::pow(4.0 * pl.C_tilde, -e);
    pl.c2_kappa = std::pow(4.0 * pl.C_tilde, e) / b.a * (1.0 + std::log(2.0 * pl.C_tilde));
    if (!(pl.lambda < b.lambda_bar)) {
        pl.lambda = 0.5 * b.lambda_bar;
        pl.lambda_scaled = true;
        pl.warnings.push_back("planned step size reached lambda_bar; scaled down to lambda_bar/2");
    }
    pl.n_min = std::ceil(pl.c2_kappa * std::pow(eps, -e) * std::log(1.0 / eps));
    const double need = std::log(2.0 * pl.C_tilde / eps);
    if (pl.lambda_scaled)
        pl.n_min = std::max(pl.n_min, std::ceil(need / (b.a * pl.lambda)));
    pl.identity_bias = 2.0 * pl.C_tilde * std::pow(pl.lambda, 1.0 / e);
    pl.identity_contraction = b.a * pl.lambda * pl.n_min - need;
    return pl;
}

double iid_c2(double a, double c1, double Cbar) { return (std::log(2.0 * Cbar) + 1.0) / (a * c1); }

IidPlan plan_iid(double eps, const IidInputs& in) {
    if (!(eps > 0.0) || eps > 0.5)
        throw DomainError("epsilon must lie in (0, 1/2]");
    if (in.rho < 0.0)
        throw DomainError("rho must be nonnegative");
    IidPlan pl;
    pl.epsilon = eps;
    pl.base = compute_base(in.a, in.L1 * in.E_rho, in.L2, in.d, in.H_star);
    const auto& b = pl.base;
    pl.lambda0 = std::min(in.a / (2.0 * in.L1 * in.L1 * in.E_2rho), 1.0 / in.a);
    if (in.rho == 0.0)
        pl.step_cap = 0.5 * std::min(1.0 / in.L1, b.lambda_bar);
    else
        pl.step_cap = std::min(pl.lambda0, 0.5 * b.lambda_bar);
    const double ts1 = 1.0 + in.theta_star_norm;
    pl.iid_C = 4.0 * in.L2 * in.L2 * ts1 * ts1 * in.E_2rho2 + 4.0 * in.H_star * in.H_star + 2.0 * in.d;
    pl.c0 = 2.0 * in.theta0_sq_dev + 2.0 * pl.iid_C / in.a + 2.0 * in.theta_star_norm * in.theta_star_norm;
    pl.cbar = std::sqrt(8.0 * in.L2 * in.L2 * (1.0 + pl.c0) * in.var_w / b.a_tilde);
    pl.c_hat = std::sqrt(2.0) * std::sqrt(in.theta0_sq_dev + in.d / b.a_tilde);
    // same one-sweep rule as the dependent planner
    double c = thm6_c(pl.step_cap, b);
    double Cbar = std::max({pl.cbar, pl.c_hat, c});
    double lam = std::min(std::pow(4.0 * Cbar, -2.0) * eps * eps, pl.step_cap);
    pl.c = thm6_c(lam, b);
    pl.Cbar = std::max({pl.cbar, pl.c_hat, pl.c});
    pl.c1 = std::pow(4.0 * pl.Cbar, -2.0);
    pl.c1_verbatim = 1.0 / (4.0 * pl.Cbar);
    pl.lambda = std::min(pl.c1 * eps * eps, pl.step_cap);
    if (pl.lambda < pl.c1 * eps * eps)
        pl.warnings.push_back("step size capped at the admissible range lambda0");
    pl.c2 = iid_c2(in.a, pl.c1, pl.Cbar);
    pl.n_formula = std::ceil(pl.c2 * std::log(1.0 / eps) / (eps * eps));
    const double need = std::log(2.0 * pl.Cbar / eps);
    const double n_need = std::ceil(need / (in.a * pl.lambda));
    pl.n_min = std::max(pl.n_formula, n_need);
    pl.n_raised = n_need > pl.n_formula;
    pl.c2_consistent = !pl.n_raised;
    if (pl.n_raised)
        pl.warnings.push_back("c2 eps^-2 ln(1/eps) steps do not reach a lambda n >= ln(2 Cbar/eps); n raised");
    // the bias half-budget with c1 = (4 Cbar)^{-1}
    pl.c1_verbatim_consistent = 2.0 * pl.Cbar * std::sqrt(pl.c1_verbatim * eps * eps) <= 0.5 * eps;
    pl.identity_bias = 2.0 * pl.Cbar * std::sqrt(pl.lambda);
    pl.identity_contraction = in.a * pl.lambda * pl.n_min - need;
    return pl;
}

} // namespace langmix
