#include "langmix/harness/acceptance.hpp"

#include "langmix/constants.hpp"
#include "langmix/harness/commands.hpp"
#include "langmix/metrics.hpp"
#include "langmix/mixing.hpp"
#include "langmix/rng.hpp"
#include "langmix/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>

namespace langmix::harness {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// H(theta, x) = theta + x
GradientOracle example34() { return make_scalar_quadratic(1.0, 1.0); }

GradientOracle identity_quadratic(int d) {
    return make_quadratic_oracle(QuadraticSpec{Matrix::Identity(d, d), Vector::Zero(d), Matrix::Identity(d, d)});
}

LinearProcessSpec ma(std::vector<double> c) {
    LinearProcessSpec s;
    s.coeffs = std::move(c);
    return s;
}

Vector constant_vec(int d, double v) { return Vector::Constant(d, v); }

// z-score with the convention that an exact zero difference scores 0
double zscore(double diff, double se) {
    if (diff == 0.0)
        return 0.0;
    return se > 0.0 ? std::abs(diff) / se : kInf;
}

CheckResult finish(std::string id, std::string name, double margin, json details, bool extra = true) {
    CheckResult r{std::move(id), std::move(name), margin >= 0.0 && extra, margin, std::move(details)};
    return r;
}

// ---------------------------------------------------------------------------

CheckResult check_constants(Level, std::uint64_t) {
    // frozen values of the explicit constants at a = L1 = L2 = d = 1
    const auto b = compute_base(1, 1, 1, 1);
    struct Ref {
        const char* name;
        double got, want;
    };
    const std::vector<Ref> refs = {
        {"a_tilde", b.a_tilde, 0.5},
        {"lambda_bar", b.lambda_bar, 1.0},
        {"Cprime_p1_atilde1", compute_Cprime(1, 1, 1.0).C.value, 10.0},
        {"cprime_p1_atilde1", compute_Cprime(1, 1, 1.0).c, 24.0 + std::pow(2.0, 1.5)},
        {"Cdprime_p1_zero_data", compute_Cdprime(1, 1, 1.0, DataTerms{}).C.value, 12.0},
        {"Cprime_p1_base", compute_Cprime(1, b.d, b.a_tilde).C.value, compute_Cprime(1, 1, 0.5).C.value},
        {"c_hat_lambda0.1", thm6_constants(0.1, b).c_hat, 2.0},
        {"c_small_lambda", thm6_c(1e-10, b), 2.0},
    };
    json det = json::object();
    double margin = kInf;
    for (const auto& r : refs) {
        const double rel = std::abs(r.got - r.want) / std::max(1.0, std::abs(r.want));
        det[r.name] = {{"value", r.got}, {"expected", r.want}, {"rel_error", rel}};
        margin = std::min(margin, 1.0 - rel / 1e-9);
    }
    return finish("constants", "explicit constants match frozen reference values", margin, det);
}

CheckResult check_c1(Level, std::uint64_t seed) {
    const auto o = example34();
    const auto iid = LinearProcessSpec::iid();
    json pts = json::array();
    double margin = kInf;
    int k = 0;
    for (double lam : {0.5, 0.1, 0.02}) {
        SamplerConfig c;
        c.lambda = lam;
        c.steps = 200;
        c.replicas = 20000;
        c.record_every = 200;
        c.seed = derive_seed(seed, k++);
        const auto cs = run_coupled(o, iid, c);
        const double exact = iid_gap_variance(lam, 200);
        const double spectral = example34_variance(iid, lam, 200);
        const double emp = cs.msd.mean.back(), se = cs.msd.se.back();
        const double z = zscore(emp - exact, se);
        const double agree = std::abs(spectral - exact) / exact;
        margin = std::min({margin, 3.0 - z, 1.0 - agree / 1e-10});
        pts.push_back({{"lambda", lam}, {"n", 200}, {"exact", exact}, {"spectral", spectral}, {"empirical", emp},
                       {"se", se}, {"z", z}, {"replicas", c.replicas}});
    }
    // lambda = 1/2 and large n: 1/3
    const double lim = iid_gap_variance(0.5, 200);
    margin = std::min(margin, 1.0 - std::abs(lim - 1.0 / 3.0) / 1e-12);
    return finish("1", "coupled variance of the scalar system with iid data", margin,
                  {{"points", pts}, {"limit_lambda_half", lim}});
}

CheckResult check_c2(Level level, std::uint64_t seed) {
    const auto o = example34();
    const auto spec = LinearProcessSpec::power_decay(1.0, 2.0);
    const double lam = 0.1;
    const std::size_t n = 100;
    SamplerConfig c;
    c.lambda = lam;
    c.steps = n;
    c.replicas = level == Level::full ? 20000 : 4000;
    c.record_every = n;
    c.seed = seed;
    const auto cs = run_coupled(o, spec, c);
    const double exact = example34_variance(spec, lam, n);
    const auto sb = spectral_bounds(spec);
    const double flat = iid_gap_variance(lam, n);
    const double lo = sb.m * sb.m * flat, hi = sb.M * sb.M * flat;
    const double emp = cs.msd.mean.back(), se = cs.msd.se.back();
    const double z = zscore(emp - exact, se);
    const double bracket = std::min(exact - lo, hi - exact) / exact;
    const double margin = std::min(3.0 - z, bracket);
    return finish("2", "spectral-integral variance for a power-decay stream", margin,
                  {{"K", spec.order()},
                   {"lambda", lam},
                   {"n", n},
                   {"replicas", c.replicas},
                   {"spectral", exact},
                   {"empirical", emp},
                   {"se", se},
                   {"z", z},
                   {"m", sb.m},
                   {"M", sb.M},
                   {"m_lower", sb.m_lower},
                   {"bracket", {lo, hi}}},
                  !sb.m_zero);
}

CheckResult check_c3(Level, std::uint64_t seed) {
    const auto o = example34();
    SamplerConfig base;
    base.replicas = 512;
    base.seed = seed;
    std::vector<double> lams;
    for (int k = 4; k <= 9; ++k)
        lams.push_back(std::ldexp(1.0, -k));
    const auto f = rate_sweep(o, LinearProcessSpec::iid(), base, lams, 1000);
    json det = sweep_to_json(f);
    det["replicas"] = base.replicas;
    if (f.degenerate)
        return finish("3", "log-log rate of the stationary coupled distance", -1.0, det);
    double margin = std::min({f.slope - 0.45, 0.55 - f.slope, 0.5 - f.ci_lo, f.ci_hi - 0.5});
    for (const auto& p : f.points) {
        margin = std::min(margin, p.plateau_tolerance - std::abs(p.plateau_change));
        if (p.oracle_msd)
            margin = std::min(margin, (3.0 - zscore(p.msd - *p.oracle_msd, p.msd_se)) / 3.0);
    }
    return finish("3", "log-log rate of the stationary coupled distance", margin, det);
}

CheckResult check_c4(Level, std::uint64_t seed) {
    const auto o = example34();
    const auto spec = ma({1.0, 0.5});
    const auto ch = compute_chain(4, chain_inputs(o, spec, InitialLaw{}));
    json pts = json::array();
    double margin = kInf;
    int k = 0;
    for (double lam : {0.1, 0.05, 0.02}) {
        SamplerConfig c;
        c.lambda = lam;
        c.replicas = 256;
        c.seed = derive_seed(seed, k++);
        const auto cs = run_coupled(o, spec, c);
        const double sup = std::sqrt(*std::max_element(cs.sup_so_far.begin(), cs.sup_so_far.end()));
        const double env = ch.C0 * std::pow(lam, 0.25);
        margin = std::min(margin, (env - sup) / env);
        pts.push_back({{"lambda", lam}, {"steps", cs.steps}, {"sup_distance", sup}, {"envelope", env},
                       {"ratio", sup > 0.0 ? env / sup : kInf}});
    }
    return finish("4", "tracking envelope C0(4) lambda^(1/4)", margin, {{"C0", ch.C0}, {"points", pts}});
}

CheckResult check_c5(Level, std::uint64_t seed) {
    json pts = json::array();
    double margin = kInf;
    int k = 0;
    for (int d : {1, 5}) {
        const auto o = identity_quadratic(d);
        const auto b = oracle_base(o);
        const auto target = target_gaussian(o);
        for (double lam : {0.01, 0.1, 0.3}) {
            const auto stat = stationary_ula_gaussian(o, lam);
            const double closed = w2_gaussian(stat, target);
            const double formula = std::sqrt(double(d)) * (std::sqrt(2.0 / (2.0 - lam)) - 1.0);
            const double bound = thm6_constants(lam, b).c * std::sqrt(lam);
            margin = std::min({margin, (bound - closed) / bound, 1.0 - std::abs(closed - formula) / (1e-9 * formula)});
            json p = {{"d", d}, {"lambda", lam}, {"w2_closed", closed}, {"formula", formula}, {"c_sqrt_lambda", bound}};
            if (d == 1) {
                SamplerConfig c;
                c.lambda = lam;
                c.steps = 1000000;
                c.seed = derive_seed(seed, k++);
                const InitialLaw start{Vector::Zero(1), std::sqrt(stat.cov(0, 0))};
                const Matrix path = ula_trajectory(o, c, start);
                const double emp =
                    w2_empirical_to_normal({path.data(), static_cast<std::size_t>(path.cols())}, 0.0, 1.0);
                margin = std::min(margin, (0.02 - std::abs(emp - closed)) / 0.02);
                p["w2_empirical"] = emp;
                p["steps"] = *c.steps;
            }
            pts.push_back(p);
        }
    }
    return finish("5", "ULA bias against c sqrt(lambda)", margin, {{"points", pts}});
}

CheckResult check_c6(Level, std::uint64_t seed) {
    const auto o = example34();
    const auto b = oracle_base(o);
    SamplerConfig c;
    c.lambda = 0.1;
    c.steps = 100;
    c.replicas = 10000;
    c.record_every = 5;
    c.seed = seed;
    const auto st = run_ula_contraction(o, c, InitialLaw{constant_vec(1, 0.0), 1.0}, InitialLaw{constant_vec(1, 5.0), 1.0});
    double margin = kInf;
    json pts = json::array();
    for (std::size_t i = 0; i < st.n.size(); ++i) {
        const double env = std::exp(-2.0 * b.a_tilde * c.lambda * static_cast<double>(st.n[i])) * st.initial_sq;
        margin = std::min(margin, (env + 3.0 * st.msd.se[i] - st.msd.mean[i]) / env);
        pts.push_back({{"n", st.n[i]}, {"mean_sq", st.msd.mean[i]}, {"se", st.msd.se[i]}, {"envelope", env}});
    }
    return finish("6", "shared-noise ULA contraction", margin,
                  {{"initial_sq", st.initial_sq}, {"a_tilde", b.a_tilde}, {"replicas", c.replicas}, {"points", pts}});
}

// relative margins out of a moments_report
double moments_margin(const json& rep) {
    double m = kInf;
    for (const char* chain : {"ula", "sgld"}) {
        if (!rep.contains(chain))
            continue;
        for (const auto& [k, v] : rep[chain].items()) {
            m = std::min(m, v["drift_min_relative_margin"].get<double>());
            const double bound = v["sup_bound"].get<double>();
            m = std::min(m, (bound - v["sup_empirical"].get<double>()) / bound);
            if (!v["drift_pass"].get<bool>() || !v["sup_pass"].get<bool>())
                m = std::min(m, -1e-12);
        }
    }
    if (rep.contains("iid_second_moment")) {
        const auto& s = rep["iid_second_moment"];
        m = std::min(m, s["min_margin"].get<double>() / s["C"].get<double>());
    }
    return m;
}

CheckResult check_c7(Level level, std::uint64_t seed) {
    SamplerConfig c;
    c.lambda = 0.1;
    c.steps = 100;
    c.record_every = 5;
    c.replicas = level == Level::full ? 10000 : 2000;
    c.moment_orders = {1, 2};
    c.theta0 = InitialLaw{constant_vec(1, 3.0), 1.0};
    c.seed = derive_seed(seed, 0);
    const OracleBundle ob{example34(), std::nullopt};
    const auto dep = moments_report(ob, ma({1.0, 0.5}), c);
    c.seed = derive_seed(seed, 1);
    const auto iid = moments_report(ob, LinearProcessSpec::iid(), c);
    const double margin = std::min(moments_margin(dep.report), moments_margin(iid.report));
    return finish("7", "moment drift and sup-moment bounds", margin,
                  {{"dependent_stream", dep.report}, {"iid_stream", iid.report}}, dep.verified && iid.verified);
}

CheckResult check_c8(Level, std::uint64_t seed) {
    double margin = kInf;
    int cases = 0;
    for (int d = 1; d <= 10; ++d)
        for (int r = 1; r <= 6; ++r) {
            const auto nm = gaussian_norm_moment(d, r);
            margin = std::min(margin, nm.holds ? (nm.bound - nm.exact) / nm.bound : -1.0);
            ++cases;
        }
    NormalSource g(seed);
    auto& eng = g.engine();
    double mmargin = kInf;
    for (int t = 0; t < 1000; ++t) {
        const int d = 1 + static_cast<int>(eng() % 5);
        const int p = 1 + static_cast<int>(eng() % 4);
        Vector x(d), y(d);
        g.fill(x);
        g.fill(y);
        x *= std::exp(4.0 * eng.uniform() - 2.0);
        y *= std::exp(4.0 * eng.uniform() - 2.0);
        const auto ic = multinomial_inequality_check(x, y, p);
        const double rel = ic.rhs > 0.0 ? (ic.rhs - ic.lhs) / ic.rhs : (ic.pass ? 0.0 : -1.0);
        mmargin = std::min(mmargin, ic.pass ? std::max(rel, 0.0) : std::min(rel, -1e-12));
    }
    return finish("8", "Gaussian norm moments and the multinomial inequality", std::min(margin, mmargin),
                  {{"norm_moment_cases", cases}, {"norm_moment_min_margin", margin}, {"multinomial_draws", 1000},
                   {"multinomial_min_margin", mmargin}});
}

CheckResult check_c9(Level level, std::uint64_t seed) {
    const std::size_t R = level == Level::full ? 10000 : 2000;
    NormalSource g(derive_seed(seed, 99));
    json runs = json::array();
    double margin = kInf;
    int k = 0;
    for (const auto& [label, spec] : {std::pair{"iid", LinearProcessSpec::iid()}, std::pair{"ma(1,0.5)", ma({1.0, 0.5})}})
        for (int r : {3, 4})
            for (int m : {16, 64}) {
                std::vector<double> b(m);
                for (auto& v : b)
                    v = g();
                const auto rep = maximal_inequality_check(b, spec, r, R, derive_seed(seed, k++));
                margin = std::min(margin, (rep.rhs + 3.0 * rep.lhs_se - rep.lhs) / rep.rhs);
                runs.push_back({{"stream", label}, {"r", r}, {"m", m}, {"lhs", rep.lhs}, {"lhs_se", rep.lhs_se},
                                {"rhs", rep.rhs}, {"Gamma_r", rep.Gamma_r}, {"pass", rep.pass}});
            }
    return finish("9", "maximal inequality for weighted sums", margin, {{"replicas", R}, {"runs", runs}});
}

CheckResult check_c10(Level level, std::uint64_t seed) {
    const std::size_t paths = level == Level::full ? 100000 : 20000;
    const auto spec = ma({1.0, 0.5, 0.25});
    json pts = json::array();
    double margin = kInf;
    int k = 0;
    for (int r : {2, 4})
        for (std::size_t tau = 0; tau <= 8; ++tau) {
            const double an = gamma_linear_analytic(spec, tau, r);
            const auto mc = gamma_mc_estimate(spec, tau, r, paths, derive_seed(seed, k++));
            const double z = zscore(mc.estimate - an, mc.std_error);
            margin = std::min(margin, (3.0 - z) / 3.0);
            pts.push_back({{"r", r}, {"tau", tau}, {"analytic", an}, {"mc", mc.estimate}, {"se", mc.std_error}, {"z", z}});
        }
    bool iid_zero = gamma_linear_analytic(LinearProcessSpec::iid(), 0, 2) > 0.0;
    for (std::size_t tau = 1; tau <= 8; ++tau)
        for (int r : {2, 4})
            iid_zero = iid_zero && gamma_linear_analytic(LinearProcessSpec::iid(), tau, r) == 0.0;
    if (!iid_zero)
        margin = std::min(margin, -1.0);
    return finish("10", "mixing rates: Monte Carlo against the analytic profile", margin,
                  {{"paths", paths}, {"points", pts}, {"iid_gamma_zero_beyond_lag_0", iid_zero}});
}

CheckResult check_c11(Level level, std::uint64_t seed) {
    const auto o = example34();
    double margin = kInf;
    json dep = json::array(), iid = json::array(), exec = json::array();
    const auto cin = chain_inputs(o, ma({1.0, 0.5}), InitialLaw{});
    for (double kappa : {1.0, 0.5})
        for (double eps : {std::exp(-1.0), 0.3, 0.2, 0.1, 0.05, 0.01}) {
            const auto p = plan_dependent(eps, kappa, cin);
            const double ln = std::log(2.0 * p.C_tilde / eps);
            margin = std::min({margin, p.identity_contraction / std::max(1.0, ln) + 1e-12,
                               (0.5 * eps - p.identity_bias) / (0.5 * eps) + 1e-12});
            dep.push_back({{"epsilon", eps}, {"kappa", kappa}, {"lambda", p.lambda}, {"n", p.n_min},
                           {"identity_contraction", p.identity_contraction}, {"identity_bias", p.identity_bias}});
        }
    const OracleBundle ob{o, std::nullopt};
    const InitialLaw theta0{constant_vec(1, 1.0), 0.0};
    const auto iin = iid_inputs(ob, theta0);
    for (double eps : {0.5, 0.3, 0.2, 0.1, 0.05}) {
        const auto p = plan_iid(eps, iin);
        const double ln = std::log(2.0 * p.Cbar / eps);
        margin = std::min({margin, p.identity_contraction / std::max(1.0, ln) + 1e-12,
                           (0.5 * eps - p.identity_bias) / (0.5 * eps) + 1e-12});
        iid.push_back({{"epsilon", eps}, {"lambda", p.lambda}, {"n", p.n_min},
                       {"identity_contraction", p.identity_contraction}, {"identity_bias", p.identity_bias}});
    }
    // execute the iid plan on the scalar system; target N(0, 1)
    int k = 0;
    for (double eps : {0.3, 0.2}) {
        const auto p = plan_iid(eps, iin);
        SamplerConfig c;
        c.lambda = p.lambda;
        c.steps = static_cast<std::size_t>(p.n_min);
        c.record_every = *c.steps;
        c.replicas = level == Level::full ? 1000 : 200;
        c.theta0 = theta0;
        c.seed = derive_seed(seed, k++);
        const auto r = run_sgld(o, LinearProcessSpec::iid(), c);
        const Vector fin = r.final_states.row(0).transpose();
        const double w2 = w2_empirical_to_normal({fin.data(), static_cast<std::size_t>(fin.size())}, 0.0, 1.0);
        margin = std::min(margin, (eps - w2) / eps);
        exec.push_back({{"epsilon", eps}, {"lambda", p.lambda}, {"n", *c.steps}, {"replicas", c.replicas}, {"w2_empirical", w2}});
    }
    return finish("11", "planner identities and an executed plan", margin,
                  {{"dependent", dep}, {"iid", iid}, {"executed", exec}});
}

// The same small runs under 1 and 3 workers must serialize identically.
CheckResult check_c12(Level, std::uint64_t seed) {
    auto once = [&](const char* threads) {
        const char* prev = std::getenv("LANGMIX_THREADS");
        const std::string saved = prev ? prev : "";
        ::setenv("LANGMIX_THREADS", threads, 1);
        SamplerConfig c;
        c.lambda = 0.1;
        c.steps = 50;
        c.replicas = 300;
        c.record_every = 10;
        c.moment_orders = {1};
        c.seed = seed;
        const auto cs = run_coupled(example34(), ma({1.0, 0.5}), c);
        json j = {{"msd", cs.msd.mean}, {"se", cs.msd.se}, {"window", cs.replica_window_msd}};
        if (prev)
            ::setenv("LANGMIX_THREADS", saved.c_str(), 1);
        else
            ::unsetenv("LANGMIX_THREADS");
        return j.dump();
    };
    const std::string a = once("1"), b = once("3");
    return finish("12", "results independent of the worker count", a == b ? 0.0 : -1.0,
                  {{"bytes", a.size()}, {"identical", a == b}});
}

using CheckFn = CheckResult (*)(Level, std::uint64_t);

const std::vector<std::pair<std::string, CheckFn>>& registry() {
    static const std::vector<std::pair<std::string, CheckFn>> r = {
        {"constants", check_constants}, {"1", check_c1}, {"2", check_c2},   {"3", check_c3},   {"4", check_c4},
        {"5", check_c5},                {"6", check_c6}, {"7", check_c7},   {"8", check_c8},   {"9", check_c9},
        {"10", check_c10},              {"11", check_c11}, {"12", check_c12},
    };
    return r;
}

json to_json(const CheckResult& r) {
    return {{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"margin", std::isfinite(r.margin) ? json(r.margin) : json(nullptr)},
            {"details", r.details}};
}

} // namespace

Level parse_level(const std::string& s) {
    if (s == "quick")
        return Level::quick;
    if (s == "full")
        return Level::full;
    throw ConfigError("level must be quick or full, got '" + s + "'");
}

std::vector<std::string> check_ids() {
    std::vector<std::string> ids;
    for (const auto& [id, fn] : registry())
        ids.push_back(id);
    return ids;
}

CheckResult run_check(const std::string& id, Level level, std::uint64_t seed) {
    const auto& reg = registry();
    for (std::size_t i = 0; i < reg.size(); ++i)
        if (reg[i].first == id) {
            try {
                return reg[i].second(level, derive_seed(seed, i, 0x7e51));
            } catch (const Error& e) {
                // a check that cannot run is a failed check, not a crash
                return CheckResult{id, "error", false, -kInf, {{"error", e.what()}}};
            }
        }
    throw ConfigError("unknown check id '" + id + "'");
}

json run_verify(const VerifyOptions& opt) {
    const auto ids = opt.only.empty() ? check_ids() : opt.only;
    json checks = json::array();
    bool all = true;
    for (const auto& id : ids) {
        const auto r = run_check(id, opt.level, opt.seed);
        if (opt.on_result)
            opt.on_result(r);
        all = all && r.pass;
        checks.push_back(to_json(r));
    }
    return {{"level", opt.level == Level::full ? "full" : "quick"},
            {"seed", opt.seed},
            {"library_version", kVersion},
            {"rng_algorithm", kRngAlgorithm},
            {"checks", checks},
            {"pass", all}};
}

} // namespace langmix::harness
