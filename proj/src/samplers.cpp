#include "langmix/samplers.hpp"

#include "langmix/parallel.hpp"
#include "langmix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace langmix {

namespace {

enum class ChainKind { sgld, ula };

struct EngineSpec {
    ChainKind a_kind = ChainKind::sgld;
    bool has_b = true; // a ULA chain alongside chain A
    InitialLaw law_a, law_b;
    bool shared_init = true;
    std::vector<int> moments;
    std::size_t window_start = 0;
    bool want_window = false;
    bool keep_path = false;
    bool keep_final = false;
};

struct Acc {
    std::vector<double> s, ss;
    explicit Acc(std::size_t k = 0) : s(k, 0.0), ss(k, 0.0) {}
    void add(std::size_t r, double v) {
        s[r] += v;
        ss[r] += v * v;
    }
    void merge(const Acc& o) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] += o.s[i];
            ss[i] += o.ss[i];
        }
    }
    TraceStat finish(std::size_t R) const {
        TraceStat t;
        const double n = static_cast<double>(R);
        t.mean.resize(s.size());
        t.se.resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double m = s[i] / n;
            const double var = R > 1 ? std::max(0.0, ss[i] / n - m * m) * n / (n - 1.0) : 0.0;
            t.mean[i] = m;
            t.se[i] = std::sqrt(var / n);
        }
        return t;
    }
};

struct BlockOut {
    Acc pair;
    std::map<int, Acc> mom_a, mom_b;
    std::vector<double> window, window_first, window_second;
    Matrix path;
    Matrix final_a;
};

struct EngineResult {
    std::vector<std::size_t> n;
    TraceStat pair;
    std::map<int, TraceStat> mom_a, mom_b;
    std::vector<double> window, window_first, window_second;
    Matrix path;
    Matrix final_a;
};

std::vector<std::size_t> record_points(std::size_t N, std::size_t stride) {
    if (stride == 0)
        throw ConfigError("record_every must be >= 1");
    std::vector<std::size_t> r;
    for (std::size_t n = 0; n <= N; n += stride)
        r.push_back(n);
    if (r.back() != N)
        r.push_back(N);
    return r;
}

Vector draw_initial(const InitialLaw& law, const Vector& theta_star, NormalSource& ns) {
    Vector v = law.resolved_mean(theta_star);
    if (law.stddev > 0.0)
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v[i] += law.stddev * ns();
    return v;
}

double vpow(double sq, int p) { return std::pow(sq, p); }

EngineResult run_engine(const GradientOracle& oracle, const LinearProcessSpec* stream, const SamplerConfig& cfg,
                        std::size_t N, const EngineSpec& es) {
    const int d = oracle.dim(), m = oracle.data_dim();
    const std::size_t R = cfg.replicas;
    if (R == 0)
        throw ConfigError("replicas must be >= 1");
    const auto rec = record_points(N, cfg.record_every);
    const std::size_t K = rec.size();
    const double lam = cfg.lambda, sq = std::sqrt(2.0 * cfg.lambda);
    const Vector& ts = oracle.theta_star();
    const bool sgld = es.a_kind == ChainKind::sgld;
    const std::size_t nb = (R + kReplicaBlock - 1) / kReplicaBlock;
    std::vector<BlockOut> outs(nb);

    parallel_for(nb, [&](std::size_t b) {
        const std::size_t r0 = b * kReplicaBlock;
        const auto B = static_cast<Eigen::Index>(std::min(kReplicaBlock, R - r0));
        BlockOut out;
        out.pair = Acc(es.has_b ? K : 0);
        for (int p : es.moments) {
            out.mom_a.emplace(p, Acc(K));
            if (es.has_b)
                out.mom_b.emplace(p, Acc(K));
        }
        if (es.want_window) {
            out.window_first.assign(static_cast<std::size_t>(B), 0.0);
            out.window_second.assign(static_cast<std::size_t>(B), 0.0);
        }
        // window [start, N] split at mid: first half [start, mid), second [mid, N]
        const std::size_t mid = es.window_start + (N - es.window_start + 1) / 2;

        Matrix A(d, B), Bm(d, es.has_b ? B : 0), X(m, B), xi(d, B), G(d, B), g(d, es.has_b ? B : 0);
        std::vector<NormalSource> noise;
        std::vector<StreamState> st;
        noise.reserve(static_cast<std::size_t>(B));
        for (Eigen::Index j = 0; j < B; ++j) {
            const std::uint64_t r = r0 + static_cast<std::uint64_t>(j);
            noise.emplace_back(replica_seed(cfg.seed, r, Substream::noise));
            if (sgld)
                st.emplace_back(*stream, replica_seed(cfg.data_seed.value_or(cfg.seed), r, Substream::data), m);
            NormalSource ini(replica_seed(cfg.seed, r, Substream::init));
            A.col(j) = draw_initial(es.law_a, ts, ini);
            if (es.has_b)
                Bm.col(j) = es.shared_init ? Vector(A.col(j)) : draw_initial(es.law_b, ts, ini);
        }
        if (es.keep_path && b == 0)
            out.path.resize(d, static_cast<Eigen::Index>(K));

        std::size_t next = 0;
        auto record = [&](std::size_t k) {
            for (Eigen::Index j = 0; j < B; ++j) {
                if (es.has_b)
                    out.pair.add(k, (A.col(j) - Bm.col(j)).squaredNorm());
                const double va = (A.col(j) - ts).squaredNorm();
                for (auto& [p, acc] : out.mom_a)
                    acc.add(k, vpow(va, p));
                if (es.has_b) {
                    const double vb = (Bm.col(j) - ts).squaredNorm();
                    for (auto& [p, acc] : out.mom_b)
                        acc.add(k, vpow(vb, p));
                }
            }
            if (es.keep_path && b == 0)
                out.path.col(static_cast<Eigen::Index>(k)) = A.col(0);
        };
        record(next++);
        for (std::size_t n = 1; n <= N; ++n) {
            for (Eigen::Index j = 0; j < B; ++j) {
                noise[static_cast<std::size_t>(j)].fill(xi.col(j));
                if (sgld)
                    st[static_cast<std::size_t>(j)].next(X.col(j));
            }
            if (sgld)
                oracle.eval_H_batch(A, X, G);
            else
                oracle.eval_h_batch(A, G);
            A.noalias() -= lam * G;
            A.noalias() += sq * xi;
            if (es.has_b) {
                oracle.eval_h_batch(Bm, g);
                Bm.noalias() -= lam * g;
                Bm.noalias() += sq * xi;
            }
            if (es.want_window && n >= es.window_start) {
                auto& half = n < mid ? out.window_first : out.window_second;
                for (Eigen::Index j = 0; j < B; ++j)
                    half[static_cast<std::size_t>(j)] += (A.col(j) - Bm.col(j)).squaredNorm();
            }
            if (next < K && rec[next] == n)
                record(next++);
        }
        if (es.want_window) {
            const double c1 = static_cast<double>(mid - es.window_start), c2 = static_cast<double>(N - mid + 1);
            out.window.resize(static_cast<std::size_t>(B));
            for (std::size_t j = 0; j < out.window.size(); ++j) {
                out.window[j] = (out.window_first[j] + out.window_second[j]) / (c1 + c2);
                out.window_first[j] = c1 > 0 ? out.window_first[j] / c1 : out.window_second[j] / c2;
                out.window_second[j] /= c2;
            }
        }
        if (es.keep_final)
            out.final_a = A;
        outs[b] = std::move(out);
    });

    EngineResult res;
    res.n = rec;
    Acc pair(es.has_b ? K : 0);
    std::map<int, Acc> ma, mb;
    for (int p : es.moments) {
        ma.emplace(p, Acc(K));
        mb.emplace(p, Acc(K));
    }
    if (es.keep_final)
        res.final_a.resize(d, static_cast<Eigen::Index>(R));
    for (std::size_t b = 0; b < nb; ++b) {
        auto& o = outs[b];
        pair.merge(o.pair);
        for (auto& [p, acc] : o.mom_a)
            ma.at(p).merge(acc);
        for (auto& [p, acc] : o.mom_b)
            mb.at(p).merge(acc);
        res.window.insert(res.window.end(), o.window.begin(), o.window.end());
        res.window_first.insert(res.window_first.end(), o.window_first.begin(), o.window_first.end());
        res.window_second.insert(res.window_second.end(), o.window_second.begin(), o.window_second.end());
        if (es.keep_final)
            res.final_a.middleCols(static_cast<Eigen::Index>(b * kReplicaBlock), o.final_a.cols()) = o.final_a;
    }
    if (es.keep_path)
        res.path = std::move(outs[0].path);
    if (es.has_b)
        res.pair = pair.finish(R);
    for (int p : es.moments) {
        res.mom_a[p] = ma.at(p).finish(R);
        if (es.has_b)
            res.mom_b[p] = mb.at(p).finish(R);
    }
    return res;
}

void require_closed_form(const GradientOracle& o) {
    if (!o.has_closed_form_h())
        throw UnsupportedOperation("this run needs a closed-form mean field h");
}

void require_moment_orders(const std::vector<int>& orders) {
    for (int p : orders)
        if (p < 1)
            throw ConfigError("moment orders must be integers >= 1");
}

// symmetric Jacobian of an affine mean field, or throws
Matrix affine_jacobian(const GradientOracle& o) {
    if (!o.has_closed_form_h())
        throw UnsupportedOperation("closed-form laws need a closed-form mean field");
    const int d = o.dim();
    const Vector& ts = o.theta_star();
    const Vector h0 = o.eval_h(ts);
    Matrix S(d, d);
    for (int j = 0; j < d; ++j) {
        Vector t = ts;
        t[j] += 1.0;
        S.col(j) = o.eval_h(t) - h0;
        Vector t2 = ts;
        t2[j] += 2.0;
        const Vector lin = o.eval_h(t2) - h0 - 2.0 * S.col(j);
        if (lin.norm() > 1e-9 * (1.0 + S.col(j).norm()))
            throw UnsupportedOperation("closed-form laws need an affine mean field (quadratic potential)");
    }
    if ((S - S.transpose()).norm() > 1e-9 * (1.0 + S.norm()))
        throw UnsupportedOperation("closed-form laws need a symmetric mean-field Jacobian");
    return 0.5 * (S + S.transpose());
}

} // namespace

Vector InitialLaw::resolved_mean(const Vector& theta_star) const {
    if (mean.size() == 0)
        return theta_star;
    if (mean.size() != theta_star.size())
        throw ConfigError("initial mean has the wrong dimension");
    return mean;
}

double InitialLaw::sq_dev(const Vector& theta_star) const {
    const double shift = (resolved_mean(theta_star) - theta_star).squaredNorm();
    return shift + static_cast<double>(theta_star.size()) * stddev * stddev;
}

double InitialLaw::moment(const Vector& theta_star, int p) const {
    if (p < 0)
        throw DomainError("moment order must be >= 0");
    // rotate the shift onto e_1: |theta0 - theta*|^2 = (m + s Z_1)^2 + s^2 chi^2_{d-1}
    const double m = (resolved_mean(theta_star) - theta_star).norm(), sd = stddev;
    const int d = static_cast<int>(theta_star.size());
    auto binom = [](int n, int k) {
        double b = 1.0;
        for (int i = 1; i <= k; ++i)
            b = b * (n - k + i) / i;
        return b;
    };
    auto normal_moment = [](int j) { // E Z^j
        if (j % 2)
            return 0.0;
        double v = 1.0;
        for (int i = j - 1; i > 0; i -= 2)
            v *= i;
        return v;
    };
    auto first = [&](int k) { // E (m + sd Z)^{2k}
        double s = 0.0;
        for (int j = 0; j <= 2 * k; j += 2)
            s += binom(2 * k, j) * std::pow(m, 2 * k - j) * std::pow(sd, j) * normal_moment(j);
        return s;
    };
    auto rest = [&](int i) { // E (sd^2 chi^2_{d-1})^i
        if (i == 0)
            return 1.0;
        if (d == 1)
            return 0.0;
        double v = 1.0;
        for (int j = 0; j < i; ++j)
            v *= (d - 1) + 2.0 * j;
        return v * std::pow(sd, 2 * i);
    };
    double total = 0.0;
    for (int k = 0; k <= p; ++k)
        total += binom(p, k) * first(k) * rest(p - k);
    return total;
}

double InitialLaw::norm_2q(const Vector& theta_star, int q) const {
    if (q < 1)
        throw DomainError("norm order q must be >= 1");
    return std::pow(moment(theta_star, q), 1.0 / (2.0 * q));
}

ConvexityConstants oracle_base(const GradientOracle& o) { return compute_base(o.a(), o.L1(), o.L2(), o.dim(), o.H_star()); }

std::size_t default_horizon(double lambda, double a_tilde) {
    const double core = std::log(1.0 / lambda) / (a_tilde * lambda);
    return 3 * static_cast<std::size_t>(std::max(1.0, std::ceil(core)));
}

std::size_t resolve_steps(const SamplerConfig& cfg, const GradientOracle& o) {
    if (cfg.steps)
        return *cfg.steps;
    return default_horizon(cfg.lambda, oracle_base(o).a_tilde);
}

void check_step_size(const GradientOracle& o, double lambda) {
    const auto b = oracle_base(o);
    if (!(lambda > 0.0) || !(lambda < b.lambda_bar)) {
        std::ostringstream os;
        os << "step size lambda = " << lambda << " violates the bound lambda < lambda_bar = 2/(a+L1) = "
           << b.lambda_bar << " (a = " << b.a << ", L1 = " << b.L1 << ")";
        throw HypothesisViolation(os.str());
    }
}

CoupledStats run_coupled(const GradientOracle& o, const LinearProcessSpec& stream, const SamplerConfig& cfg) {
    require_closed_form(o);
    require_moment_orders(cfg.moment_orders);
    validate(stream);
    check_step_size(o, cfg.lambda);
    const std::size_t N = resolve_steps(cfg, o);
    EngineSpec es;
    es.a_kind = ChainKind::sgld;
    es.has_b = true;
    es.law_a = cfg.theta0;
    es.shared_init = true;
    es.moments = cfg.moment_orders;
    es.window_start = N - N / 3;
    es.want_window = N > 0;
    const auto r = run_engine(o, &stream, cfg, N, es);
    CoupledStats cs;
    cs.lambda = cfg.lambda;
    cs.steps = N;
    cs.replicas = cfg.replicas;
    cs.record_every = cfg.record_every;
    cs.n = r.n;
    cs.msd = r.pair;
    cs.sup_so_far.resize(cs.msd.mean.size());
    double best = 0.0;
    for (std::size_t i = 0; i < cs.msd.mean.size(); ++i)
        cs.sup_so_far[i] = best = std::max(best, cs.msd.mean[i]);
    cs.moment_sgld = r.mom_a;
    cs.moment_ula = r.mom_b;
    cs.window_start = es.window_start;
    cs.replica_window_msd = r.window;
    cs.replica_window_first = r.window_first;
    cs.replica_window_second = r.window_second;
    return cs;
}

MomentRun run_sgld(const GradientOracle& o, const LinearProcessSpec& stream, const SamplerConfig& cfg) {
    require_moment_orders(cfg.moment_orders);
    validate(stream);
    check_step_size(o, cfg.lambda);
    const std::size_t N = resolve_steps(cfg, o);
    EngineSpec es;
    es.a_kind = ChainKind::sgld;
    es.has_b = false;
    es.law_a = cfg.theta0;
    es.moments = cfg.moment_orders;
    es.keep_path = true;
    es.keep_final = true;
    auto r = run_engine(o, &stream, cfg, N, es);
    return {cfg.lambda, N, cfg.replicas, r.n, r.mom_a, std::move(r.path), std::move(r.final_a)};
}

MomentRun run_ula(const GradientOracle& o, const SamplerConfig& cfg) {
    require_closed_form(o);
    require_moment_orders(cfg.moment_orders);
    check_step_size(o, cfg.lambda);
    const std::size_t N = resolve_steps(cfg, o);
    EngineSpec es;
    es.a_kind = ChainKind::ula;
    es.has_b = false;
    es.law_a = cfg.theta0;
    es.moments = cfg.moment_orders;
    es.keep_path = true;
    es.keep_final = true;
    auto r = run_engine(o, nullptr, cfg, N, es);
    return {cfg.lambda, N, cfg.replicas, r.n, r.mom_a, std::move(r.path), std::move(r.final_a)};
}

Matrix ula_trajectory(const GradientOracle& o, const SamplerConfig& cfg, const InitialLaw& start) {
    require_closed_form(o);
    check_step_size(o, cfg.lambda);
    const std::size_t N = resolve_steps(cfg, o);
    const int d = o.dim();
    Matrix path(d, static_cast<Eigen::Index>(N + 1));
    NormalSource ini(replica_seed(cfg.seed, 0, Substream::init));
    NormalSource noise(replica_seed(cfg.seed, 0, Substream::noise));
    Vector th = draw_initial(start, o.theta_star(), ini), h(d), xi(d);
    const double sq = std::sqrt(2.0 * cfg.lambda);
    path.col(0) = th;
    for (std::size_t n = 1; n <= N; ++n) {
        noise.fill(xi);
        o.eval_h_batch(th, h);
        th += -cfg.lambda * h + sq * xi;
        path.col(static_cast<Eigen::Index>(n)) = th;
    }
    return path;
}

ContractionStats run_ula_contraction(const GradientOracle& o, const SamplerConfig& cfg, const InitialLaw& law1,
                                     const InitialLaw& law2) {
    require_closed_form(o);
    check_step_size(o, cfg.lambda);
    const std::size_t N = resolve_steps(cfg, o);
    EngineSpec es;
    es.a_kind = ChainKind::ula;
    es.has_b = true;
    es.law_a = law1;
    es.law_b = law2;
    es.shared_init = false;
    const auto r = run_engine(o, nullptr, cfg, N, es);
    ContractionStats cs;
    cs.n = r.n;
    cs.msd = r.pair;
    const Vector& ts = o.theta_star();
    const double d = static_cast<double>(o.dim());
    cs.initial_sq = (law1.resolved_mean(ts) - law2.resolved_mean(ts)).squaredNorm() +
                    d * (law1.stddev * law1.stddev + law2.stddev * law2.stddev);
    return cs;
}

BlockDiagnostics run_auxiliary_blocks(const GradientOracle& o, const LinearProcessSpec& stream,
                                      const SamplerConfig& cfg) {
    require_closed_form(o);
    validate(stream);
    if (cfg.lambda > 1.0)
        throw HypothesisViolation("block diagnostics need lambda <= 1 so that T = floor(1/lambda) >= 1");
    check_step_size(o, cfg.lambda);
    const std::size_t N = resolve_steps(cfg, o);
    const auto T = static_cast<std::size_t>(std::floor(1.0 / cfg.lambda));
    const int d = o.dim(), m = o.data_dim();
    const std::size_t R = cfg.replicas;
    const auto rec = record_points(N, cfg.record_every);
    const std::size_t K = rec.size();
    const double lam = cfg.lambda, sq = std::sqrt(2.0 * lam);
    const Vector& ts = o.theta_star();
    const std::size_t nb = (R + kReplicaBlock - 1) / kReplicaBlock;
    struct Out {
        Acc a, b, c;
    };
    std::vector<Out> outs(nb);
    parallel_for(nb, [&](std::size_t blk) {
        const std::size_t r0 = blk * kReplicaBlock;
        const auto B = static_cast<Eigen::Index>(std::min(kReplicaBlock, R - r0));
        Out out{Acc(K), Acc(K), Acc(K)};
        Matrix th(d, B), z(d, B), tb(d, B), X(m, B), xi(d, B), G(d, B);
        std::vector<NormalSource> noise;
        std::vector<StreamState> st;
        for (Eigen::Index j = 0; j < B; ++j) {
            const std::uint64_t r = r0 + static_cast<std::uint64_t>(j);
            noise.emplace_back(replica_seed(cfg.seed, r, Substream::noise));
            st.emplace_back(stream, replica_seed(cfg.data_seed.value_or(cfg.seed), r, Substream::data), m);
            NormalSource ini(replica_seed(cfg.seed, r, Substream::init));
            th.col(j) = draw_initial(cfg.theta0, ts, ini);
        }
        z = th;
        tb = th;
        std::size_t next = 0;
        auto record = [&](std::size_t k) {
            for (Eigen::Index j = 0; j < B; ++j) {
                out.a.add(k, (th.col(j) - z.col(j)).squaredNorm());
                out.b.add(k, (z.col(j) - tb.col(j)).squaredNorm());
                out.c.add(k, (th.col(j) - tb.col(j)).squaredNorm());
            }
        };
        record(next++);
        for (std::size_t n = 1; n <= N; ++n) {
            for (Eigen::Index j = 0; j < B; ++j) {
                noise[static_cast<std::size_t>(j)].fill(xi.col(j));
                st[static_cast<std::size_t>(j)].next(X.col(j));
            }
            o.eval_H_batch(th, X, G);
            th.noalias() -= lam * G;
            th.noalias() += sq * xi;
            o.eval_h_batch(z, G);
            z.noalias() -= lam * G;
            z.noalias() += sq * xi;
            o.eval_h_batch(tb, G);
            tb.noalias() -= lam * G;
            tb.noalias() += sq * xi;
            if (n % T == 0)
                z = th; // restart the auxiliary chain at the block boundary
            if (next < K && rec[next] == n)
                record(next++);
        }
        outs[blk] = std::move(out);
    });
    Acc a(K), b(K), c(K);
    for (const auto& o2 : outs) {
        a.merge(o2.a);
        b.merge(o2.b);
        c.merge(o2.c);
    }
    BlockDiagnostics bd;
    bd.block_length = T;
    bd.n = rec;
    bd.sgld_to_aux = a.finish(R);
    bd.aux_to_ula = b.finish(R);
    bd.coupled = c.finish(R);
    return bd;
}

GaussianLaw stationary_ula_gaussian(const GradientOracle& o, double lambda) {
    const Matrix S = affine_jacobian(o);
    if (!(lambda > 0.0))
        throw DomainError("step size must be positive");
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    Vector v(S.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double s = es.eigenvalues()[i];
        if (!(s > 0.0))
            throw DomainError("mean-field Jacobian must be positive definite");
        if (lambda * s >= 2.0)
            throw HypothesisViolation("lambda s_i >= 2 for an eigenvalue s_i: the ULA chain diverges");
        // 1 - (1 - lambda s)^2 written as lambda s (2 - lambda s) to avoid cancellation
        v[i] = 2.0 * lambda / (lambda * s * (2.0 - lambda * s));
    }
    GaussianLaw g;
    g.mean = o.theta_star();
    g.cov = es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose();
    if (S.isDiagonal()) {
        const Vector diag = g.cov.diagonal(); // keep the diagonal fast path exact
        g.cov = diag.asDiagonal();
    }
    return g;
}

GaussianLaw target_gaussian(const GradientOracle& o) {
    const Matrix S = affine_jacobian(o);
    GaussianLaw g;
    g.mean = o.theta_star();
    if (S.isDiagonal()) {
        g.cov = S.diagonal().cwiseInverse().asDiagonal();
    } else {
        g.cov = S.inverse();
        g.cov = 0.5 * (g.cov + g.cov.transpose());
    }
    return g;
}

} // namespace langmix
