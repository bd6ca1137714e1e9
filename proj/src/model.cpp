#include "langmix/model.hpp"

#include "langmix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace langmix {

namespace {

void require_dims(const GradientOracle& o, Eigen::Index theta_rows, Eigen::Index x_rows) {
    if (theta_rows != o.dim())
        throw ContractViolation("theta has dimension " + std::to_string(theta_rows) + ", oracle expects " +
                                std::to_string(o.dim()));
    if (x_rows >= 0 && x_rows != o.data_dim())
        throw ContractViolation("x has dimension " + std::to_string(x_rows) + ", oracle expects " +
                                std::to_string(o.data_dim()));
}

bool violated(double lhs, double rhs) { return lhs > rhs + 1e-9 * (1.0 + std::abs(rhs)); }

} // namespace

GradientOracle::GradientOracle(int d, int m, BatchGradient H, std::optional<BatchMeanField> h, DeclaredConstants c,
                               std::string family)
    : d_(d), m_(m), family_(std::move(family)) {
    if (d < 1 || m < 1)
        throw ContractViolation("oracle dimensions must be positive");
    if (!H)
        throw ContractViolation("oracle needs an H map");
    if (c.theta_star.size() == 0)
        c.theta_star = Vector::Zero(d);
    if (c.theta_star.size() != d || static_cast<int>(c.L1_per_coord.size()) != d ||
        static_cast<int>(c.L2_per_coord.size()) != d)
        throw ContractViolation("declared constants do not match the parameter dimension");
    if (!(c.a > 0.0))
        throw DomainError("strong monotonicity constant a must be positive");
    for (double v : c.L1_per_coord)
        if (!(v > 0.0))
            throw DomainError("L1 per-coordinate constants must be positive");
    for (double v : c.L2_per_coord)
        if (!(v >= 0.0))
            throw DomainError("L2 per-coordinate constants must be nonnegative");
    L1_ = std::accumulate(c.L1_per_coord.begin(), c.L1_per_coord.end(), 0.0);
    L2_ = std::accumulate(c.L2_per_coord.begin(), c.L2_per_coord.end(), 0.0);
    impl_ = std::make_shared<const Impl>(Impl{std::move(H), std::move(h), std::move(c)});
    const Vector Hs = eval_H(theta_star(), Vector::Zero(m_));
    H_star_ = Hs.cwiseAbs().sum();
}

Vector GradientOracle::eval_H(const Vector& theta, const Vector& x) const {
    if (!impl_)
        throw ContractViolation("oracle not initialised");
    require_dims(*this, theta.size(), x.size());
    Vector out(d_);
    impl_->H(theta, x, out);
    return out;
}

Vector GradientOracle::eval_h(const Vector& theta) const {
    if (!impl_)
        throw ContractViolation("oracle not initialised");
    if (!impl_->h)
        throw UnsupportedOperation("oracle '" + family_ + "' has no closed-form mean field; use estimate_h with a stream");
    require_dims(*this, theta.size(), -1);
    Vector out(d_);
    (*impl_->h)(theta, out);
    return out;
}

void GradientOracle::eval_H_batch(const Eigen::Ref<const Matrix>& theta, const Eigen::Ref<const Matrix>& x,
                                  Eigen::Ref<Matrix> out) const {
    require_dims(*this, theta.rows(), x.rows());
    if (x.cols() != theta.cols() || out.cols() != theta.cols() || out.rows() != d_)
        throw ContractViolation("batch shapes disagree");
    impl_->H(theta, x, out);
}

void GradientOracle::eval_h_batch(const Eigen::Ref<const Matrix>& theta, Eigen::Ref<Matrix> out) const {
    if (!impl_->h)
        throw UnsupportedOperation("oracle '" + family_ + "' has no closed-form mean field");
    require_dims(*this, theta.rows(), -1);
    if (out.cols() != theta.cols() || out.rows() != d_)
        throw ContractViolation("batch shapes disagree");
    (*impl_->h)(theta, out);
}

GradientOracle make_quadratic_oracle(const QuadraticSpec& q, DeclaredConstants declared) {
    const auto d = q.S.rows();
    if (q.S.cols() != d || d == 0)
        throw ContractViolation("S must be square and non-empty");
    if (q.B.rows() != d || q.B.cols() == 0)
        throw ContractViolation("B must have d rows");
    Vector ts = q.theta_star.size() == 0 ? Vector::Zero(d) : q.theta_star;
    if (ts.size() != d)
        throw ContractViolation("theta_star has the wrong dimension");
    if ((q.S - q.S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.S.cwiseAbs().maxCoeff()))
        throw DomainError("S must be symmetric");
    if (declared.theta_star.size() == 0)
        declared.theta_star = ts;
    const Matrix S = q.S, B = q.B;
    const Vector Sts = S * ts;
    BatchGradient H = [S, B, Sts](const Eigen::Ref<const Matrix>& th, const Eigen::Ref<const Matrix>& x,
                                  Eigen::Ref<Matrix> out) {
        out.noalias() = S * th;
        out.colwise() -= Sts;
        out.noalias() += B * x;
    };
    // centred stream: E[Bx] = 0
    BatchMeanField h = [S, Sts](const Eigen::Ref<const Matrix>& th, Eigen::Ref<Matrix> out) {
        out.noalias() = S * th;
        out.colwise() -= Sts;
    };
    return GradientOracle(static_cast<int>(d), static_cast<int>(B.cols()), std::move(H), std::move(h),
                          std::move(declared), "quadratic");
}

GradientOracle make_quadratic_oracle(const QuadraticSpec& q) {
    const auto d = q.S.rows();
    if (q.S.cols() != d || d == 0)
        throw ContractViolation("S must be square and non-empty");
    if (q.B.rows() != d)
        throw ContractViolation("B must have d rows");
    Eigen::SelfAdjointEigenSolver<Matrix> es(q.S, Eigen::EigenvaluesOnly);
    const double smin = es.eigenvalues().minCoeff();
    if (!(smin > 0.0))
        throw DomainError("S must be positive definite");
    DeclaredConstants c;
    c.theta_star = q.theta_star.size() == 0 ? Vector::Zero(d) : q.theta_star;
    c.a = smin;
    for (Eigen::Index i = 0; i < d; ++i) {
        c.L1_per_coord.push_back(q.S.row(i).norm());
        c.L2_per_coord.push_back(q.B.row(i).norm());
    }
    return make_quadratic_oracle(q, std::move(c));
}

GradientOracle make_scalar_quadratic(double s, double b) {
    QuadraticSpec q{Matrix::Constant(1, 1, s), Vector::Zero(1), Matrix::Constant(1, 1, b)};
    return make_quadratic_oracle(q);
}

double gaussian_norm_expectation(int m, double q, int k) {
    if (m < 1)
        throw DomainError("dimension must be positive");
    // chi_m density r^{m-1} e^{-r^2/2} / (2^{m/2-1} Gamma(m/2)), composite Simpson on [0, R]
    const double R = 12.0 + 2.0 * std::sqrt(static_cast<double>(m) + q + k);
    const int N = 20000;
    const double h = R / N;
    const double logc = -(m / 2.0 - 1.0) * std::log(2.0) - std::lgamma(m / 2.0);
    auto f = [&](double r) {
        if (r == 0.0)
            return (m + k == 1) ? std::exp(logc) : 0.0;
        return std::exp(logc + (m - 1 + k) * std::log(r) - 0.5 * r * r + q * std::log1p(r));
    };
    double s = f(0.0) + f(R);
    for (int i = 1; i < N; ++i)
        s += (i % 2 ? 4.0 : 2.0) * f(h * i);
    return s * h / 3.0;
}

Matrix IidOracle::A(const Vector& x) const {
    return Matrix::Identity(spec.d, spec.d) * (spec.s * std::pow(1.0 + x.norm(), rho));
}

IidOracle make_iid_rho_oracle(const IidRhoSpec& spec) {
    if (spec.d < 1)
        throw DomainError("iid-rho oracle needs d >= 1");
    if (!(spec.s > 0.0) || !(spec.rho >= 0.0) || !(spec.b >= 0.0))
        throw DomainError("iid-rho oracle needs s > 0, rho >= 0, b >= 0");
    IidOracle out;
    out.spec = spec;
    if (out.spec.theta_star.size() == 0)
        out.spec.theta_star = Vector::Zero(spec.d);
    if (out.spec.theta_star.size() != spec.d)
        throw ContractViolation("theta_star has the wrong dimension");
    const Vector ts = out.spec.theta_star;
    const double s = spec.s, rho = spec.rho, b = spec.b;
    out.rho = rho;
    out.L1 = s;
    out.L2 = s * rho * (1.0 + ts.norm()) + b;
    out.mean_growth = rho == 0.0 ? 1.0 : gaussian_norm_expectation(spec.d, rho);
    out.a = s * out.mean_growth;

    BatchGradient H = [ts, s, rho, b](const Eigen::Ref<const Matrix>& th, const Eigen::Ref<const Matrix>& x,
                                      Eigen::Ref<Matrix> o) {
        for (Eigen::Index j = 0; j < th.cols(); ++j) {
            const double g = rho == 0.0 ? s : s * std::pow(1.0 + x.col(j).norm(), rho);
            o.col(j) = g * (th.col(j) - ts) + b * x.col(j);
        }
    };
    const double mf = out.a;
    BatchMeanField h = [ts, mf](const Eigen::Ref<const Matrix>& th, Eigen::Ref<Matrix> o) {
        o = mf * (th.colwise() - ts);
    };
    DeclaredConstants c;
    c.theta_star = ts;
    c.a = out.a;
    c.L1_per_coord.assign(spec.d, out.a); // mean-field Lipschitz constant per row
    c.L2_per_coord.assign(spec.d, out.L2);
    out.oracle = GradientOracle(spec.d, spec.d, std::move(H), std::move(h), std::move(c), "iid-rho");
    return out;
}

MeanFieldEstimate estimate_h(const GradientOracle& oracle, const Vector& theta, const LinearProcessSpec& stream,
                             std::size_t samples, std::uint64_t seed) {
    if (samples < 2)
        throw DomainError("estimate_h needs at least two samples");
    validate(stream);
    const int d = oracle.dim(), m = oracle.data_dim();
    if (theta.size() != d)
        throw ContractViolation("theta has the wrong dimension");
    // each chunk uses its own stream so the estimate is a sum of stationary draws
    constexpr std::size_t chunk = 4096;
    Vector sum = Vector::Zero(d), sumsq = Vector::Zero(d);
    Matrix X(m, static_cast<Eigen::Index>(chunk)), Th = theta.replicate(1, static_cast<Eigen::Index>(chunk)),
        out(d, static_cast<Eigen::Index>(chunk));
    std::size_t done = 0, block = 0;
    while (done < samples) {
        const std::size_t take = std::min(chunk, samples - done);
        StreamState st(stream, derive_seed(seed, block++), m);
        for (std::size_t j = 0; j < take; ++j)
            st.next(X.col(static_cast<Eigen::Index>(j)));
        const auto t = static_cast<Eigen::Index>(take);
        oracle.eval_H_batch(Th.leftCols(t), X.leftCols(t), out.leftCols(t));
        sum += out.leftCols(t).rowwise().sum();
        sumsq += out.leftCols(t).array().square().matrix().rowwise().sum();
        done += take;
    }
    const double n = static_cast<double>(samples);
    MeanFieldEstimate e;
    e.samples = samples;
    e.mean = sum / n;
    // within-chunk draws of a dependent stream are correlated; the SE below
    // is the iid formula and is exact only for iid streams
    const Vector var = ((sumsq / n).array() - e.mean.array().square()).max(0.0) * n / (n - 1.0);
    e.std_error = (var / n).array().sqrt();
    return e;
}

StructuralReport check_structural_constants(const GradientOracle& oracle, std::size_t trials, std::uint64_t seed,
                                            double R) {
    if (trials < 1)
        throw DomainError("trials must be >= 1");
    StructuralReport rep;
    rep.trials = trials;
    rep.box = R;
    const int d = oracle.dim(), m = oracle.data_dim();
    Xoshiro256pp eng(seed);
    auto unif = [&](int n) {
        Vector v(n);
        for (int i = 0; i < n; ++i)
            v[i] = R * (2.0 * eng.uniform() - 1.0);
        return v;
    };
    // finite-difference Jacobian in theta (exact for affine H)
    auto jac = [&](const Vector& th, const Vector& x) {
        Matrix J(d, d);
        const Vector base = oracle.eval_H(th, x);
        for (int j = 0; j < d; ++j) {
            Vector t = th;
            t[j] += 1.0;
            J.col(j) = oracle.eval_H(t, x) - base;
        }
        return J;
    };
    auto record = [&](ConstantViolation v) {
        ++rep.violation_count;
        if (rep.witnesses.size() < 16)
            rep.witnesses.push_back(std::move(v));
    };
    for (std::size_t t = 0; t < trials; ++t) {
        Vector th = unif(d), thp = unif(d), x = unif(m);
        Vector xp = (t % 2 == 0) ? x : unif(m);
        if (t % 10 == 3) {
            // probe along the least-monotone direction of the symmetric Jacobian
            const Matrix J = jac(th, x);
            Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (J + J.transpose()));
            thp = th - es.eigenvectors().col(0);
            xp = x;
        } else if (t % 10 == 7) {
            // probe along the gradient of one coordinate
            const Matrix J = jac(th, x);
            const int i = static_cast<int>(t / 10) % d;
            if (J.row(i).norm() > 0.0)
                thp = th - J.row(i).transpose().normalized();
            xp = x;
        }
        const Vector dth = th - thp;
        const Vector Hx = oracle.eval_H(th, x), Hpx = oracle.eval_H(thp, x);
        // monotonicity at equal data
        const double mono = dth.dot(Hx - Hpx), need = oracle.a() * dth.squaredNorm();
        if (violated(need, mono))
            record({"monotonicity", -1, th, thp, x, x, mono, need});
        const Vector Hpxp = oracle.eval_H(thp, xp);
        const double dn = dth.norm(), dx = (x - xp).norm();
        for (int i = 0; i < d; ++i) {
            const double lhs = std::abs(Hx[i] - Hpxp[i]);
            const double rhs = oracle.L1_per_coord()[i] * dn + oracle.L2_per_coord()[i] * dx;
            if (violated(lhs, rhs))
                record({"lipschitz", i, th, thp, x, xp, lhs, rhs});
        }
    }
    return rep;
}

StructuralReport check_iid_constants(const IidOracle& io, std::size_t trials, std::uint64_t seed, double R) {
    StructuralReport rep;
    rep.trials = trials;
    rep.box = R;
    const int d = io.spec.d;
    Xoshiro256pp eng(seed);
    auto unif = [&](int n) {
        Vector v(n);
        for (int i = 0; i < n; ++i)
            v[i] = R * (2.0 * eng.uniform() - 1.0);
        return v;
    };
    auto record = [&](ConstantViolation v) {
        ++rep.violation_count;
        if (rep.witnesses.size() < 16)
            rep.witnesses.push_back(std::move(v));
    };
    for (std::size_t t = 0; t < trials; ++t) {
        const Vector th = unif(d), thp = unif(d), x = unif(d), xp = unif(d);
        const double grow = std::pow(1.0 + x.norm(), io.rho);
        const double lhs = (io.oracle.eval_H(th, x) - io.oracle.eval_H(thp, x)).norm();
        const double rhs = io.L1 * grow * (th - thp).norm();
        if (violated(lhs, rhs))
            record({"lipschitz", -1, th, thp, x, x, lhs, rhs});
        const double lhs2 = (io.oracle.eval_H(th, x) - io.oracle.eval_H(th, xp)).norm();
        const double rhs2 =
            io.L2 * std::pow(1.0 + x.norm() + xp.norm(), io.rho) * (1.0 + th.norm()) * (x - xp).norm();
        if (violated(lhs2, rhs2))
            record({"lipschitz", -1, th, th, x, xp, lhs2, rhs2});
        Eigen::SelfAdjointEigenSolver<Matrix> es(io.A(x), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-12)
            record({"psd", -1, th, thp, x, x, es.eigenvalues().minCoeff(), 0.0});
        const double mono = (th - thp).dot(io.oracle.eval_H(th, x) - io.oracle.eval_H(thp, x));
        const double need = (th - thp).dot(io.A(x) * (th - thp));
        if (violated(need, mono))
            record({"monotonicity", -1, th, thp, x, x, mono, need});
    }
    return rep;
}

} // namespace langmix
