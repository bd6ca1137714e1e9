#include "langmix/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace langmix::harness {

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ConfigError(where + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
void get_opt(const json& j, const char* key, const std::string& where, T& out) {
    if (j.contains(key))
        out = get<T>(j, key, where);
}

Vector vector_of(const json& j, const std::string& where) {
    if (!j.is_array())
        throw ConfigError(where + " must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw ConfigError(where + " must be an array of numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Matrix matrix_of(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError(where + " must be a non-empty array of rows");
    const std::size_t rows = j.size(), cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ConfigError(where + " rows must have equal length");
        m.row(static_cast<Eigen::Index>(r)) = vector_of(j[r], where).transpose();
    }
    return m;
}

OracleConfig parse_oracle(const json& j) {
    const std::string w = "oracle";
    OracleConfig o;
    o.family = get<std::string>(j, "family", w);
    if (o.family == "quadratic") {
        only_keys(j, w, {"family", "S", "theta_star", "B", "d"});
        Matrix S;
        if (j.contains("S") && j["S"].is_number()) {
            const int d = j.contains("d") ? get<int>(j, "d", w) : 1;
            if (d < 1)
                throw ConfigError("oracle.d must be >= 1");
            S = j["S"].get<double>() * Matrix::Identity(d, d);
        } else {
            S = matrix_of(j.at("S"), "oracle.S");
        }
        const auto d = S.rows();
        o.quadratic.S = S;
        o.quadratic.theta_star = j.contains("theta_star") ? vector_of(j["theta_star"], "oracle.theta_star") : Vector::Zero(d);
        o.quadratic.B = j.contains("B") ? matrix_of(j["B"], "oracle.B") : Matrix::Identity(d, d);
    } else if (o.family == "iid-rho") {
        only_keys(j, w, {"family", "d", "s", "rho", "b", "theta_star"});
        get_opt(j, "d", w, o.iid.d);
        get_opt(j, "s", w, o.iid.s);
        get_opt(j, "rho", w, o.iid.rho);
        get_opt(j, "b", w, o.iid.b);
        if (j.contains("theta_star"))
            o.iid.theta_star = vector_of(j["theta_star"], "oracle.theta_star");
    } else {
        throw ConfigError("oracle.family must be 'quadratic' or 'iid-rho', got '" + o.family + "'");
    }
    return o;
}

StreamConfig parse_stream(const json& j) {
    const std::string w = "stream";
    StreamConfig s;
    s.kind = get<std::string>(j, "kind", w);
    if (j.contains("seed"))
        s.seed = get<std::uint64_t>(j, "seed", w);
    if (s.kind == "iid-gaussian") {
        only_keys(j, w, {"kind", "seed"});
        s.spec = LinearProcessSpec::iid();
    } else if (s.kind == "linear") {
        only_keys(j, w, {"kind", "coeffs", "decay", "seed"});
        std::optional<DecayCertificate> cert;
        if (j.contains("decay")) {
            only_keys(j["decay"], "stream.decay", {"c", "beta"});
            cert = DecayCertificate{get<double>(j["decay"], "c", "stream.decay"), get<double>(j["decay"], "beta", "stream.decay")};
        }
        if (j.contains("coeffs")) {
            s.spec.coeffs = get<std::vector<double>>(j, "coeffs", w);
            s.spec.decay = cert;
        } else if (cert) {
            try {
                s.spec = LinearProcessSpec::power_decay(cert->c, cert->beta);
            } catch (const DomainError& e) {
                throw ConfigError(std::string("stream: ") + e.what());
            }
        } else {
            throw ConfigError("stream of kind 'linear' needs coeffs or a decay certificate");
        }
    } else {
        throw ConfigError("stream.kind must be 'linear' or 'iid-gaussian', got '" + s.kind + "'");
    }
    try {
        validate(s.spec);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("stream: ") + e.what());
    }
    return s;
}

void parse_sampler(const json& j, SamplerConfig& c) {
    const std::string w = "sampler";
    only_keys(j, w, {"lambda", "steps", "replicas", "record_every", "moment_orders", "theta0"});
    get_opt(j, "lambda", w, c.lambda);
    if (j.contains("steps"))
        c.steps = get<std::size_t>(j, "steps", w);
    get_opt(j, "replicas", w, c.replicas);
    get_opt(j, "record_every", w, c.record_every);
    get_opt(j, "moment_orders", w, c.moment_orders);
    if (j.contains("theta0")) {
        const auto& t = j["theta0"];
        only_keys(t, "sampler.theta0", {"mean", "stddev"});
        if (t.contains("mean"))
            c.theta0.mean = vector_of(t["mean"], "sampler.theta0.mean");
        get_opt(t, "stddev", "sampler.theta0", c.theta0.stddev);
        if (c.theta0.stddev < 0.0)
            throw ConfigError("sampler.theta0.stddev must be >= 0");
    }
}

void parse_experiment(const json& j, ExperimentParams& e) {
    const std::string w = "experiment";
    only_keys(j, w, {"kind", "lambdas", "bootstrap", "epsilon", "kappa", "planner", "execute", "chain", "tau_max", "level"});
    get_opt(j, "kind", w, e.kind);
    static const std::set<std::string> kinds{"sample", "couple", "rate-sweep", "moments", "ula-bias", "plan", "verify"};
    if (!kinds.count(e.kind))
        throw ConfigError("experiment.kind '" + e.kind + "' is not one of sample|couple|rate-sweep|moments|ula-bias|plan|verify");
    get_opt(j, "lambdas", w, e.lambdas);
    get_opt(j, "bootstrap", w, e.bootstrap);
    get_opt(j, "epsilon", w, e.epsilon);
    get_opt(j, "kappa", w, e.kappa);
    get_opt(j, "planner", w, e.planner);
    get_opt(j, "execute", w, e.execute);
    get_opt(j, "chain", w, e.chain);
    get_opt(j, "tau_max", w, e.tau_max);
    get_opt(j, "level", w, e.level);
    if (e.planner != "iid" && e.planner != "dependent")
        throw ConfigError("experiment.planner must be 'iid' or 'dependent'");
    if (e.chain != "sgld" && e.chain != "ula")
        throw ConfigError("experiment.chain must be 'sgld' or 'ula'");
    if (e.level != "quick" && e.level != "full")
        throw ConfigError("experiment.level must be 'quick' or 'full'");
}

} // namespace

ExperimentConfig parse_config(const json& j) {
    only_keys(j, "config", {"schema", "seed", "oracle", "stream", "sampler", "experiment", "output"});
    ExperimentConfig c;
    c.schema = j.contains("schema") ? get<int>(j, "schema", "config") : -1;
    if (c.schema != kSchemaVersion)
        throw ConfigError("config.schema must be " + std::to_string(kSchemaVersion));
    if (!j.contains("seed"))
        throw ConfigError("config.seed is mandatory");
    c.seed = get<std::uint64_t>(j, "seed", "config");
    c.oracle = parse_oracle(j.value("oracle", json{{"family", "quadratic"}, {"S", json::array({json::array({1.0})})}}));
    c.stream = parse_stream(j.value("stream", json{{"kind", "iid-gaussian"}}));
    if (j.contains("sampler"))
        parse_sampler(j["sampler"], c.sampler);
    if (j.contains("experiment"))
        parse_experiment(j["experiment"], c.experiment);
    if (j.contains("output")) {
        only_keys(j["output"], "output", {"dir"});
        get_opt(j["output"], "dir", "output", c.output_dir);
    }
    c.sampler.seed = c.seed;
    c.sampler.data_seed = c.stream.seed;
    c.echo = j;
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
    if (o.lambda) {
        c.sampler.lambda = *o.lambda;
        c.echo["sampler"]["lambda"] = *o.lambda;
    }
    if (o.steps) {
        c.sampler.steps = *o.steps;
        c.echo["sampler"]["steps"] = *o.steps;
    }
    if (o.replicas) {
        c.sampler.replicas = *o.replicas;
        c.echo["sampler"]["replicas"] = *o.replicas;
    }
    if (o.record_every) {
        c.sampler.record_every = *o.record_every;
        c.echo["sampler"]["record_every"] = *o.record_every;
    }
    if (o.seed) {
        c.seed = *o.seed;
        c.sampler.seed = *o.seed;
        c.echo["seed"] = *o.seed;
    }
    if (o.output_dir) {
        c.output_dir = *o.output_dir;
        c.echo["output"]["dir"] = *o.output_dir;
    }
    if (c.sampler.replicas == 0)
        throw ConfigError("sampler.replicas must be >= 1");
    if (c.sampler.record_every == 0)
        throw ConfigError("sampler.record_every must be >= 1");
}

OracleBundle build_oracle(const ExperimentConfig& c) {
    try {
        if (c.oracle.family == "quadratic")
            return {make_quadratic_oracle(c.oracle.quadratic), std::nullopt};
        if (!is_iid(c.stream.spec))
            throw ConfigError("the iid-rho family needs an iid-gaussian stream");
        auto io = make_iid_rho_oracle(c.oracle.iid);
        return {io.oracle, io};
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("oracle: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("oracle: ") + e.what());
    }
}

json stream_to_json(const LinearProcessSpec& spec) {
    json j;
    j["K"] = spec.order();
    if (spec.coeffs.size() <= 64)
        j["coeffs"] = spec.coeffs;
    else
        j["coeffs_head"] = std::vector<double>(spec.coeffs.begin(), spec.coeffs.begin() + 16);
    if (spec.decay)
        j["decay"] = {{"c", spec.decay->c}, {"beta", spec.decay->beta}};
    j["innovation"] = "gaussian";
    return j;
}

json oracle_constants_json(const GradientOracle& o) {
    std::vector<double> ts(o.theta_star().data(), o.theta_star().data() + o.theta_star().size());
    const auto b = compute_base(o.a(), o.L1(), o.L2(), o.dim(), o.H_star());
    return {{"family", o.family()}, {"d", o.dim()},        {"m", o.data_dim()},        {"a", o.a()},
            {"L1", o.L1()},         {"L2", o.L2()},        {"H_star", o.H_star()},     {"theta_star", ts},
            {"L1_per_coord", o.L1_per_coord()}, {"L2_per_coord", o.L2_per_coord()},
            {"lambda_bar", b.lambda_bar}, {"a_tilde", b.a_tilde}};
}

} // namespace langmix::harness
