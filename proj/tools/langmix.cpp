// langmix command-line front end. Flags override the config file, which
// overrides built-in defaults.
//
// exit codes: 0 ok, 2 config / input error, 3 theorem hypothesis violated,
// 4 a verified inequality failed, 1 anything else

#include "langmix/harness/acceptance.hpp"
#include "langmix/harness/commands.hpp"
#include "langmix/harness/io.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

using namespace langmix;
using namespace langmix::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitHypothesis = 3;
constexpr int kExitVerify = 4;

struct ConfigFlags {
    std::string path;
    Overrides ov;
    void add(CLI::App* sc) {
        sc->add_option("--config,-c", path, "experiment JSON file")->required()->check(CLI::ExistingFile);
        sc->add_option("--lambda", ov.lambda, "step size");
        sc->add_option("--steps", ov.steps, "horizon N");
        sc->add_option("--replicas", ov.replicas);
        sc->add_option("--record-every", ov.record_every);
        sc->add_option("--seed", ov.seed);
        sc->add_option("--out,-o", ov.output_dir, "output directory");
    }
    ExperimentConfig load() const {
        auto cfg = load_config(path);
        apply_overrides(cfg, ov);
        return cfg;
    }
};

int finish(const CommandResult& r) {
    std::cout << r.report.dump(2) << '\n';
    return r.verified ? 0 : kExitVerify;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ULA / SGLD sampling with dependent data streams, explicit constants and checks"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::function<int()> action;

    ConfigFlags sample_f, couple_f, sweep_f, moments_f, bias_f, plan_f, mixing_f;

    auto* sample = app.add_subcommand("sample", "run ULA or SGLD replicas and check moment bounds");
    sample_f.add(sample);
    std::optional<std::string> chain;
    sample->add_option("--chain", chain, "sgld | ula")->check(CLI::IsMember({"sgld", "ula"}));
    sample->callback([&] {
        action = [&] {
            auto cfg = sample_f.load();
            if (chain) {
                cfg.experiment.chain = *chain;
                cfg.echo["experiment"]["chain"] = *chain;
            }
            return finish(cmd_sample(cfg));
        };
    });

    auto* couple = app.add_subcommand("couple", "synchronously coupled SGLD / ULA chains");
    couple_f.add(couple);
    couple->callback([&] { action = [&] { return finish(cmd_couple(couple_f.load())); }; });

    auto* sweep = app.add_subcommand("rate-sweep", "stationary coupled distance across step sizes");
    sweep_f.add(sweep);
    std::vector<double> lambdas;
    std::optional<std::size_t> bootstrap;
    sweep->add_option("--lambdas", lambdas, "step-size grid")->delimiter(',');
    sweep->add_option("--bootstrap", bootstrap, "bootstrap resamples for the slope CI");
    sweep->callback([&] {
        action = [&] {
            auto cfg = sweep_f.load();
            if (!lambdas.empty()) {
                cfg.experiment.lambdas = lambdas;
                cfg.echo["experiment"]["lambdas"] = lambdas;
            }
            if (bootstrap) {
                cfg.experiment.bootstrap = *bootstrap;
                cfg.echo["experiment"]["bootstrap"] = *bootstrap;
            }
            return finish(cmd_rate_sweep(cfg));
        };
    });

    auto* moments = app.add_subcommand("moments", "drift and sup-moment inequalities");
    moments_f.add(moments);
    moments->callback([&] { action = [&] { return finish(cmd_moments(moments_f.load())); }; });

    auto* bias = app.add_subcommand("ula-bias", "W2 between the ULA invariant law and the target");
    bias_f.add(bias);
    bias->callback([&] { action = [&] { return finish(cmd_ula_bias(bias_f.load())); }; });

    auto* plan = app.add_subcommand("plan", "step size and horizon for a W2 accuracy");
    plan_f.add(plan);
    std::optional<double> eps, kappa;
    std::optional<std::string> planner;
    bool execute = false;
    plan->add_option("--epsilon", eps);
    plan->add_option("--kappa", kappa);
    plan->add_option("--planner", planner)->check(CLI::IsMember({"iid", "dependent"}));
    plan->add_flag("--execute", execute, "run SGLD at the planned (lambda, n) and measure W2 (d = 1)");
    plan->callback([&] {
        action = [&] {
            auto cfg = plan_f.load();
            auto& e = cfg.experiment;
            auto& echo = cfg.echo["experiment"];
            if (eps)
                echo["epsilon"] = e.epsilon = *eps;
            if (kappa)
                echo["kappa"] = e.kappa = *kappa;
            if (planner)
                echo["planner"] = e.planner = *planner;
            if (execute)
                echo["execute"] = e.execute = true;
            return finish(cmd_plan(cfg));
        };
    });

    auto* mixing = app.add_subcommand("mixing", "analytic mixing profile of the configured stream");
    mixing->add_option("--config,-c", mixing_f.path)->required()->check(CLI::ExistingFile);
    MixingArgs margs;
    mixing->add_option("--tau-max", margs.tau_max);
    mixing->add_option("--r", margs.r);
    mixing->add_option("--s", margs.s);
    mixing->add_option("--out,-o", margs.out, "profile JSON path");
    mixing->callback([&] { action = [&] { return finish(cmd_mixing(load_config(mixing_f.path), margs)); }; });

    auto* constants = app.add_subcommand("constants", "every explicit constant for given structural inputs");
    ConstantsArgs cargs;
    constants->add_option("--a", cargs.a, "strong monotonicity");
    constants->add_option("--l1", cargs.l1);
    constants->add_option("--l2", cargs.l2);
    constants->add_option("--d", cargs.d);
    constants->add_option("--m", cargs.m, "data dimension for the default iid Gaussian mixing profile");
    constants->add_option("--p", cargs.p);
    constants->add_option("--h-star", cargs.h_star);
    constants->add_option("--theta-star-norm", cargs.theta_star_norm);
    constants->add_option("--theta0-sq-dev", cargs.theta0_sq_dev, "E|theta0 - theta*|^2");
    constants->add_option("--lambda", cargs.lambda);
    constants->add_option("--epsilon", cargs.epsilon);
    constants->add_option("--kappa", cargs.kappa);
    constants->add_option("--rho", cargs.rho);
    constants->add_option("--mixing", cargs.mixing_file, "profile JSON from `langmix mixing`");
    constants->add_option("--out,-o", cargs.out);
    constants->callback([&] { action = [&] { return finish(cmd_constants(cargs)); }; });

    auto* w2 = app.add_subcommand("w2", "empirical W2 between two sample files");
    W2Args wargs;
    w2->add_option("--a", wargs.a)->required()->check(CLI::ExistingFile);
    w2->add_option("--b", wargs.b)->required()->check(CLI::ExistingFile);
    w2->add_option("--method", wargs.method)->check(CLI::IsMember({"1d", "assign"}));
    w2->callback([&] { action = [&] { return finish(cmd_w2(wargs)); }; });

    auto* verify = app.add_subcommand("verify", "run the acceptance checks and write a verdict");
    std::string level = "quick", verdict_path = "verdict.json";
    std::uint64_t vseed = kDefaultVerifySeed;
    std::vector<std::string> only;
    bool quiet = false;
    verify->add_option("--level", level)->check(CLI::IsMember({"quick", "full"}));
    verify->add_option("--seed", vseed)->capture_default_str();
    verify->add_option("--out,-o", verdict_path, "verdict JSON path")->capture_default_str();
    verify->add_option("--only", only, "check ids to run")->delimiter(',');
    verify->add_flag("--quiet,-q", quiet);
    verify->callback([&] {
        action = [&] {
            VerifyOptions opt;
            opt.level = parse_level(level);
            opt.seed = vseed;
            opt.only = only;
            if (!quiet)
                opt.on_result = [](const CheckResult& r) {
                    std::fprintf(stderr, "[%s] %-10s %s (margin %s)\n", r.pass ? "PASS" : "FAIL", r.id.c_str(),
                                 r.name.c_str(), fmt17(r.margin).c_str());
                };
            const json verdict = run_verify(opt);
            write_json(verdict_path, verdict);
            return verdict["pass"].get<bool>() ? 0 : kExitVerify;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        return action();
    } catch (const HypothesisViolation& e) {
        std::cerr << "langmix: hypothesis violated: " << e.what() << '\n';
        return kExitHypothesis;
    } catch (const ConfigError& e) {
        std::cerr << "langmix: config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "langmix: parameter out of range: " << e.what() << '\n';
        return kExitConfig;
    } catch (const UnsupportedOperation& e) {
        std::cerr << "langmix: unsupported: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "langmix: " << e.what() << '\n';
        return 1;
    }
}
