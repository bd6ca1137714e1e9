#pragma once

// The acceptance suite behind `langmix verify`. Each check reports a
// scalar margin (>= 0 iff it passes, scaled per check) and a details object.
// Nothing time-dependent goes into the verdict, so two runs with the same
// seed and level serialize to identical bytes.

#include "langmix/harness/config.hpp"

#include <functional>
#include <string>
#include <vector>

namespace langmix::harness {

enum class Level { quick, full };

Level parse_level(const std::string& s);

struct CheckResult {
    std::string id;
    std::string name;
    bool pass = false;
    double margin = 0.0;
    json details;
};

inline constexpr std::uint64_t kDefaultVerifySeed = 20240917;

struct VerifyOptions {
    Level level = Level::quick;
    std::uint64_t seed = kDefaultVerifySeed;
    std::vector<std::string> only; // check ids; empty runs all
    std::function<void(const CheckResult&)> on_result; // progress hook
};

std::vector<std::string> check_ids();
CheckResult run_check(const std::string& id, Level level, std::uint64_t seed);

// verdict {level, seed, checks: [...], pass}
json run_verify(const VerifyOptions& opt);

} // namespace langmix::harness
