#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bundletc::verify {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail; // measured error or failure note
};

std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed);
std::vector<std::string> suite_names();

bool all_passed(const std::vector<CheckResult>& results);

// Generates `count` random well-typed expressions over a randomized
// environment; each is rendered, re-parsed, typechecked and evaluated.
// Returns the number of failures (0 expected: type soundness).
int dsl_soundness_failures(std::uint64_t seed, int count);

} // namespace bundletc::verify
