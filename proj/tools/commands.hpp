#pragma once

#include <iosfwd>
#include <string>

namespace bundletc::cli {

// Exit codes: 0 success, 1 domain failure, 2 usage/IO/schema error.
constexpr int exit_ok = 0;
constexpr int exit_domain = 1;
constexpr int exit_usage = 2;

// Telescope verbosity: 0 = low, 1 = mid, 2 = high. `name` accepts those
// words; the default comes from BUNDLETC_TELESCOPE (high when unset).
int telescope_from_name(const std::string& name);
int default_telescope();

int cmd_typecheck(const std::string& path, int telescope, std::ostream& out, std::ostream& err);
int cmd_geodesic(const std::string& config_path, std::ostream& out, std::ostream& err);
int cmd_variation(const std::string& config_path, std::ostream& out, std::ostream& err);
int cmd_harmonic(const std::string& config_path, std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& suite, unsigned long long seed, std::ostream& out,
               std::ostream& err);

} // namespace bundletc::cli
