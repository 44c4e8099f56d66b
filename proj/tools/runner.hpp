#ifndef BBH_TOOLS_RUNNER_HPP
#define BBH_TOOLS_RUNNER_HPP

#include <string>
#include <vector>

#include "config.hpp"

namespace bbh::tools {

// process exit codes
inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_instability = 3;
inline constexpr int exit_correction_failure = 4;

int cmd_run(const RunConfig& cfg);
int cmd_exact(const RunConfig& cfg);
int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& param, const std::vector<std::string>& values,
              const std::string& out_dir, int jobs);
int cmd_check(const std::string& rho2_path, const std::string& rho1_path, int N, double epsilon);

CIState make_initial_ci(const RunConfig& cfg);

} // namespace bbh::tools

#endif
