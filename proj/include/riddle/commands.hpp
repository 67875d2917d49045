#pragma once

#include <ostream>
#include <string>

#include "riddle/tomlconf.hpp"

namespace riddle::cli {

int cmd_check(const config::RunConfig& cfg, std::ostream& log);
int cmd_basin(const config::RunConfig& cfg, std::ostream& log);
int cmd_loynes(const config::RunConfig& cfg, std::ostream& log);
int cmd_stability(const config::RunConfig& cfg, std::ostream& log);
int cmd_spectrum(const config::RunConfig& cfg, std::ostream& log);
int cmd_graph(const config::RunConfig& cfg, std::ostream& log);
int cmd_pressure(const config::RunConfig& cfg, std::ostream& log);

// dispatch plus the error-to-exit-code mapping:
// 0 success, 2 config/hypothesis, 3 I/O, 4 inconclusive statistics
int run_command(const std::string& name, const config::RunConfig& cfg, std::ostream& log);

} // namespace riddle::cli
