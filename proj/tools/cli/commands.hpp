#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "config.hpp"

namespace nichewave::cli {

enum ExitCode { exit_ok = 0, exit_config = 1, exit_numerical = 2 };

// Runs one command from a config file. Artifacts go to
// <output>/<command>-<label>.{csv,json}; a one-line summary goes to `out`,
// diagnostics to `err`.
int run(std::string_view command, const std::filesystem::path& config, std::ostream& out,
        std::ostream& err);

}  // namespace nichewave::cli
