#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lata::cli {

/// Runs one command. Failures print a single JSON object on `err` and
/// return 2 (config), 3 (data) or 4 (numeric degenerate).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::vector<std::string> command_names();

/// Long flag names registered for `command` (e.g. "--k"), from the same
/// definitions the parser uses.
std::vector<std::string> registered_flags(const std::string& command);

/// The text printed by `<command> --help`.
std::string help_text(const std::string& command);

}  // namespace lata::cli
