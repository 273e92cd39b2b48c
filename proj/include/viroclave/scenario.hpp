#pragma once

// Line-oriented scripts driving the system simulation. One command per line,
// '#' comments. `expect` lines are checked against the state at that point;
// by convention they form a block at the end.
//
// Memory-resident scripts:
//   program <id> <size> [seed]        clean generated host
//   file <id> <path>                  load a file (path relative to the script)
//   infect <id> <virus> [seed]        infect through the definitions
//   execute <id> | open <id>
//   cycle <n>                         n rounds of execute+open over every file
//   clean-files                       repair files, leave memory alone
//   exterminate                       the four-step procedure
//   expect memory <virus|none>
//   expect infected <op> <n>          op: == != >= <= > <
//   expect file <id> clean|infected|absent
//   expect os-clean true|false
//   expect steps <n>                  entries in the last extermination log
//
// Recovery scripts:
//   trusted <host>
//   event boot | connect <host> | download-recovery | download-scan | repair | reboot
//   expect phase <PhaseName>
//   expect network full|filtered
//   expect blocked <n>                rejected untrusted connects so far
//   expect rejected <n>               out-of-order events so far

#include "viroclave/scanner.hpp"
#include "viroclave/syssim.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace viroclave {

struct AssertionResult {
    std::size_t line = 0;
    std::string text;
    bool passed = false;
    std::string actual;
};

struct ScenarioResult {
    std::vector<std::string> transcript;
    std::vector<AssertionResult> assertions;

    bool all_passed() const noexcept;
};

/// Throws ParseError on a malformed line; errors raised by a command (unknown
/// file, unknown virus) are rethrown as ParseError for that line.
ScenarioResult run_memres_scenario(std::string_view script, const DefinitionSet& defs,
                                   const std::filesystem::path& base_dir = ".");
ScenarioResult run_recovery_scenario(std::string_view script);

}  // namespace viroclave
