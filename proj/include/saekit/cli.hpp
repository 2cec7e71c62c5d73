#pragma once

#include <iosfwd>

namespace saekit::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitAbort = 2;

/// Entry point for the `saekit` tool. Subcommands: gen-data, train, eval,
/// sweep, diagnose, calibrate. Each accepts `--config FILE` (flat
/// key=value lines named after the long flags); explicit flags override the
/// file, which overrides defaults. Every run first echoes its resolved
/// settings as "# key=value" lines on `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace saekit::cli
