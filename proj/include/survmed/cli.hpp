#pragma once

#include <iosfwd>

namespace survmed {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

/// Entry point of the `survmed` executable:
///   simulate --family <S1|S2|M1|M2|M3|M4|M5> [--q N] [--seed N] [--out DIR]
///            [--parallel N] [--n N] [--ties efron|breslow]
///   analyze --data FILE --config FILE [--bootstrap N] [--level F]
///           [--random-control] [--seed N] [--out DIR] [--parallel N]
///   scenario-dump --family F
int cli_main(int argc, const char* const* argv);
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace survmed
