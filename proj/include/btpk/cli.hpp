#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace btpk::cli {

/// Exit codes of `run`.
enum ExitCode : int {
  kOk = 0,
  kVerdictFalse = 1,
  kUsage = 2,
  kDataError = 3,
};

/// Runs one subcommand. `args` excludes the program name.
///   train   --data F [--config C] --out DIR
///   tag     --model M --input F
///   explain --model M --input F [--entity a:b] [--sentence k] [--config C] [--out DIR]
///   check   --btpk J --formula "..." (--state S | --all) [--define q=label(video)]...
///   export  --btpk J --format dot|json
///   synth   [--spec S] --seed N --out F
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace btpk::cli
