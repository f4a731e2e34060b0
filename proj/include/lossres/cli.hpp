#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace lossres::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kFitFailure = 2,
  kDegraded = 3,
};

/// Entry point behind the `lossres` executable:
///
///   lossres fit       --input T.csv [--model glm|hglm] [--p 1] [--p-random 2] ...
///   lossres reserve   (fit flags) [--format json|csv]
///   lossres bootstrap (fit flags) --seed S [--boot 1000] [--quantiles ...] [--threads k]
///                     [--dump-replicates path] [--plot-data path]
///
/// Results go to `out` (or --output), diagnostics to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace lossres::cli
