// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace hema::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kRuntimeError = 3,
};

/// Entry point of the `hema` tool. Results go to `out`; progress and the
/// single-line error reason go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace hema::cli
