// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hema {

/// Failure categories surfaced by the toolkit. The CLI maps each onto an
/// exit code and the service onto an HTTP status.
enum class ErrorCode {
  NotFound,
  Layout,
  EmptyClass,
  Config,
  InsufficientData,
  Manifest,
  Decode,
  State,
  Data,
  Asset,
  Contract,
  Divergence,
  Argument,
  Conflict,
  Io,
  Integrity,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hema
