// SPDX-License-Identifier: Apache-2.0
#include "hema/error.hpp"

namespace hema {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Layout: return "layout";
    case ErrorCode::EmptyClass: return "empty_class";
    case ErrorCode::Config: return "config";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::Manifest: return "manifest";
    case ErrorCode::Decode: return "decode";
    case ErrorCode::State: return "state";
    case ErrorCode::Data: return "data";
    case ErrorCode::Asset: return "asset";
    case ErrorCode::Contract: return "contract";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Argument: return "argument";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Io: return "io";
    case ErrorCode::Integrity: return "integrity";
  }
  return "unknown";
}

}  // namespace hema
