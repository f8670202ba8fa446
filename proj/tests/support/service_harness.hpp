// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <thread>

#include "hema/service.hpp"

namespace hema::testing {

/// DiagnosisService listening on an ephemeral localhost port in a
/// background thread for the lifetime of the object.
class RunningService {
 public:
  explicit RunningService(ServiceOptions options);
  ~RunningService();
  RunningService(const RunningService&) = delete;
  RunningService& operator=(const RunningService&) = delete;

  int port() const noexcept { return port_; }
  DiagnosisService& service() noexcept { return service_; }

 private:
  DiagnosisService service_;
  int port_;
  std::thread thread_;
};

}  // namespace hema::testing
