// SPDX-License-Identifier: Apache-2.0
#include "service_harness.hpp"

namespace hema::testing {

namespace {
ServiceOptions ephemeral(ServiceOptions options) {
  options.host = "127.0.0.1";
  options.port = 0;
  return options;
}
}  // namespace

RunningService::RunningService(ServiceOptions options)
    : service_(ephemeral(std::move(options))), port_(service_.bind()), thread_([this] { service_.listen(); }) {
  service_.wait_until_ready();
}

RunningService::~RunningService() {
  service_.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace hema::testing
