// SPDX-License-Identifier: Apache-2.0
#include "hema/history.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "hema/error.hpp"

namespace hema {

void TrainingHistory::validate() const {
  const std::size_t n = train_accuracy.size();
  if (n == 0) throw Error(ErrorCode::Argument, "history is empty");
  if (train_loss.size() != n || val_accuracy.size() != n || val_loss.size() != n) {
    throw Error(ErrorCode::Argument, "history series have different lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = train_accuracy[i] >= 0.0 && train_accuracy[i] <= 1.0 && val_accuracy[i] >= 0.0 &&
                    val_accuracy[i] <= 1.0 && train_loss[i] >= 0.0 && val_loss[i] >= 0.0 &&
                    std::isfinite(train_loss[i]) && std::isfinite(val_loss[i]);
    if (!ok) throw Error(ErrorCode::Argument, "history value out of range at epoch " + std::to_string(i + 1));
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string history_to_csv(const TrainingHistory& history) {
  history.validate();
  std::string out(kHistoryCsvHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < history.epochs(); ++i) {
    out += std::to_string(i + 1) + "," + format_double(history.train_accuracy[i]) + "," +
           format_double(history.train_loss[i]) + "," + format_double(history.val_accuracy[i]) + "," +
           format_double(history.val_loss[i]) + "\n";
  }
  return out;
}

TrainingHistory history_from_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != kHistoryCsvHeader) {
    throw Error(ErrorCode::Data, "history CSV: unexpected header");
  }
  TrainingHistory h;
  std::size_t expected_epoch = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double values[5];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 5; ++k) {
      const auto res = std::from_chars(p, end, values[k]);
      if (res.ec != std::errc{} || (k < 4 && (res.ptr == end || *res.ptr != ','))) {
        throw Error(ErrorCode::Data, "history CSV: malformed row '" + line + "'");
      }
      p = res.ptr + (k < 4 ? 1 : 0);
    }
    if (p != end || values[0] != static_cast<double>(expected_epoch)) {
      throw Error(ErrorCode::Data, "history CSV: malformed row '" + line + "'");
    }
    ++expected_epoch;
    h.train_accuracy.push_back(values[1]);
    h.train_loss.push_back(values[2]);
    h.val_accuracy.push_back(values[3]);
    h.val_loss.push_back(values[4]);
  }
  return h;
}

}  // namespace hema
