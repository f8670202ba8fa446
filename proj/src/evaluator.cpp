// SPDX-License-Identifier: Apache-2.0
#include "hema/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "hema/error.hpp"

namespace hema {

using nlohmann::json;

std::size_t Metrics::count() const noexcept {
  std::size_t n = 0;
  for (const auto& row : confusion) {
    for (std::size_t v : row) n += v;
  }
  return n;
}

Metrics evaluate(const nn::Classifier& model, BatchSource& stream) {
  if (stream.augmenting()) throw Error(ErrorCode::Argument, "evaluate needs an augmentation-free stream");
  stream.reset();
  Metrics m;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::size_t n = 0;
  while (auto batch = stream.next()) {
    const auto probs = model.predict(batch->images);
    if (probs.size() != batch->size()) throw Error(ErrorCode::Contract, "model returned the wrong batch size");
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const int truth = batch->labels[i];
      const int pred = nn::argmax(probs[i]);
      ++m.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
      if (pred == truth) ++correct;
      const double p = std::max(static_cast<double>(probs[i][static_cast<std::size_t>(truth)]), kProbabilityFloor);
      loss_sum -= std::log(p);
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::Argument, "evaluate: stream yielded no records");
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  m.loss = loss_sum / static_cast<double>(n);
  return m;
}

namespace {

json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"loss", m.loss}, {"confusion", m.confusion}};
}

Metrics metrics_from(const json& j) {
  Metrics m;
  m.accuracy = j.at("accuracy").get<double>();
  m.loss = j.at("loss").get<double>();
  m.confusion = j.at("confusion").get<ConfusionMatrix>();
  return m;
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
  json splits = json::object();
  if (report.train) splits["train"] = metrics_json(*report.train);
  if (report.val) splits["val"] = metrics_json(*report.val);
  splits["test"] = metrics_json(report.test);
  json doc = {{"arch_name", report.arch_name}, {"model_id", report.model_id}, {"splits", std::move(splits)}};
  return doc.dump(2) + "\n";
}

EvaluationReport report_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    EvaluationReport r;
    r.arch_name = doc.at("arch_name").get<std::string>();
    r.model_id = doc.at("model_id").get<std::string>();
    const auto& splits = doc.at("splits");
    if (splits.contains("train")) r.train = metrics_from(splits.at("train"));
    if (splits.contains("val")) r.val = metrics_from(splits.at("val"));
    r.test = metrics_from(splits.at("test"));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Data, std::string("report: ") + e.what());
  }
}

std::vector<ComparisonRow> comparison_table(std::span<const EvaluationReport> reports) {
  std::vector<ComparisonRow> rows;
  rows.reserve(reports.size());
  for (const auto& r : reports) rows.push_back({r.arch_name, r.test.accuracy, r.test.loss});
  std::sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    if (a.loss != b.loss) return a.loss < b.loss;
    return a.model < b.model;
  });
  return rows;
}

std::string render_table_csv(std::span<const ComparisonRow> rows) {
  std::string out(kComparisonCsvHeader);
  out.push_back('\n');
  for (const auto& r : rows) {
    out += r.model + "," + format_double(r.accuracy) + "," + format_double(r.loss) + "\n";
  }
  return out;
}

std::string render_table_text(std::span<const ComparisonRow> rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.model.size());
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s\n", static_cast<int>(width), "Model", "Accuracy", "Loss");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %8.4f\n", static_cast<int>(width), r.model.c_str(), r.accuracy,
                  r.loss);
    out += buf;
  }
  return out;
}

void export_curves(const TrainingHistory& history, const std::filesystem::path& path) {
  const std::string csv = history_to_csv(history);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write curves to " + path.string());
  out << csv;
  if (!out.flush()) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace hema
