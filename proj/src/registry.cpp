// SPDX-License-Identifier: Apache-2.0
#include "hema/registry.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hema/error.hpp"
#include "hema/io.hpp"
#include "hema/nn/serialize.hpp"
#include "hema/zoo.hpp"

namespace hema {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kIdLength = 16;

std::vector<std::string> canonical_labels() {
  std::vector<std::string> out;
  for (const auto& l : kLabels) out.emplace_back(l.display_name);
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::Io, "cannot create registry directory " + dir.string() + ": " + ec.message());
  }
}

std::vector<SelectionKey> keys_of(const std::vector<ModelArtifactMeta>& metas) {
  std::vector<SelectionKey> keys;
  for (const auto& m : metas) keys.push_back({m.arch_name, m.val_accuracy, m.val_loss});
  return keys;
}

}  // namespace

bool operator==(const ModelArtifactMeta& a, const ModelArtifactMeta& b) {
  const auto cfg = [](const TrainConfig& c) {
    return std::tie(c.epochs, c.batch_size, c.learning_rate, c.seed, c.class_weights);
  };
  return a.model_id == b.model_id && a.arch_name == b.arch_name && a.created_at == b.created_at &&
         a.val_accuracy == b.val_accuracy && a.val_loss == b.val_loss && a.test_accuracy == b.test_accuracy &&
         a.test_loss == b.test_loss && a.weights_path == b.weights_path && a.best_epoch == b.best_epoch &&
         cfg(a.config) == cfg(b.config) && a.labels == b.labels;
}

std::string meta_to_json(const ModelArtifactMeta& m, bool include_weights_path) {
  json j = {{"model_id", m.model_id},
            {"arch_name", m.arch_name},
            {"created_at", m.created_at},
            {"val_accuracy", m.val_accuracy},
            {"val_loss", m.val_loss},
            {"test_accuracy", optional_number(m.test_accuracy)},
            {"test_loss", optional_number(m.test_loss)},
            {"best_epoch", m.best_epoch},
            {"config",
             {{"epochs", m.config.epochs},
              {"batch_size", m.config.batch_size},
              {"learning_rate", m.config.learning_rate},
              {"seed", m.config.seed},
              {"class_weights", m.config.class_weights}}},
            {"labels", m.labels}};
  if (include_weights_path) j["weights_path"] = m.weights_path;
  return j.dump();
}

ModelArtifactMeta meta_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    ModelArtifactMeta m;
    m.model_id = j.at("model_id").get<std::string>();
    m.arch_name = j.at("arch_name").get<std::string>();
    m.created_at = j.at("created_at").get<std::string>();
    m.val_accuracy = j.at("val_accuracy").get<double>();
    m.val_loss = j.at("val_loss").get<double>();
    m.test_accuracy = number_or_null(j, "test_accuracy");
    m.test_loss = number_or_null(j, "test_loss");
    m.weights_path = j.value("weights_path", std::string{});
    m.best_epoch = j.at("best_epoch").get<int>();
    const auto& c = j.at("config");
    m.config.epochs = c.at("epochs").get<int>();
    m.config.batch_size = c.at("batch_size").get<std::size_t>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.class_weights = c.at("class_weights").get<bool>();
    m.labels = j.at("labels").get<std::vector<std::string>>();
    if (m.labels != canonical_labels()) throw Error(ErrorCode::Integrity, "index row has non-canonical labels");
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Integrity, std::string("registry index: ") + e.what());
  }
}

Registry::Registry(fs::path root) : root_(std::move(root)) {}

std::vector<ModelArtifactMeta> Registry::list() const {
  std::error_code ec;
  if (!fs::exists(index_path(), ec)) return {};
  const std::string text = read_file(index_path());
  std::vector<ModelArtifactMeta> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string::npos) break;  // incomplete trailing row
    const std::string_view line(text.data() + start, end - start);
    if (!line.empty()) out.push_back(meta_from_json(line));
    start = end + 1;
  }
  return out;
}

std::vector<ModelArtifactMeta> Registry::ranked() const {
  auto metas = list();
  std::vector<ModelArtifactMeta> out;
  while (!metas.empty()) {
    const auto keys = keys_of(metas);
    const auto best = select_best_index(keys);
    out.push_back(std::move(metas[best]));
    metas.erase(metas.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return out;
}

std::optional<ModelArtifactMeta> Registry::find(std::string_view model_id) const {
  for (auto& m : list()) {
    if (m.model_id == model_id) return m;
  }
  return std::nullopt;
}

std::string Registry::save_artifact(const TrainedModel& trained, const EvaluationReport* report) {
  ensure_dir(root_ / "weights");
  ensure_dir(root_ / "history");
  ensure_dir(root_ / "reports");

  const std::string bytes = nn::serialize_weights(trained.model);
  const std::string id = sha256_hex(bytes).substr(0, kIdLength);
  auto existing = list();
  if (std::any_of(existing.begin(), existing.end(), [&](const auto& m) { return m.model_id == id; })) {
    throw Error(ErrorCode::Conflict, "model id already registered: " + id);
  }

  ModelArtifactMeta meta;
  meta.model_id = id;
  meta.arch_name = trained.arch_name;
  meta.created_at = utc_timestamp();
  meta.val_accuracy = trained.best_val_accuracy;
  meta.val_loss = trained.best_val_loss();
  meta.weights_path = (fs::path("weights") / (id + ".hwts")).generic_string();
  meta.best_epoch = trained.best_epoch;
  meta.config = trained.config;
  meta.labels = canonical_labels();

  write_file_atomic(root_ / meta.weights_path, bytes);
  write_file_atomic(root_ / "history" / (id + ".csv"), history_to_csv(trained.history));
  if (report) {
    EvaluationReport stamped = *report;
    stamped.model_id = id;
    stamped.arch_name = trained.arch_name;
    meta.test_accuracy = stamped.test.accuracy;
    meta.test_loss = stamped.test.loss;
    write_file_atomic(root_ / "reports" / (id + ".json"), report_to_json(stamped));
  }

  std::string index;
  for (const auto& m : existing) index += meta_to_json(m) + "\n";
  index += meta_to_json(meta) + "\n";
  write_file_atomic(index_path(), index);
  return id;
}

std::pair<nn::ModelGraph, ModelArtifactMeta> Registry::load_artifact(std::string_view model_id) const {
  auto meta = find(model_id);
  if (!meta) throw Error(ErrorCode::NotFound, "unknown model id: " + std::string(model_id));
  const fs::path weights = root_ / meta->weights_path;
  std::string bytes;
  try {
    bytes = read_file(weights);
  } catch (const Error&) {
    throw Error(ErrorCode::Integrity, "weights file missing for " + meta->model_id);
  }
  if (sha256_hex(bytes).substr(0, kIdLength) != meta->model_id) {
    throw Error(ErrorCode::Integrity, "weights file does not match its content hash: " + weights.string());
  }
  auto model = build_architecture(meta->arch_name, BackboneInit::uninitialized());
  nn::deserialize_weights(model, bytes);
  return {std::move(model), std::move(*meta)};
}

std::string Registry::best_model() const {
  const auto metas = list();
  if (metas.empty()) throw Error(ErrorCode::NotFound, "registry is empty: " + root_.string());
  return metas[select_best_index(keys_of(metas))].model_id;
}

std::optional<EvaluationReport> Registry::report(std::string_view model_id) const {
  const fs::path p = root_ / "reports" / (std::string(model_id) + ".json");
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  return report_from_json(read_file(p));
}

std::optional<TrainingHistory> Registry::history(std::string_view model_id) const {
  const fs::path p = root_ / "history" / (std::string(model_id) + ".csv");
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  return history_from_csv(read_file(p));
}

Registry::AuditResult Registry::audit() const {
  AuditResult result;
  std::set<fs::path> referenced;
  for (const auto& m : list()) {
    const fs::path p = root_ / m.weights_path;
    referenced.insert(p.lexically_normal());
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) result.missing_weights.push_back(m.model_id);
  }
  std::error_code ec;
  if (fs::is_directory(root_ / "weights", ec)) {
    for (const auto& entry : fs::directory_iterator(root_ / "weights")) {
      if (!referenced.count(entry.path().lexically_normal())) result.orphans.push_back(entry.path());
    }
  }
  std::sort(result.orphans.begin(), result.orphans.end());
  return result;
}

}  // namespace hema
