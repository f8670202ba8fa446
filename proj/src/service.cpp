// SPDX-License-Identifier: Apache-2.0
#include "hema/service.hpp"

#include <chrono>

#include <httplib.h>
#include <json.hpp>

#include "hema/error.hpp"
#include "hema/image.hpp"
#include "hema/labels.hpp"

namespace hema {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

std::string error_body(std::string_view code, std::string_view message) {
  return json{{"error", code}, {"message", message}}.dump();
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  res.status = status;
  res.set_content(error_body(code, message), kJson);
}

}  // namespace

std::string diagnosis_to_json(const DiagnosisResult& r) {
  // ordered_json keeps the canonical label order in the body
  nlohmann::ordered_json probs = nlohmann::ordered_json::object();
  for (const auto& [label, p] : r.probabilities) probs[label] = p;
  nlohmann::ordered_json j;
  j["predicted_label"] = r.predicted_label;
  j["probabilities"] = std::move(probs);
  j["model_id"] = r.model_id;
  j["elapsed_ms"] = r.elapsed_ms;
  return j.dump();
}

struct DiagnosisService::Impl {
  ServiceOptions options;
  Registry registry;
  std::optional<nn::ModelGraph> model;
  std::optional<std::string> model_id;
  httplib::Server server;
  int bound_port = -1;

  explicit Impl(ServiceOptions opts) : options(std::move(opts)), registry(options.registry) {}
};

DiagnosisService::DiagnosisService(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  auto& im = *impl_;
  im.options.preprocess.validate();
  std::optional<std::string> id = im.options.model_id;
  if (!id && !im.registry.list().empty()) id = im.registry.best_model();
  if (id) {
    auto [graph, meta] = im.registry.load_artifact(*id);
    const auto in = graph.spec().input_shape;
    if (in.h != im.options.preprocess.target_height || in.w != im.options.preprocess.target_width) {
      throw Error(ErrorCode::Config, "model input does not match the preprocessing target size");
    }
    im.model.emplace(std::move(graph));
    im.model_id = meta.model_id;
  }

  auto& srv = im.server;
  srv.set_payload_max_length(im.options.max_upload_bytes);

  srv.Post("/api/diagnose", [this](const httplib::Request& req, httplib::Response& res) {
    if (!model_loaded()) {
      send_error(res, 503, "no_model", "no model loaded");
      return;
    }
    if (!req.has_file("image")) {
      send_error(res, 400, "missing_image", "multipart field 'image' is required");
      return;
    }
    const auto file = req.get_file_value("image");
    try {
      res.set_content(diagnosis_to_json(diagnose(file.content)), kJson);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Decode) {
        send_error(res, 400, "decode_error", e.what());
      } else {
        send_error(res, 500, to_string(e.code()), e.what());
      }
    }
  });
  srv.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(health_json(), kJson);
  });
  srv.Get("/api/models", [this](const httplib::Request&, httplib::Response& res) {
    try {
      res.set_content(models_json(), kJson);
    } catch (const Error& e) {
      send_error(res, 500, to_string(e.code()), e.what());
    }
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    switch (res.status) {
      case 413:
        res.set_content(error_body("payload_too_large", "upload exceeds the size limit"), kJson);
        break;
      case 404:
        res.set_content(error_body("not_found", "no such route"), kJson);
        break;
      default:
        res.set_content(error_body("bad_request", httplib::status_message(res.status)), kJson);
    }
    return httplib::Server::HandlerResponse::Handled;
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    send_error(res, 500, "internal", "unhandled server error");
  });

  if (im.options.static_dir && !srv.set_mount_point("/", im.options.static_dir->string())) {
    throw Error(ErrorCode::Config, "static directory not found: " + im.options.static_dir->string());
  }
}

DiagnosisService::~DiagnosisService() { stop(); }

bool DiagnosisService::model_loaded() const noexcept { return impl_->model.has_value(); }

const std::optional<std::string>& DiagnosisService::model_id() const noexcept { return impl_->model_id; }

DiagnosisResult DiagnosisService::diagnose(std::string_view image_bytes) const {
  if (!impl_->model) throw Error(ErrorCode::State, "no model loaded");
  const auto start = std::chrono::steady_clock::now();

  const ImageTensor input = preprocess_eval(decode(image_bytes), impl_->options.preprocess);
  nn::Tensor batch({1, input.height(), input.width(), input.channels()});
  std::copy(input.data().begin(), input.data().end(), batch.data().begin());
  const nn::ClassProbabilities probs = impl_->model->predict(batch).front();

  DiagnosisResult r;
  const int best = nn::argmax(probs);
  r.predicted_label = std::string(label_at(best).display_name);
  for (const auto& label : kLabels) {
    r.probabilities.emplace_back(std::string(label.display_name), static_cast<double>(probs[label.id]));
  }
  r.model_id = *impl_->model_id;
  r.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string DiagnosisService::health_json() const {
  return json{{"status", "ok"}, {"model_loaded", model_loaded()}}.dump();
}

std::string DiagnosisService::models_json() const {
  json out = json::array();
  for (const auto& meta : impl_->registry.ranked()) out.push_back(json::parse(meta_to_json(meta, false)));
  return out.dump();
}

int DiagnosisService::bind() {
  auto& im = *impl_;
  if (im.options.port == 0) {
    im.bound_port = im.server.bind_to_any_port(im.options.host);
  } else if (im.server.bind_to_port(im.options.host, im.options.port)) {
    im.bound_port = im.options.port;
  } else {
    im.bound_port = -1;
  }
  if (im.bound_port < 0) {
    throw Error(ErrorCode::Io, "cannot bind " + im.options.host + ":" + std::to_string(im.options.port));
  }
  return im.bound_port;
}

void DiagnosisService::listen() {
  if (impl_->bound_port < 0) bind();
  impl_->server.listen_after_bind();
}

void DiagnosisService::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void DiagnosisService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace hema
