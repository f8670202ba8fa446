// SPDX-License-Identifier: Apache-2.0
#include "hema/cli.hpp"

#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hema/error.hpp"
#include "hema/evaluator.hpp"
#include "hema/ingest.hpp"
#include "hema/registry.hpp"
#include "hema/service.hpp"
#include "hema/streams.hpp"
#include "hema/trainer.hpp"
#include "hema/zoo.hpp"

namespace hema::cli {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Argument:
      return kUsage;
    case ErrorCode::NotFound:
    case ErrorCode::Layout:
    case ErrorCode::EmptyClass:
    case ErrorCode::InsufficientData:
    case ErrorCode::Manifest:
    case ErrorCode::Decode:
    case ErrorCode::Data:
    case ErrorCode::Asset:
    case ErrorCode::Integrity:
      return kDataError;
    default:
      return kRuntimeError;
  }
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

struct ScanArgs {
  fs::path data_root;
};

struct SplitArgs {
  fs::path data_root;
  fs::path manifest;
  std::vector<double> ratios{kDefaultRatios.begin(), kDefaultRatios.end()};
  std::uint64_t seed = 42;
};

struct TrainArgs {
  std::string arch;
  fs::path manifest;
  fs::path registry = "registry";
  fs::path assets = "assets";
  TrainConfig config;
  bool random_backbone = false;
};

struct EvaluateArgs {
  std::string model_id;
  std::string split = "test";
  fs::path manifest;
  fs::path registry = "registry";
};

struct CompareArgs {
  fs::path registry = "registry";
};

struct ServeArgs {
  ServiceOptions options;
  std::string model_id;
  fs::path static_dir;
};

int do_scan(const ScanArgs& a, std::ostream& out) {
  const auto records = scan_corpus(a.data_root);
  std::array<std::size_t, kNumClasses> per_class{};
  for (const auto& r : records) ++per_class[static_cast<std::size_t>(r.label.id)];
  out << "label,count\n";
  for (const auto& l : kLabels) out << l.folder_name << ',' << per_class[static_cast<std::size_t>(l.id)] << '\n';
  return kOk;
}

int do_split(const SplitArgs& a, std::ostream& out) {
  const SplitRatios ratios{a.ratios.at(0), a.ratios.at(1), a.ratios.at(2)};
  validate_ratios(ratios);
  const auto records = scan_corpus(a.data_root);
  const auto manifest = stratified_split(records, ratios, a.seed);
  save_manifest(manifest, a.manifest);
  out << "split,train,val,test\n";
  for (const auto& l : kLabels) {
    out << l.folder_name << ',' << manifest.count(l, Split::Train) << ',' << manifest.count(l, Split::Val) << ','
        << manifest.count(l, Split::Test) << '\n';
  }
  return kOk;
}

nn::ModelGraph build_for_training(const TrainArgs& a, const std::string& arch) {
  if (arch == "convnet" || a.random_backbone) return build_architecture(arch, BackboneInit::random(a.config.seed));
  return build_architecture(arch, BackboneInit::pretrained(a.assets, a.config.seed));
}

int do_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  a.config.validate();
  std::vector<std::string> archs;
  if (a.arch == "all") {
    archs.assign(kArchitectures.begin(), kArchitectures.end());
  } else if (is_architecture(a.arch)) {
    archs.push_back(a.arch);
  } else {
    throw Error(ErrorCode::Argument, "unknown architecture: " + a.arch);
  }

  const auto manifest = load_manifest(a.manifest);
  const PreprocessConfig pre;
  Registry registry(a.registry);

  for (const auto& arch : archs) {
    // Build every model before touching data so a missing asset fails fast.
    auto model = build_for_training(a, arch);
    TrainStream train_stream(manifest, pre, a.config.batch_size, a.config.seed);
    EvalStream val_stream(manifest, Split::Val, pre, a.config.batch_size);
    EvalStream test_stream(manifest, Split::Test, pre, a.config.batch_size);

    auto trained = train(std::move(model), train_stream, val_stream, a.config, [&](const EpochReport& r) {
      err << arch << " epoch " << r.epoch << '/' << a.config.epochs << " loss " << r.train_loss << " acc "
          << r.train_accuracy << " val_loss " << r.val.loss << " val_acc " << r.val.accuracy << '\n';
    });
    trained.arch_name = arch;

    // Train metrics are re-evaluated on the augmentation-free train split.
    EvalStream train_eval(manifest, Split::Train, pre, a.config.batch_size);
    EvaluationReport report;
    report.arch_name = arch;
    report.train = evaluate(trained.model, train_eval);
    report.val = evaluate(trained.model, val_stream);
    report.test = evaluate(trained.model, test_stream);
    const std::string id = registry.save_artifact(trained, &report);
    out << arch << ' ' << id << '\n';
  }
  return kOk;
}

int do_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto split = split_from_string(a.split);
  if (!split || *split == Split::Unassigned) throw Error(ErrorCode::Argument, "unknown split: " + a.split);
  Registry registry(a.registry);
  if (!registry.find(a.model_id)) throw Error(ErrorCode::NotFound, "unknown model id: " + a.model_id);
  const auto manifest = load_manifest(a.manifest);
  auto [model, meta] = registry.load_artifact(a.model_id);
  EvalStream stream(manifest, *split, PreprocessConfig{}, meta.config.batch_size);

  EvaluationReport report;
  report.arch_name = meta.arch_name;
  report.model_id = meta.model_id;
  const Metrics m = evaluate(model, stream);
  if (*split == Split::Train) report.train = m;
  if (*split == Split::Val) report.val = m;
  report.test = m;
  out << report_to_json(report) << '\n';
  return kOk;
}

int do_compare(const CompareArgs& a, std::ostream& out) {
  Registry registry(a.registry);
  std::vector<EvaluationReport> reports;
  for (const auto& meta : registry.list()) {
    if (auto r = registry.report(meta.model_id)) reports.push_back(std::move(*r));
  }
  out << render_table_csv(comparison_table(reports));
  return kOk;
}

DiagnosisService* g_running = nullptr;

extern "C" void on_signal(int) {
  if (g_running) g_running->stop();
}

int do_serve(ServeArgs a, std::ostream& err) {
  if (!a.model_id.empty()) a.options.model_id = a.model_id;
  if (!a.static_dir.empty()) a.options.static_dir = a.static_dir;
  DiagnosisService service(a.options);
  const int port = service.bind();
  err << "serving on " << a.options.host << ':' << port << " model "
      << service.model_id().value_or("<none>") << '\n';
  g_running = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.listen();
  g_running = nullptr;
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Blood-smear subtype classifier toolkit", "hema"};
  app.require_subcommand(1);

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "List the class-foldered corpus");
  scan_cmd->add_option("--data-root", scan.data_root, "Corpus root")->required()->envname("HEMA_DATA_ROOT");

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Write a stratified train/val/test manifest");
  split_cmd->add_option("--data-root", split.data_root, "Corpus root")->required()->envname("HEMA_DATA_ROOT");
  split_cmd->add_option("--manifest", split.manifest, "Output manifest path")->required()->envname("HEMA_MANIFEST");
  split_cmd->add_option("--ratios", split.ratios, "train,val,test fractions")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str()
      ->envname("HEMA_RATIOS");
  split_cmd->add_option("--seed", split.seed, "Shuffle seed")->capture_default_str()->envname("HEMA_SEED");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train one or all architectures into the registry");
  train_cmd->add_option("--arch", tr.arch, "convnet|mobilenet|resnet50|vgg19|all")
      ->required()
      ->check(CLI::IsMember({"convnet", "mobilenet", "resnet50", "vgg19", "all"}))
      ->envname("HEMA_ARCH");
  train_cmd->add_option("--manifest", tr.manifest, "Split manifest")->required()->envname("HEMA_MANIFEST");
  train_cmd->add_option("--epochs", tr.config.epochs)->capture_default_str()->envname("HEMA_EPOCHS");
  train_cmd->add_option("--batch-size", tr.config.batch_size)->capture_default_str()->envname("HEMA_BATCH_SIZE");
  train_cmd->add_option("--lr", tr.config.learning_rate)->capture_default_str()->envname("HEMA_LR");
  train_cmd->add_option("--seed", tr.config.seed)->capture_default_str()->envname("HEMA_SEED");
  train_cmd->add_option("--registry", tr.registry)->capture_default_str()->envname("HEMA_REGISTRY");
  train_cmd->add_option("--assets", tr.assets, "Directory of pretrained backbone files")
      ->capture_default_str()
      ->envname("HEMA_ASSETS");
  train_cmd->add_flag("--random-backbone", tr.random_backbone, "Randomly initialize frozen backbones (testing only)")
      ->envname("HEMA_RANDOM_BACKBONE");
  train_cmd->add_flag("--class-weights", tr.config.class_weights, "Inverse-frequency loss weights")
      ->envname("HEMA_CLASS_WEIGHTS");

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a registered model on one split");
  eval_cmd->add_option("--model-id", ev.model_id)->required()->envname("HEMA_MODEL_ID");
  eval_cmd->add_option("--split", ev.split)->capture_default_str()->envname("HEMA_SPLIT");
  eval_cmd->add_option("--manifest", ev.manifest)->required()->envname("HEMA_MANIFEST");
  eval_cmd->add_option("--registry", ev.registry)->capture_default_str()->envname("HEMA_REGISTRY");

  CompareArgs cmp;
  auto* compare_cmd = app.add_subcommand("compare", "Emit the model comparison table as CSV");
  compare_cmd->add_option("--registry", cmp.registry)->capture_default_str()->envname("HEMA_REGISTRY");

  ServeArgs sv;
  std::string registry_path = "registry";
  auto* serve_cmd = app.add_subcommand("serve", "Run the diagnosis HTTP service");
  serve_cmd->add_option("--registry", registry_path)->capture_default_str()->envname("HEMA_REGISTRY");
  serve_cmd->add_option("--port", sv.options.port)->capture_default_str()->envname("HEMA_PORT");
  serve_cmd->add_option("--host", sv.options.host)->capture_default_str()->envname("HEMA_HOST");
  serve_cmd->add_option("--model-id", sv.model_id, "Serve this model instead of the best one")
      ->envname("HEMA_MODEL_ID");
  serve_cmd->add_option("--static-dir", sv.static_dir, "Files served at /")->envname("HEMA_STATIC_DIR");
  serve_cmd->add_option("--max-upload-bytes", sv.options.max_upload_bytes)
      ->capture_default_str()
      ->envname("HEMA_MAX_UPLOAD_BYTES");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: usage: " << one_line(e.what()) << '\n';
    return kUsage;
  }

  try {
    if (*scan_cmd) return do_scan(scan, out);
    if (*split_cmd) return do_split(split, out);
    if (*train_cmd) return do_train(tr, out, err);
    if (*eval_cmd) return do_evaluate(ev, out);
    if (*compare_cmd) return do_compare(cmp, out);
    if (*serve_cmd) {
      sv.options.registry = registry_path;
      return do_serve(std::move(sv), err);
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
    return kRuntimeError;
  }
  return kUsage;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace hema::cli
