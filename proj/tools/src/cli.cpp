/* Copyright 2026 The dallv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "dallv/cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "dallv/adapter.hpp"
#include "dallv/clipspace.hpp"
#include "dallv/dataio.hpp"
#include "dallv/error.hpp"
#include "dallv/pipeline.hpp"
#include "dallv/pseudolabel.hpp"
#include "dallv/synth.hpp"
#include "json.hpp"

namespace dallv::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 8> kSubcommands = {
    "synth",    "zeroshot", "train-source",    "adapt-target",
    "distill",  "eval",     "sweep-templates", "export-predictions"};
constexpr std::array<std::size_t, 6> kSweepCounts = {1, 2, 4, 8, 12, 16};

struct Options {
  std::string out_dir;
  std::string config;
  std::string manifest;
  std::string adapter;
  std::string source_adapter;
  std::string target_adapter;
  std::string labels;
  std::string space = "auto";           // eval, export-predictions
  std::string fixed_space = "teacher";  // zeroshot, sweep-templates
  std::string split = "target";
  std::size_t templates = 0;
  TrainConfig train;
  SynthConfig synth;
};

std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string percent(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * accuracy);
  return buf;
}

template <typename T>
CLI::Option* add(CLI::App* app, const std::string& name, T& value, const std::string& help) {
  CLI::Option* opt = app->add_option(name, value, help);
  if constexpr (std::is_same_v<T, bool>) {
    opt->default_str(value ? "true" : "false");
  } else {
    opt->capture_default_str();
  }
  return opt;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "Flat key = value file; command-line flags win");
  app->add_option("-o,--out", o.out_dir, "Output directory")->required();
}

void add_manifest(CLI::App* app, Options& o) {
  app->add_option("-m,--manifest", o.manifest, "manifest.json or the directory holding it")
      ->required();
}

void add_train_flags(CLI::App* app, Options& o) {
  TrainConfig& t = o.train;
  add(app, "--seed", t.seed, "Seed for adapter init, shuffling and template sampling");
  add(app, "--epochs", t.epochs, "Training epochs");
  add(app, "--lr", t.lr, "AdamW learning rate");
  add(app, "--weight-decay", t.weight_decay, "AdamW decoupled weight decay");
  add(app, "--batch-size", t.batch_size, "Videos per optimizer step");
  add(app, "--residual-ratio", t.residual_ratio, "Adapter residual ratio r in [0, 1]");
  add(app, "--tau-distill", t.tau_distill, "Distillation temperature");
  add(app, "--alpha", t.alpha, "Weight of CE on majority-vote labels in distillation");
  add(app, "--percentile", t.percentile, "Class-wise pseudo-label confidence percentile");
  add(app, "--tau-sim", t.tau_sim, "Similarity temperature when the bank carries none");
  add(app, "--tau-sq-compensation", t.tau_sq_compensation,
      "Scale the distillation KL gradient by tau^2");
  add(app, "--templates", o.templates, "Use the first N prompt templates (0 = all)");
}

void add_space_flags(CLI::App* app, Options& o, bool with_auto) {
  if (with_auto) {
    add(app, "--space", o.space, "Embedding space: teacher, student or auto (from the adapter)")
        ->check(CLI::IsMember({"auto", "teacher", "student"}));
  } else {
    add(app, "--space", o.fixed_space, "Embedding space: teacher or student")
        ->check(CLI::IsMember({"teacher", "student"}));
  }
  add(app, "--split", o.split, "Domain: target or source")
      ->check(CLI::IsMember({"target", "source"}));
  add(app, "--labels", o.labels, "Label sidecar overriding the manifest's target_labels");
}

void add_synth_flags(CLI::App* app, Options& o) {
  SynthConfig& s = o.synth;
  add(app, "--seed", s.seed, "Generator seed");
  add(app, "--classes", s.classes, "Number of classes");
  add(app, "--teacher-dim", s.teacher_dim, "Teacher embedding width");
  add(app, "--student-dim", s.student_dim, "Student embedding width");
  add(app, "--videos-per-class", s.videos_per_class, "Videos per class and domain");
  add(app, "--frames", s.frames_per_video, "Frames per video");
  add(app, "--templates", s.templates, "Prompt templates per class");
  add(app, "--shift", s.shift, "Domain shift strength in [0, 1]");
  add(app, "--sigma-class", s.sigma_class, "Per-coordinate frame noise");
  add(app, "--sigma-text", s.sigma_text, "Per-coordinate text-row noise");
  add(app, "--sigma-cross", s.sigma_cross, "Per-coordinate student-space noise");
  add(app, "--bias", s.bias_magnitude, "Norm of the target-domain bias");
  add(app, "--logit-temperature", s.logit_temperature, "Similarity temperature stored in the banks");
}

// ---------------------------------------------------------------------------
// Inputs

struct Bench {
  fs::path manifest_file;
  BenchmarkManifest manifest;
};

Bench open_bench(const std::string& arg) {
  Bench b;
  b.manifest_file = arg;
  if (fs::is_directory(b.manifest_file)) b.manifest_file /= "manifest.json";
  if (!fs::exists(b.manifest_file)) {
    throw Error(ErrorCode::kIo, "manifest not found: " + b.manifest_file.string());
  }
  b.manifest = load_manifest(b.manifest_file);
  return b;
}

Space parse_space(const std::string& s) {
  return s == "student" ? Space::kStudent : Space::kTeacher;
}

// First n templates of the bank; n = 0 keeps them all.
TextBank first_n_templates(const TextBank& bank, std::size_t n) {
  if (n == 0 || n == bank.template_count()) return bank;
  if (n > bank.template_count()) {
    throw Error(ErrorCode::kInvalidConfig,
                "--templates " + std::to_string(n) + " exceeds the " +
                    std::to_string(bank.template_count()) + " templates in the bank");
  }
  TextBank out = bank;
  out.templates.resize(n);
  out.embeddings.assign(bank.classes() * n * bank.dim, 0.0);
  for (std::size_t c = 0; c < bank.classes(); ++c) {
    for (std::size_t t = 0; t < n; ++t) {
      const auto src = bank.row(c, t);
      std::copy(src.begin(), src.end(), out.row(c, t).begin());
    }
  }
  return out;
}

TextBank load_bank(const Bench& b, Space s, std::size_t templates) {
  const TextBank bank =
      load_text_bank(b.manifest.resolve(b.manifest.files(s).text_bank), b.manifest.class_names.size());
  return first_n_templates(bank, templates);
}

fs::path split_path(const Bench& b, Space s, const std::string& split) {
  const SpaceFiles& f = b.manifest.files(s);
  return b.manifest.resolve(split == "source" ? f.source : f.target);
}

EmbeddingDataset load_split(const Bench& b, Space s, const std::string& split) {
  return load_embeddings(split_path(b, s, split), s);
}

std::optional<fs::path> sidecar_path(const Bench& b, const Options& o) {
  if (!o.labels.empty()) return fs::path(o.labels);
  if (b.manifest.target_labels) return b.manifest.resolve(*b.manifest.target_labels);
  return std::nullopt;
}

// Target videos carry no labels on disk; they come from the sidecar.
EmbeddingDataset labeled_split(const Bench& b, const Options& o, Space s) {
  EmbeddingDataset data = load_split(b, s, o.split);
  if (o.split == "source") return data;
  const std::optional<fs::path> sidecar = sidecar_path(b, o);
  if (!sidecar) {
    throw Error(ErrorCode::kMissingLabels,
                b.manifest_file.string() + " names no target label sidecar and --labels is unset");
  }
  return attach_labels(data, read_label_sidecar(*sidecar));
}

// ---------------------------------------------------------------------------
// Run record

class RunRecord {
 public:
  RunRecord(std::string command, fs::path dir) : dir_(std::move(dir)) {
    j_["command"] = std::move(command);
  }

  json& operator[](const char* key) { return j_[key]; }

  void input(const std::string& role, const fs::path& path) {
    j_["inputs"][role] = {{"path", path.string()}, {"sha256", file_sha256(path)}};
  }
  void output(const std::string& name) { outputs_.push_back(name); }

  fs::path path(const std::string& name) {
    output(name);
    return dir_ / name;
  }

  void write() {
    json& out = j_["outputs"];
    out = json::object();
    for (const std::string& name : outputs_) out[name] = file_sha256(dir_ / name);
    const fs::path file = dir_ / "run.json";
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    f << j_.dump(2) << "\n";
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  }

 private:
  fs::path dir_;
  json j_;
  std::vector<std::string> outputs_;
};

json train_json(const Options& o) {
  const TrainConfig& t = o.train;
  return {{"seed", t.seed},
          {"epochs", t.epochs},
          {"lr", t.lr},
          {"weight-decay", t.weight_decay},
          {"batch-size", t.batch_size},
          {"residual-ratio", t.residual_ratio},
          {"tau-distill", t.tau_distill},
          {"alpha", t.alpha},
          {"percentile", t.percentile},
          {"tau-sim", t.tau_sim},
          {"tau-sq-compensation", t.tau_sq_compensation},
          {"templates", o.templates}};
}

json synth_json(const SynthConfig& s) {
  return {{"seed", s.seed},
          {"classes", s.classes},
          {"teacher-dim", s.teacher_dim},
          {"student-dim", s.student_dim},
          {"videos-per-class", s.videos_per_class},
          {"frames", s.frames_per_video},
          {"templates", s.templates},
          {"shift", s.shift},
          {"sigma-class", s.sigma_class},
          {"sigma-text", s.sigma_text},
          {"sigma-cross", s.sigma_cross},
          {"bias", s.bias_magnitude},
          {"logit-temperature", s.logit_temperature}};
}

fs::path make_out_dir(const Options& o) {
  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

// RunRecord preloaded with the training config and the manifest checksum.
RunRecord stage_record(const char* command, const Options& o, const Bench& b) {
  RunRecord rec(command, make_out_dir(o));
  rec["seed"] = o.train.seed;
  rec["config"] = train_json(o);
  rec.input("manifest", b.manifest_file);
  return rec;
}

void write_rows(const fs::path& path, const std::string& header,
                const std::vector<std::string>& rows) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << header << "\n";
  for (const std::string& r : rows) f << r << "\n";
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_synth(const Options& o, std::ostream& out) {
  const SynthBenchmark bench = generate_benchmark(o.synth);
  const fs::path dir = make_out_dir(o);
  const BenchmarkManifest m = write_benchmark(bench, dir);
  // No absolute paths in the record: two runs into different directories
  // must produce identical trees.
  RunRecord rec("synth", dir);
  rec["seed"] = o.synth.seed;
  rec["config"] = synth_json(o.synth);
  for (const SpaceFiles* f : {&m.teacher, &m.student}) {
    for (const fs::path* p : {&f->text_bank, &f->source, &f->target}) rec.output(p->string());
  }
  rec.output(m.target_labels->string());
  rec.output("manifest.json");
  rec.write();
  out << "wrote " << bench.class_names.size() << "-class benchmark ("
      << bench.source_teacher.size() << " source, " << bench.target_teacher.size()
      << " target videos) to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_zeroshot(const Options& o, std::ostream& out) {
  o.train.validate();
  const Bench b = open_bench(o.manifest);
  RunRecord rec = stage_record("zeroshot", o, b);
  const Space space = parse_space(o.fixed_space);
  const TextBank bank = load_bank(b, space, o.templates);
  const ClassPrototypes protos = build_prototypes(bank, std::nullopt, resolve_tau_sim(o.train, bank));
  rec.input("embeddings", split_path(b, space, o.split));

  const bool has_labels = o.split == "source" || sidecar_path(b, o).has_value();
  const EmbeddingDataset data = has_labels ? labeled_split(b, o, space) : load_split(b, space, o.split);
  const std::vector<VideoPrediction> preds = zeroshot_classify(data, protos);
  write_predictions_csv(preds, rec.path("predictions.csv"));
  if (has_labels) {
    const Metrics m = evaluate_predictions(data, preds, bank.class_names);
    write_metrics_csv(m, rec.path("metrics.csv"));
    write_confusion_csv(m, rec.path("confusion.csv"));
    out << "zero-shot accuracy: " << percent(m.accuracy()) << " (" << m.correct << "/"
        << m.total << ")\n";
  } else {
    out << "zero-shot predictions for " << preds.size() << " videos (no labels)\n";
  }
  rec.write();
  return kExitOk;
}

int cmd_train_source(const Options& o, std::ostream& out) {
  o.train.validate();
  const Bench b = open_bench(o.manifest);
  RunRecord rec = stage_record("train-source", o, b);
  const TextBank bank = load_bank(b, Space::kTeacher, o.templates);
  const EmbeddingDataset source = load_split(b, Space::kTeacher, "source");
  rec.input("source", split_path(b, Space::kTeacher, "source"));

  const TrainResult r = train_source_adapter(source, bank, o.train);
  save_adapter(r.adapter, rec.path("source_adapter.adp"));
  write_loss_trace_csv(r.loss_trace, rec.path("source_loss.csv"));
  const ClassPrototypes protos = build_prototypes(bank, std::nullopt, resolve_tau_sim(o.train, bank));
  const Metrics m = evaluate(source, protos, &r.adapter, bank.class_names);
  write_metrics_csv(m, rec.path("source_metrics.csv"));
  rec.write();
  out << "source adapter: " << r.loss_trace.size() << " epochs";
  if (!r.loss_trace.empty()) out << ", final loss " << fmt_double(r.loss_trace.back());
  out << ", source accuracy " << percent(m.accuracy()) << "\n";
  return kExitOk;
}

int cmd_adapt_target(const Options& o, std::ostream& out) {
  o.train.validate();
  const Bench b = open_bench(o.manifest);
  RunRecord rec = stage_record("adapt-target", o, b);
  const TextBank bank = load_bank(b, Space::kTeacher, o.templates);
  const EmbeddingDataset target = load_split(b, Space::kTeacher, "target");
  rec.input("target", split_path(b, Space::kTeacher, "target"));

  const TargetResult r = adapt_target(target, bank, o.train);
  save_adapter(r.adapter, rec.path("target_adapter.adp"));
  write_loss_trace_csv(r.loss_trace, rec.path("target_loss.csv"));
  write_pseudo_labels_csv(r.pseudo_labels, rec.path("pseudo_labels.csv"));
  rec.write();
  out << "target adapter: kept " << r.pseudo_labels.kept_count() << " of "
      << r.pseudo_labels.source_count() << " pseudo-labels";
  if (!r.loss_trace.empty()) out << ", final loss " << fmt_double(r.loss_trace.back());
  out << "\n";
  return kExitOk;
}

int cmd_distill(const Options& o, std::ostream& out) {
  o.train.validate();
  const Bench b = open_bench(o.manifest);
  RunRecord rec = stage_record("distill", o, b);
  const TextBank teacher_bank = load_bank(b, Space::kTeacher, o.templates);
  const TextBank student_bank = load_bank(b, Space::kStudent, o.templates);
  TeacherBundle bundle;
  bundle.prototypes =
      build_prototypes(teacher_bank, std::nullopt, resolve_tau_sim(o.train, teacher_bank));
  bundle.source_adapter = load_adapter(o.source_adapter);
  bundle.target_adapter = load_adapter(o.target_adapter);
  rec.input("source-adapter", o.source_adapter);
  rec.input("target-adapter", o.target_adapter);
  const EmbeddingDataset target_teacher = load_split(b, Space::kTeacher, "target");
  const EmbeddingDataset target_student = load_split(b, Space::kStudent, "target");

  const DistillResult r =
      distill(bundle, target_teacher, target_student, student_bank, o.train);
  save_adapter(r.student, rec.path("student_adapter.adp"));
  write_loss_trace_csv(r.loss_trace, rec.path("distill_loss.csv"));
  rec.write();
  out << "student adapter: " << r.loss_trace.size() << " epochs";
  if (!r.loss_trace.empty()) out << ", final loss " << fmt_double(r.loss_trace.back());
  out << "\n";
  return kExitOk;
}

// Adapter from --adapter (if any) and the space it lives in.
std::optional<Adapter> resolve_adapter(const Options& o, const Bench& b, Space& space) {
  std::optional<Adapter> adapter;
  if (!o.adapter.empty()) adapter = load_adapter(o.adapter);
  if (o.space != "auto") {
    space = parse_space(o.space);
    return adapter;
  }
  space = Space::kTeacher;
  if (adapter) {
    // An adapter only fits one space unless both widths agree; then teacher.
    const TextBank teacher = load_bank(b, Space::kTeacher, 0);
    if (adapter->input_dim() != teacher.dim) space = Space::kStudent;
  }
  return adapter;
}

int cmd_eval(const Options& o, std::ostream& out) {
  o.train.validate();
  const Bench b = open_bench(o.manifest);
  RunRecord rec = stage_record("eval", o, b);
  Space space;
  const std::optional<Adapter> adapter = resolve_adapter(o, b, space);
  if (adapter) rec.input("adapter", o.adapter);
  const TextBank bank = load_bank(b, space, o.templates);
  const ClassPrototypes protos = build_prototypes(bank, std::nullopt, resolve_tau_sim(o.train, bank));
  const EmbeddingDataset data = labeled_split(b, o, space);
  rec.input("embeddings", split_path(b, space, o.split));
  if (o.split == "target") rec.input("labels", *sidecar_path(b, o));

  const Adapter* a = adapter ? &*adapter : nullptr;
  const std::vector<VideoPrediction> preds = classify(data, protos, a);
  const Metrics m = evaluate_predictions(data, preds, bank.class_names);
  write_metrics_csv(m, rec.path("metrics.csv"));
  write_confusion_csv(m, rec.path("confusion.csv"));
  write_predictions_csv(preds, rec.path("predictions.csv"));
  rec["space"] = std::string(space_name(space));
  rec.write();
  out << space_name(space) << " " << o.split << (a ? " adapted" : " zero-shot")
      << " accuracy: " << percent(m.accuracy()) << " (" << m.correct << "/" << m.total << ")\n";
  return kExitOk;
}

int cmd_sweep_templates(const Options& o, std::ostream& out) {
  o.train.validate();
  const Bench b = open_bench(o.manifest);
  RunRecord rec = stage_record("sweep-templates", o, b);
  const Space space = parse_space(o.fixed_space);
  const TextBank bank = load_bank(b, space, 0);
  const EmbeddingDataset data = labeled_split(b, o, space);
  rec.input("embeddings", split_path(b, space, o.split));

  const double tau = resolve_tau_sim(o.train, bank);
  std::vector<std::string> rows;
  for (std::size_t n : kSweepCounts) {
    if (n > bank.template_count()) break;
    const ClassPrototypes protos = build_prototypes(bank, first_templates(n), tau);
    const Metrics m = evaluate(data, protos, nullptr, bank.class_names);
    rows.push_back(std::to_string(n) + "," + fmt_double(m.accuracy()));
    out << "templates " << n << ": " << percent(m.accuracy()) << "\n";
  }
  write_rows(rec.path("template_sweep.csv"), "templates,accuracy", rows);
  rec.write();
  return kExitOk;
}

int cmd_export_predictions(const Options& o, std::ostream& out) {
  o.train.validate();
  const Bench b = open_bench(o.manifest);
  RunRecord rec = stage_record("export-predictions", o, b);
  Space space;
  const std::optional<Adapter> adapter = resolve_adapter(o, b, space);
  if (adapter) rec.input("adapter", o.adapter);
  const TextBank bank = load_bank(b, space, o.templates);
  const ClassPrototypes protos = build_prototypes(bank, std::nullopt, resolve_tau_sim(o.train, bank));
  const EmbeddingDataset data = load_split(b, space, o.split);
  rec.input("embeddings", split_path(b, space, o.split));

  const std::vector<VideoPrediction> preds = classify(data, protos, adapter ? &*adapter : nullptr);
  write_predictions_csv(preds, rec.path("predictions.csv"));
  rec.write();
  out << "wrote " << preds.size() << " predictions\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Config file

// Inserts `--key value` pairs from the --config file right after the
// subcommand name, so later command-line occurrences take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args,
                                       const CLI::App& sub) {
  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  if (!fs::is_regular_file(*path)) throw Error(ErrorCode::kIo, "cannot read config file " + *path);

  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(*path);
  } catch (const CLI::Error& e) {
    throw Error(ErrorCode::kConfigParse, *path + ": " + e.what());
  }
  std::vector<std::string> expanded{args.front()};
  for (const CLI::ConfigItem& item : items) {
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    if (!item.parents.empty() || key == "config" ||
        sub.get_option_no_throw("--" + key) == nullptr) {
      throw Error(ErrorCode::kConfigParse,
                  *path + ": unknown key '" + item.fullname() + "' for " + sub.get_name());
    }
    if (item.inputs.size() != 1) {
      throw Error(ErrorCode::kConfigParse, *path + ": key '" + key + "' needs exactly one value");
    }
    expanded.push_back("--" + key);
    expanded.push_back(item.inputs.front());
  }
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Source-free video domain adaptation on frozen image-text embeddings", "dallv"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  Options o;

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic domain-shift benchmark");
  add_common(synth, o);
  add_synth_flags(synth, o);

  CLI::App* zs = app.add_subcommand("zeroshot", "Zero-shot classification with raw prototypes");
  add_common(zs, o);
  add_manifest(zs, o);
  add_train_flags(zs, o);
  add_space_flags(zs, o, false);

  CLI::App* src = app.add_subcommand("train-source", "Train the source adapter");
  add_common(src, o);
  add_manifest(src, o);
  add_train_flags(src, o);

  CLI::App* tgt = app.add_subcommand("adapt-target", "Pseudo-label the target domain and train the target adapter");
  add_common(tgt, o);
  add_manifest(tgt, o);
  add_train_flags(tgt, o);

  CLI::App* dist = app.add_subcommand("distill", "Distill the teacher ensemble into a student adapter");
  add_common(dist, o);
  add_manifest(dist, o);
  add_train_flags(dist, o);
  dist->add_option("--source-adapter", o.source_adapter, "Source adapter checkpoint (ADP1)")->required();
  dist->add_option("--target-adapter", o.target_adapter, "Target adapter checkpoint (ADP1)")->required();

  CLI::App* ev = app.add_subcommand("eval", "Accuracy, per-class accuracy and confusion matrix");
  add_common(ev, o);
  add_manifest(ev, o);
  add_train_flags(ev, o);
  add_space_flags(ev, o, true);
  ev->add_option("--adapter", o.adapter, "Adapter checkpoint; zero-shot when omitted");

  CLI::App* sweep = app.add_subcommand("sweep-templates", "Zero-shot accuracy for 1, 2, 4, 8, 12 and 16 templates");
  add_common(sweep, o);
  add_manifest(sweep, o);
  add_train_flags(sweep, o);
  add_space_flags(sweep, o, false);

  CLI::App* exp = app.add_subcommand("export-predictions", "Per-video class distributions as CSV");
  add_common(exp, o);
  add_manifest(exp, o);
  add_train_flags(exp, o);
  add_space_flags(exp, o, true);
  exp->add_option("--adapter", o.adapter, "Adapter checkpoint; zero-shot when omitted");

  std::vector<std::string> argv = args;
  if (!argv.empty() && argv.front().rfind("-", 0) != 0) {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), argv.front()) == kSubcommands.end()) {
      throw Error(ErrorCode::kUnknownSubcommand, "'" + argv.front() + "'; run dallv --help");
    }
    argv = expand_config(argv, *app.get_subcommand(argv.front()));
  }
  std::reverse(argv.begin(), argv.end());  // CLI11 consumes from the back
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalid;
  }

  if (synth->parsed()) return cmd_synth(o, out);
  if (zs->parsed()) return cmd_zeroshot(o, out);
  if (src->parsed()) return cmd_train_source(o, out);
  if (tgt->parsed()) return cmd_adapt_target(o, out);
  if (dist->parsed()) return cmd_distill(o, out);
  if (ev->parsed()) return cmd_eval(o, out);
  if (sweep->parsed()) return cmd_sweep_templates(o, out);
  return cmd_export_predictions(o, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const Error& e) {
    err << "dallv: " << e.what() << "\n";
    return e.is_io() ? kExitIo : kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    err << "dallv: Io: " << e.what() << "\n";
    return kExitIo;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv + (argc > 0 ? 1 : 0), argv + argc), out, err);
}

}  // namespace dallv::cli
