#include "hqml/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

#include "hqml/baselines.hpp"
#include "hqml/checkpoint.hpp"
#include "hqml/error.hpp"
#include "hqml/nn.hpp"
#include "hqml/qml.hpp"
#include "hqml/smiles.hpp"

#ifndef HQML_BUNDLED_DATA_DIR
#define HQML_BUNDLED_DATA_DIR "data"
#endif

namespace hqml::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Task task) noexcept {
  switch (task) {
    case Task::RetroSingle: return "retro_single";
    case Task::RetroChain: return "retro_chain";
    case Task::TrojanQnn: return "trojan_qnn";
    case Task::TrojanClassicalNn: return "trojan_classical_nn";
    case Task::TrojanBaselines: return "trojan_baselines";
  }
  return "?";
}

Task task_from_string(std::string_view name) {
  for (Task t : {Task::RetroSingle, Task::RetroChain, Task::TrojanQnn, Task::TrojanClassicalNn,
                 Task::TrojanBaselines}) {
    if (to_string(t) == name) return t;
  }
  fail(ErrorKind::Config, "unknown task '" + std::string(name) + "'");
}

bool is_trojan(Task task) noexcept {
  return task == Task::TrojanQnn || task == Task::TrojanClassicalNn || task == Task::TrojanBaselines;
}

fs::path bundled_data_dir() { return fs::path(HQML_BUNDLED_DATA_DIR); }

// ---- Configuration ---------------------------------------------------------------

namespace {

bool model_fits_task(Task task, const std::string& model) {
  switch (task) {
    case Task::RetroSingle:
    case Task::RetroChain: return model == "lstm" || model == "qlstm";
    case Task::TrojanQnn: return model == "qnn";
    case Task::TrojanClassicalNn: return model == "dense_nn";
    case Task::TrojanBaselines: return model == "perceptron" || model == "logreg" || model == "gnb";
  }
  return false;
}

std::string_view layout_name(features::Layout layout) {
  return layout == features::Layout::Xor ? "xor" : "two_cluster";
}

features::Layout layout_from_string(const std::string& s) {
  if (s == "two_cluster") return features::Layout::TwoCluster;
  if (s == "xor") return features::Layout::Xor;
  fail(ErrorKind::Config, "unknown synthetic layout '" + s + "'");
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::Config, "config field '" + key + "' has the wrong type");
  }
}

// Applies `handlers[key]` for each key of `obj`; unknown keys are errors.
void apply_keys(const json& obj, const std::string& where,
                const std::map<std::string, std::function<void(const json&)>>& handlers) {
  if (!obj.is_object()) fail(ErrorKind::Config, "'" + where + "' must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) {
      fail(ErrorKind::Config, "unknown config field '" + (where.empty() ? key : where + "." + key) + "'");
    }
    it->second(value);
  }
}

}  // namespace

ExperimentConfig default_config(Task task, const std::string& model) {
  if (!model_fits_task(task, model)) {
    fail(ErrorKind::Config,
         "model '" + model + "' is not valid for task '" + std::string(to_string(task)) + "'");
  }
  ExperimentConfig c;
  c.task = task;
  c.model = model;
  switch (task) {
    case Task::RetroSingle:
    case Task::RetroChain:
      c.epochs = 50;
      c.lr = 0.01;
      c.batch_size = 1;
      c.optimizer = nn::OptimizerKind::Adam;
      c.qubits = 4;
      c.layers = 1;
      if (task == Task::RetroSingle) {
        c.eval_interval = 1;
        c.retro = {9, 1, 1.0};
      } else {
        c.eval_interval = 5;
        c.retro = {200, 0, 0.9};
      }
      break;
    case Task::TrojanQnn:
      c.epochs = 10;
      c.lr = 0.4;
      c.batch_size = 32;
      c.optimizer = nn::OptimizerKind::Adagrad;
      c.qubits = 2;
      c.layers = 2;
      break;
    case Task::TrojanClassicalNn:
    case Task::TrojanBaselines:
      c.epochs = 10;
      c.lr = 0.01;
      c.batch_size = 32;
      c.optimizer = nn::OptimizerKind::Adam;
      break;
  }
  return c;
}

void validate(const ExperimentConfig& c) {
  if (!model_fits_task(c.task, c.model)) {
    fail(ErrorKind::Config,
         "model '" + c.model + "' is not valid for task '" + std::string(to_string(c.task)) + "'");
  }
  auto positive = [](bool ok, const char* field) {
    if (!ok) fail(ErrorKind::Config, std::string(field) + " must be positive");
  };
  positive(c.epochs > 0, "epochs");
  positive(c.lr > 0.0 && std::isfinite(c.lr), "lr");
  positive(c.batch_size > 0, "batch_size");
  positive(c.eval_interval > 0, "eval_interval");
  positive(c.embed_dim > 0, "embed_dim");
  positive(c.hidden_dim > 0, "hidden_dim");
  positive(c.qubits > 0, "qubits");
  positive(c.layers > 0, "layers");
  if (c.qubits > 24) fail(ErrorKind::Config, "qubits must be at most 24");
  if (c.task == Task::RetroSingle || c.task == Task::RetroChain) {
    positive(c.retro.subset_size > 0, "retro.subset_size");
    if (!(c.retro.train_ratio > 0.0 && c.retro.train_ratio <= 1.0)) {
      fail(ErrorKind::Config, "retro.train_ratio must lie in (0, 1]");
    }
    if (c.task == Task::RetroSingle && (c.retro.reaction_type < 1 || c.retro.reaction_type > 10)) {
      fail(ErrorKind::Config, "retro.reaction_type must lie in 1..10");
    }
  }
  if (is_trojan(c.task)) {
    const auto& t = c.trojan;
    if (t.reduction != "tsne" && t.reduction != "none") {
      fail(ErrorKind::Config, "trojan.reduction must be 'tsne' or 'none'");
    }
    positive(t.perplexity > 0.0, "trojan.perplexity");
    if (t.reduction == "tsne" && t.tsne_iters < 250) {
      fail(ErrorKind::Config, "trojan.tsne_iters must be at least 250 (the exaggeration phase)");
    }
    positive(t.synth.dims > 0, "trojan.synth.dims");
    positive(t.synth.categories > 0, "trojan.synth.categories");
    positive(t.synth.ti_total > 0, "trojan.synth.ti_total");
    positive(t.synth.ratio > 0.0, "trojan.synth.ratio");
    positive(t.synth.separation > 0.0, "trojan.synth.separation");
  }
}

json to_json(const ExperimentConfig& c) {
  const auto& t = c.trojan;
  return {
      {"schema_version", kConfigSchemaVersion},
      {"task", to_string(c.task)},
      {"model", c.model},
      {"seed", c.seed},
      {"epochs", c.epochs},
      {"lr", c.lr},
      {"batch_size", c.batch_size},
      {"optimizer", nn::to_string(c.optimizer)},
      {"eval_interval", c.eval_interval},
      {"embed_dim", c.embed_dim},
      {"hidden_dim", c.hidden_dim},
      {"qubits", c.qubits},
      {"layers", c.layers},
      {"data", c.data},
      {"record_wall_time", c.record_wall_time},
      {"retro",
       {{"subset_size", c.retro.subset_size},
        {"reaction_type", c.retro.reaction_type},
        {"train_ratio", c.retro.train_ratio}}},
      {"trojan",
       {{"reduction", t.reduction},
        {"perplexity", t.perplexity},
        {"tsne_iters", t.tsne_iters},
        {"split", {t.split.train, t.split.val, t.split.test}},
        {"synth",
         {{"layout", layout_name(t.synth.layout)},
          {"dims", t.synth.dims},
          {"categories", t.synth.categories},
          {"ti_total", t.synth.ti_total},
          {"ratio", t.synth.ratio},
          {"separation", t.synth.separation},
          {"category_spread", t.synth.category_spread}}}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
  if (!j.contains("schema_version") || get_as<int>(j.at("schema_version"), "schema_version") !=
                                           kConfigSchemaVersion) {
    fail(ErrorKind::Config, "config needs \"schema_version\": 1");
  }
  if (!j.contains("task")) fail(ErrorKind::Config, "config lacks 'task'");
  const Task task = task_from_string(get_as<std::string>(j.at("task"), "task"));
  std::string model;
  if (j.contains("model")) {
    model = get_as<std::string>(j.at("model"), "model");
  } else {
    switch (task) {
      case Task::RetroSingle:
      case Task::RetroChain: model = "lstm"; break;
      case Task::TrojanQnn: model = "qnn"; break;
      case Task::TrojanClassicalNn: model = "dense_nn"; break;
      case Task::TrojanBaselines: model = "logreg"; break;
    }
  }
  ExperimentConfig c = default_config(task, model);

  auto as_int = [](const json& v, const std::string& key) { return get_as<long long>(v, key); };
  auto as_count = [&](const json& v, const std::string& key) {
    const auto n = as_int(v, key);
    if (n < 0) fail(ErrorKind::Config, key + " must be positive");
    return static_cast<std::size_t>(n);
  };
  auto& t = c.trojan;
  apply_keys(j, "",
             {
                 {"schema_version", [](const json&) {}},
                 {"task", [](const json&) {}},
                 {"model", [](const json&) {}},
                 {"seed", [&](const json& v) { c.seed = get_as<std::uint64_t>(v, "seed"); }},
                 {"epochs", [&](const json& v) { c.epochs = static_cast<int>(as_int(v, "epochs")); }},
                 {"lr", [&](const json& v) { c.lr = get_as<double>(v, "lr"); }},
                 {"batch_size", [&](const json& v) { c.batch_size = as_count(v, "batch_size"); }},
                 {"optimizer",
                  [&](const json& v) {
                    try {
                      c.optimizer = nn::optimizer_from_string(get_as<std::string>(v, "optimizer"));
                    } catch (const Error& e) {
                      fail(ErrorKind::Config, e.what());
                    }
                  }},
                 {"eval_interval",
                  [&](const json& v) { c.eval_interval = static_cast<int>(as_int(v, "eval_interval")); }},
                 {"embed_dim", [&](const json& v) { c.embed_dim = as_count(v, "embed_dim"); }},
                 {"hidden_dim", [&](const json& v) { c.hidden_dim = as_count(v, "hidden_dim"); }},
                 {"qubits", [&](const json& v) { c.qubits = static_cast<int>(as_int(v, "qubits")); }},
                 {"layers", [&](const json& v) { c.layers = static_cast<int>(as_int(v, "layers")); }},
                 {"data", [&](const json& v) { c.data = get_as<std::string>(v, "data"); }},
                 {"record_wall_time",
                  [&](const json& v) { c.record_wall_time = get_as<bool>(v, "record_wall_time"); }},
                 {"retro",
                  [&](const json& r) {
                    apply_keys(r, "retro",
                               {
                                   {"subset_size",
                                    [&](const json& v) { c.retro.subset_size = as_count(v, "retro.subset_size"); }},
                                   {"reaction_type",
                                    [&](const json& v) {
                                      c.retro.reaction_type = static_cast<int>(as_int(v, "retro.reaction_type"));
                                    }},
                                   {"train_ratio",
                                    [&](const json& v) { c.retro.train_ratio = get_as<double>(v, "retro.train_ratio"); }},
                               });
                  }},
                 {"trojan",
                  [&](const json& tj) {
                    apply_keys(
                        tj, "trojan",
                        {
                            {"reduction",
                             [&](const json& v) { t.reduction = get_as<std::string>(v, "trojan.reduction"); }},
                            {"perplexity",
                             [&](const json& v) { t.perplexity = get_as<double>(v, "trojan.perplexity"); }},
                            {"tsne_iters",
                             [&](const json& v) { t.tsne_iters = static_cast<int>(as_int(v, "trojan.tsne_iters")); }},
                            {"split",
                             [&](const json& v) {
                               const auto r = get_as<std::vector<double>>(v, "trojan.split");
                               if (r.size() != 3) fail(ErrorKind::Config, "trojan.split needs three ratios");
                               t.split = {r[0], r[1], r[2]};
                             }},
                            {"synth",
                             [&](const json& sj) {
                               auto& s = t.synth;
                               apply_keys(
                                   sj, "trojan.synth",
                                   {
                                       {"layout",
                                        [&](const json& v) {
                                          s.layout = layout_from_string(get_as<std::string>(v, "trojan.synth.layout"));
                                        }},
                                       {"dims", [&](const json& v) { s.dims = as_count(v, "trojan.synth.dims"); }},
                                       {"categories",
                                        [&](const json& v) { s.categories = as_count(v, "trojan.synth.categories"); }},
                                       {"ti_total",
                                        [&](const json& v) { s.ti_total = as_count(v, "trojan.synth.ti_total"); }},
                                       {"ratio", [&](const json& v) { s.ratio = get_as<double>(v, "trojan.synth.ratio"); }},
                                       {"separation",
                                        [&](const json& v) { s.separation = get_as<double>(v, "trojan.synth.separation"); }},
                                       {"category_spread",
                                        [&](const json& v) {
                                          s.category_spread = get_as<double>(v, "trojan.synth.category_spread");
                                        }},
                                   });
                             }},
                        });
                  }},
             });
  validate(c);
  return c;
}

ExperimentConfig read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---- Data assembly -------------------------------------------------------------

RetroData prepare_retro_data(const ExperimentConfig& config) {
  const bool single = config.task == Task::RetroSingle;
  if (!single && config.task != Task::RetroChain) fail(ErrorKind::Config, "not a retro task");
  const fs::path path = config.data.empty()
                            ? bundled_data_dir() / (single ? "retro_single.tsv" : "retro_chain.tsv")
                            : fs::path(config.data);
  const auto records = smiles::read_corpus(path.string());
  const auto selection = single ? smiles::filter_single_reaction(records, config.retro.subset_size,
                                                                 config.retro.reaction_type)
                                : smiles::select_chain_subset(records, config.retro.subset_size);
  if (selection.records.empty()) fail(ErrorKind::DegenerateData, "no records match the task filter");
  const auto encoded = smiles::build_vocab_and_encode(selection.records);

  RetroData out;
  if (selection.warning) out.warnings.push_back(*selection.warning);
  out.vocab_size = encoded.tokens.size();
  out.n_classes = encoded.reactants.size();
  if (out.n_classes < 2) fail(ErrorKind::DegenerateData, "the selected records hold a single class");
  if (config.retro.train_ratio >= 1.0) {
    out.train = encoded.samples;
  } else {
    std::tie(out.train, out.validation) =
        smiles::train_validation_split(encoded.samples, config.retro.train_ratio, config.seed);
  }
  return out;
}

TrojanData prepare_trojan_data(const ExperimentConfig& config) {
  if (!is_trojan(config.task)) fail(ErrorKind::Config, "not a Trojan task");
  TrojanData out;
  features::FeatureMatrix raw;
  if (config.data.empty()) {
    auto synth = config.trojan.synth;
    synth.seed = config.seed;
    raw = features::generate_trojan_synth(synth);
  } else {
    raw = features::read_feature_csv(config.data);
  }
  out.raw_rows = raw.rows();
  auto balanced = features::balance_by_replication(raw, &out.warnings);
  out.balanced_rows = balanced.rows();
  if (config.trojan.reduction == "tsne") {
    features::TSNEConfig tc;
    tc.perplexity = config.trojan.perplexity;
    tc.n_iter = config.trojan.tsne_iters;
    tc.seed = config.seed;
    const auto reduced = features::tsne_reduce(balanced, tc);
    balanced = features::with_embedding(balanced, reduced.embedding);
  }
  out.split = features::stratified_split(features::max_normalize(balanced), config.trojan.split,
                                         config.seed);
  return out;
}

// ---- Runs ----------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v && std::isfinite(*v) ? fmt(*v) : ""; }

json opt_json(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

std::unique_ptr<Model> make_model(const ExperimentConfig& c, std::size_t vocab, std::size_t n_classes,
                                  std::size_t n_features) {
  if (c.model == "lstm" || c.model == "qlstm") {
    nn::SequenceDims dims{vocab, c.embed_dim, c.hidden_dim, n_classes};
    if (c.model == "lstm") return std::make_unique<nn::LSTMClassifier>(dims, c.seed);
    return std::make_unique<qml::QLSTMClassifier>(dims, c.qubits, c.layers, c.seed);
  }
  if (c.model == "qnn") {
    if (n_features != static_cast<std::size_t>(c.qubits)) {
      fail(ErrorKind::Shape, "QNN with " + std::to_string(c.qubits) + " qubits needs " +
                                 std::to_string(c.qubits) + " features, data has " +
                                 std::to_string(n_features));
    }
    return std::make_unique<qml::QNNModel>(qml::QNNOptions{c.qubits, c.layers, true}, c.seed);
  }
  if (c.model == "dense_nn") {
    return std::make_unique<nn::DenseNN>(std::vector<std::size_t>{n_features, 64, 256, 64, 2}, c.seed);
  }
  fail(ErrorKind::Config, "model '" + c.model + "' is not trainable by gradient descent");
}

TrainConfig train_config(const ExperimentConfig& c) {
  TrainConfig tc;
  tc.epochs = c.epochs;
  tc.lr = c.lr;
  tc.batch_size = c.batch_size;
  tc.optimizer = c.optimizer;
  tc.eval_interval = c.eval_interval;
  tc.seed = c.seed;
  tc.record_wall_time = c.record_wall_time;
  return tc;
}

std::string describe(const EpochMetrics& m) {
  char buf[160];
  int n = std::snprintf(buf, sizeof buf, "epoch %d  train_loss %.6g  train_acc %.4f", m.epoch,
                        m.train_loss, m.train_accuracy);
  if (m.val_accuracy && n > 0) {
    std::snprintf(buf + n, sizeof buf - static_cast<std::size_t>(n), "  val_loss %.6g  val_acc %.4f",
                  m.val_loss.value_or(0.0), *m.val_accuracy);
  }
  return buf;
}

json summarize(const ExperimentConfig& c, const TrainLog& log, const std::optional<double>& test_acc,
               const json& data_info, const std::vector<std::string>& warnings) {
  json final_metrics = nullptr;
  std::optional<double> best_train, best_val;
  for (const auto& m : log.epochs) {
    best_train = std::max(best_train.value_or(m.train_accuracy), m.train_accuracy);
    if (m.val_accuracy) best_val = std::max(best_val.value_or(*m.val_accuracy), *m.val_accuracy);
  }
  if (!log.epochs.empty()) {
    const auto& m = log.epochs.back();
    std::optional<double> last_val_acc, last_val_loss;
    for (const auto& e : log.epochs) {
      if (e.val_accuracy) {
        last_val_acc = e.val_accuracy;
        last_val_loss = e.val_loss;
      }
    }
    final_metrics = {{"epoch", m.epoch},
                     {"train_loss", opt_json(m.train_loss)},
                     {"train_acc", m.train_accuracy},
                     {"val_loss", opt_json(last_val_loss)},
                     {"val_acc", opt_json(last_val_acc)}};
  }
  return {{"schema_version", kConfigSchemaVersion},
          {"task", to_string(c.task)},
          {"model", c.model},
          {"seed", c.seed},
          {"status", log.diverged ? "diverged" : "completed"},
          {"failure", log.diverged ? json(log.failure) : json(nullptr)},
          {"epochs_completed", log.epochs.size()},
          {"final", final_metrics},
          {"best", {{"train_acc", opt_json(best_train)}, {"val_acc", opt_json(best_val)}}},
          {"test_acc", opt_json(test_acc)},
          {"data", data_info},
          {"warnings", warnings}};
}

struct Outcome {
  RunResult result;
  std::unique_ptr<Model> model;
};

Outcome execute(const ExperimentConfig& c, const Progress& progress, const TrojanData* prepared) {
  validate(c);
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  auto on_epoch = [&](const EpochMetrics& m) { say(describe(m)); };

  Outcome out;
  std::vector<std::string> warnings;
  json data_info;

  if (!is_trojan(c.task)) {
    auto data = prepare_retro_data(c);
    warnings = data.warnings;
    for (const auto& w : warnings) say("warning: " + w);
    data_info = {{"n_train", data.train.size()},
                 {"n_val", data.validation.size()},
                 {"vocab_size", data.vocab_size},
                 {"n_classes", data.n_classes}};
    say("training " + c.model + " on " + std::to_string(data.train.size()) + " samples, " +
        std::to_string(data.n_classes) + " classes");
    out.model = make_model(c, data.vocab_size, data.n_classes, 0);
    out.result.log = train_model(*out.model, data.train,
                                 data.validation.empty() ? nullptr : &data.validation,
                                 train_config(c), on_epoch);
  } else {
    std::optional<TrojanData> owned;
    if (!prepared) {
      say("preparing Trojan features");
      owned = prepare_trojan_data(c);
      prepared = &*owned;
    }
    warnings = prepared->warnings;
    const auto& split = prepared->split;
    data_info = {{"raw_rows", prepared->raw_rows},
                 {"balanced_rows", prepared->balanced_rows},
                 {"n_train", split.train.rows()},
                 {"n_val", split.val.rows()},
                 {"n_test", split.test.rows()},
                 {"n_features", split.train.cols}};
    const auto train = features::to_dataset(split.train);
    const auto val = features::to_dataset(split.val);
    const auto test = features::to_dataset(split.test);
    if (c.task == Task::TrojanBaselines) {
      const auto acc = nn::baseline_fit_score(nn::baseline_from_string(c.model), train,
                                              {&train, &val, &test}, c.seed);
      EpochMetrics m;
      m.epoch = 1;
      m.train_loss = std::numeric_limits<double>::quiet_NaN();
      m.train_accuracy = acc[0];
      if (!val.empty()) m.val_accuracy = acc[1];
      out.result.log.epochs.push_back(m);
      out.result.test_accuracy = acc[2];
      on_epoch(m);
    } else {
      out.model = make_model(c, 0, 2, split.train.cols);
      out.result.log = train_model(*out.model, train, val.empty() ? nullptr : &val, train_config(c),
                                   on_epoch);
      if (!out.result.log.diverged && !test.empty()) {
        out.result.test_accuracy = evaluate(*out.model, test).accuracy;
      }
    }
    if (out.result.test_accuracy) say("test_acc " + fmt(*out.result.test_accuracy));
  }
  if (out.result.log.diverged) say("training diverged: " + out.result.log.failure);
  out.result.summary = summarize(c, out.result.log, out.result.test_accuracy, data_info, warnings);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  f << text;
  if (!f) fail(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

fs::path make_run_dir(const fs::path& root, const ExperimentConfig& c) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const std::string base = std::string(stamp) + "-" + std::string(to_string(c.task)) + "-" + c.model;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorKind::Io, "cannot create '" + root.string() + "': " + ec.message());
  for (int k = 1;; ++k) {
    const fs::path dir = root / (k == 1 ? base : base + "-" + std::to_string(k));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) fail(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
  }
}

}  // namespace

std::string metrics_csv(const TrainLog& log) {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,wall_time_s\n";
  for (const auto& m : log.epochs) {
    out += std::to_string(m.epoch) + ',' + fmt(std::optional<double>(m.train_loss)) + ',' +
           fmt(m.train_accuracy) + ',' + fmt(m.val_loss) + ',' + fmt(m.val_accuracy) + ',' +
           fmt(m.wall_time_s) + '\n';
  }
  return out;
}

RunResult run_in_memory(const ExperimentConfig& config, const Progress& progress,
                        const TrojanData* prepared) {
  return execute(config, progress, prepared).result;
}

RunResult run_experiment(const ExperimentConfig& config, const fs::path& runs_root,
                         const Progress& progress, const TrojanData* prepared) {
  validate(config);
  const fs::path dir = make_run_dir(runs_root, config);
  const json cfg = to_json(config);
  write_text(dir / "config.json", cfg.dump(2) + "\n");
  if (progress) progress("run directory " + dir.string());

  Outcome out;
  try {
    out = execute(config, progress, prepared);
  } catch (const Error& e) {
    json failed = {{"schema_version", kConfigSchemaVersion},
                   {"task", to_string(config.task)},
                   {"model", config.model},
                   {"seed", config.seed},
                   {"status", "failed"},
                   {"failure", e.what()},
                   {"error_kind", to_string(e.kind())}};
    write_text(dir / "summary.json", failed.dump(2) + "\n");
    throw;
  }
  out.result.dir = dir;
  write_text(dir / "metrics.csv", metrics_csv(out.result.log));
  if (out.model) {
    write_text(dir / "checkpoint.json", checkpoint_json(*out.model, cfg).dump(2) + "\n");
  } else {
    // Closed-form baselines keep no tape parameters; the checkpoint records the config only.
    const json ckpt = {{"schema_version", kCheckpointSchemaVersion},
                       {"model", config.model},
                       {"topology", json::object()},
                       {"config", cfg},
                       {"parameters", json::object()}};
    write_text(dir / "checkpoint.json", ckpt.dump(2) + "\n");
  }
  write_text(dir / "summary.json", out.result.summary.dump(2) + "\n");
  return std::move(out.result);
}

std::vector<ComparisonRow> compare_models(const std::vector<ExperimentConfig>& configs,
                                          const Progress& progress) {
  if (configs.empty()) return {};
  auto data_key = [](const ExperimentConfig& c) {
    const json j = to_json(c);
    return json{{"data", j["data"]}, {"trojan", j["trojan"]}, {"seed", j["seed"]}};
  };
  const json reference = data_key(configs.front());
  for (const auto& c : configs) {
    validate(c);
    if (!is_trojan(c.task)) {
      fail(ErrorKind::Comparability, "compare_models only covers Trojan-detection tasks");
    }
    if (data_key(c) != reference) {
      fail(ErrorKind::Comparability,
           "model '" + c.model + "' uses a different dataset, preprocessing or seed");
    }
  }
  if (progress) progress("preparing shared Trojan features");
  const TrojanData data = prepare_trojan_data(configs.front());
  std::vector<ComparisonRow> rows;
  for (const auto& c : configs) {
    if (progress) progress("fitting " + c.model);
    const auto r = run_in_memory(c, {}, &data);
    if (r.log.diverged) fail(ErrorKind::Divergence, c.model + ": " + r.log.failure);
    rows.push_back({c.model, r.log.epochs.empty() ? 0.0 : r.log.epochs.back().train_accuracy,
                    r.test_accuracy.value_or(0.0)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    return a.test_accuracy < b.test_accuracy;
  });
  return rows;
}

fs::path emit_plot_data(const fs::path& run_dir) {
  const fs::path metrics = run_dir / "metrics.csv";
  std::ifstream in(metrics);
  if (!in) fail(ErrorKind::Io, "no metrics.csv in '" + run_dir.string() + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Io, "metrics.csv in '" + run_dir.string() + "' is empty");

  struct Row {
    std::string series;
    int epoch;
    std::string metric;
    std::string value;
  };
  // Column -> (series, metric).
  const std::vector<std::pair<std::string, std::string>> columns = {
      {"", ""}, {"train", "loss"}, {"train", "accuracy"}, {"val", "loss"}, {"val", "accuracy"}};
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.empty()) continue;
    const int epoch = std::stoi(cells[0]);
    for (std::size_t k = 1; k < columns.size() && k < cells.size(); ++k) {
      if (!cells[k].empty()) rows.push_back({columns[k].first, epoch, columns[k].second, cells[k]});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.series, a.epoch, a.metric) < std::tie(b.series, b.epoch, b.metric);
  });
  std::string out = "series,epoch,metric,value\n";
  for (const auto& r : rows) {
    out += r.series + ',' + std::to_string(r.epoch) + ',' + r.metric + ',' + r.value + '\n';
  }
  const fs::path path = run_dir / "plot_data.csv";
  write_text(path, out);
  return path;
}

}  // namespace hqml::harness
