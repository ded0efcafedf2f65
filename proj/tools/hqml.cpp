// hqml: command-line front end for experiments, data generation and self-checks.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hqml/error.hpp"
#include "hqml/features.hpp"
#include "hqml/harness.hpp"
#include "hqml/selfcheck.hpp"
#include "hqml/smiles.hpp"

namespace fs = std::filesystem;
using hqml::harness::ExperimentConfig;
using hqml::harness::Task;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Flags shared by the experiment subcommands. Unset optionals leave the
// config value alone.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string out = "runs";
  std::optional<int> epochs;
  std::optional<double> lr;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Global seed (overrides the config)");
  cmd->add_option("--data", f.data, "Corpus or feature CSV (overrides the config)");
  cmd->add_option("--out", f.out, "Directory receiving run directories")->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "Training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", f.lr, "Learning rate")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const CommonFlags& f, Task task, const std::string& model, bool model_given) {
  ExperimentConfig c;
  if (!f.config.empty()) {
    c = hqml::harness::read_config(f.config);
    if (c.task != task) {
      // The subcommand picks the task family; a config for a sibling task is fine only
      // when the model flag points it back to this subcommand.
      const bool trojan_pair = hqml::harness::is_trojan(c.task) && hqml::harness::is_trojan(task);
      if (!trojan_pair) {
        throw CLI::ValidationError("--config", "config task '" +
                                                   std::string(hqml::harness::to_string(c.task)) +
                                                   "' does not match this subcommand");
      }
      if (!model_given) task = c.task;
    }
    if (model_given && c.model != model) {
      auto base = hqml::harness::to_json(c);
      base["task"] = hqml::harness::to_string(task);
      base["model"] = model;
      // Hyperparameters come from the new model's defaults unless the file set them.
      auto fresh = hqml::harness::to_json(hqml::harness::default_config(task, model));
      for (const char* key : {"epochs", "lr", "batch_size", "optimizer", "eval_interval", "qubits", "layers"}) {
        base[key] = fresh[key];
      }
      c = hqml::harness::config_from_json(base);
    }
  } else {
    c = hqml::harness::default_config(task, model);
  }
  if (f.seed) c.seed = *f.seed;
  if (!f.data.empty()) c.data = f.data;
  if (f.epochs) c.epochs = *f.epochs;
  if (f.lr) c.lr = *f.lr;
  hqml::harness::validate(c);
  return c;
}

void print_line(const std::string& s) { std::cout << s << '\n' << std::flush; }

int report_run(const hqml::harness::RunResult& r) {
  std::cout << "run directory: " << r.dir.string() << '\n';
  std::cout << "summary: " << r.summary.dump() << '\n';
  if (r.log.diverged) {
    std::cerr << "error: training diverged: " << r.log.failure << '\n';
    return kExitRuntime;
  }
  return 0;
}

std::string format_acc(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-classical learning: statevector simulator, QLSTM/QNN training and data tools"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json_errors = false;
  app.add_flag("--json", json_errors, "Print errors as JSON on stderr");

  // retro-single / retro-chain
  CommonFlags retro_single_flags, retro_chain_flags;
  std::string retro_single_model = "lstm", retro_chain_model = "lstm";
  auto* retro_single = app.add_subcommand("retro-single", "Single-reaction-type reactant prediction");
  add_common(retro_single, retro_single_flags);
  auto* rs_model = retro_single->add_option("--model", retro_single_model, "lstm or qlstm")
                       ->check(CLI::IsMember({"lstm", "qlstm"}))
                       ->capture_default_str();
  auto* retro_chain = app.add_subcommand("retro-chain", "Acetic/acetone chain classification");
  add_common(retro_chain, retro_chain_flags);
  auto* rc_model = retro_chain->add_option("--model", retro_chain_model, "lstm or qlstm")
                       ->check(CLI::IsMember({"lstm", "qlstm"}))
                       ->capture_default_str();

  // trojan
  CommonFlags trojan_flags;
  std::string trojan_model = "qnn";
  auto* trojan = app.add_subcommand("trojan", "Hardware-Trojan detection with the QNN or the dense network");
  add_common(trojan, trojan_flags);
  auto* tr_model = trojan->add_option("--model", trojan_model, "qnn or dense_nn")
                       ->check(CLI::IsMember({"qnn", "dense_nn"}))
                       ->capture_default_str();

  // baselines
  CommonFlags baseline_flags;
  std::vector<std::string> baseline_models = {"perceptron", "logreg", "gnb", "qnn", "dense_nn"};
  std::string layout;
  auto* baselines = app.add_subcommand("baselines", "Compare classifiers on one shared Trojan dataset");
  add_common(baselines, baseline_flags);
  baselines->add_option("--models", baseline_models, "Models to compare")
      ->check(CLI::IsMember({"perceptron", "logreg", "gnb", "qnn", "dense_nn"}))
      ->delimiter(',');
  baselines->add_option("--layout", layout, "Synthetic layout when no data is given")
      ->check(CLI::IsMember({"two_cluster", "xor"}));

  // tsne
  std::string tsne_data, tsne_out = "tsne_out";
  std::uint64_t tsne_seed = 0;
  double perplexity = 30.0;
  int tsne_iters = 1000;
  auto* tsne = app.add_subcommand("tsne", "Reduce a feature CSV to two dimensions");
  tsne->add_option("--data", tsne_data, "Feature CSV (default: synthetic corpus)")->check(CLI::ExistingFile);
  tsne->add_option("--out", tsne_out, "Output directory")->capture_default_str();
  tsne->add_option("--seed", tsne_seed, "Seed")->capture_default_str();
  tsne->add_option("--perplexity", perplexity, "Perplexity")->check(CLI::PositiveNumber)->capture_default_str();
  tsne->add_option("--iters", tsne_iters, "Iterations")->check(CLI::Range(250, 100000))->capture_default_str();

  // gen-data
  std::string gen_kind, gen_out;
  std::uint64_t gen_seed = 0;
  hqml::smiles::ToyCorpusParams toy;
  hqml::features::SynthParams synth;
  std::string synth_layout = "two_cluster";
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic corpus");
  gen->add_option("kind", gen_kind, "smiles-toy or trojan-synth")
      ->required()
      ->check(CLI::IsMember({"smiles-toy", "trojan-synth"}));
  gen->add_option("--out", gen_out, "Output file")->required();
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen->add_option("--type1", toy.type1, "smiles-toy: reaction-type-1 records")->capture_default_str();
  gen->add_option("--other", toy.other_per_type, "smiles-toy: records per other type")->capture_default_str();
  gen->add_option("--acetic", toy.acetic, "smiles-toy: acetic-chain records")->capture_default_str();
  gen->add_option("--acetone", toy.acetone, "smiles-toy: acetone-chain records")->capture_default_str();
  gen->add_option("--layout", synth_layout, "trojan-synth: two_cluster or xor")
      ->check(CLI::IsMember({"two_cluster", "xor"}))
      ->capture_default_str();
  gen->add_option("--dims", synth.dims, "trojan-synth: feature columns")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--categories", synth.categories, "trojan-synth: benchmark categories")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--ti", synth.ti_total, "trojan-synth: Trojan-infected rows")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--ratio", synth.ratio, "trojan-synth: TI rows per TF row")->check(CLI::Range(1.0, 1e6))->capture_default_str();
  gen->add_option("--separation", synth.separation, "trojan-synth: class separation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // simcheck
  std::uint64_t check_seed = 0;
  std::size_t check_circuits = 1000, check_vqcs = 100, check_grad = 100;
  auto* simcheck = app.add_subcommand("simcheck", "Run the simulator and autodiff oracle suites");
  simcheck->add_option("--seed", check_seed, "Seed")->capture_default_str();
  simcheck->add_option("--circuits", check_circuits, "Random circuits for the dense oracle")->capture_default_str();
  simcheck->add_option("--vqcs", check_vqcs, "Random VQCs for the shift rule")->capture_default_str();
  simcheck->add_option("--grad-seeds", check_grad, "Seeds per autodiff layer check")->capture_default_str();

  // plot-data
  std::string plot_run;
  auto* plot = app.add_subcommand("plot-data", "Reshape a run's metrics.csv into long format");
  plot->add_option("--run", plot_run, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*retro_single || *retro_chain) {
      const bool single = retro_single->parsed();
      const auto& flags = single ? retro_single_flags : retro_chain_flags;
      const auto& model = single ? retro_single_model : retro_chain_model;
      const auto cfg = resolve(flags, single ? Task::RetroSingle : Task::RetroChain, model,
                               (single ? rs_model : rc_model)->count() > 0);
      return report_run(hqml::harness::run_experiment(cfg, flags.out, print_line));
    }
    if (*trojan) {
      const Task task = trojan_model == "qnn" ? Task::TrojanQnn : Task::TrojanClassicalNn;
      const auto cfg = resolve(trojan_flags, task, trojan_model, tr_model->count() > 0);
      return report_run(hqml::harness::run_experiment(cfg, trojan_flags.out, print_line));
    }
    if (*baselines) {
      std::vector<ExperimentConfig> configs;
      for (const auto& m : baseline_models) {
        const Task task = m == "qnn" ? Task::TrojanQnn
                          : m == "dense_nn" ? Task::TrojanClassicalNn
                                            : Task::TrojanBaselines;
        auto c = resolve(baseline_flags, task, m, true);
        if (!layout.empty()) {
          c.trojan.synth.layout = layout == "xor" ? hqml::features::Layout::Xor
                                                  : hqml::features::Layout::TwoCluster;
        }
        configs.push_back(c);
      }
      const auto rows = hqml::harness::compare_models(configs, print_line);
      fs::create_directories(baseline_flags.out);
      const fs::path table = fs::path(baseline_flags.out) / "comparison.csv";
      std::ofstream csv(table);
      if (!csv) hqml::fail(hqml::ErrorKind::Io, "cannot write '" + table.string() + "'");
      csv << "model,train_acc,test_acc\n";
      std::cout << "model        train_acc  test_acc\n";
      for (const auto& r : rows) {
        csv << r.model << ',' << format_acc(r.train_accuracy) << ',' << format_acc(r.test_accuracy) << '\n';
        std::printf("%-12s %9s %9s\n", r.model.c_str(), format_acc(r.train_accuracy).c_str(),
                    format_acc(r.test_accuracy).c_str());
      }
      std::cout << "table written to " << table.string() << '\n';
      return 0;
    }
    if (*tsne) {
      hqml::features::FeatureMatrix x;
      if (tsne_data.empty()) {
        hqml::features::SynthParams p;
        p.seed = tsne_seed;
        x = hqml::features::generate_trojan_synth(p);
      } else {
        x = hqml::features::read_feature_csv(tsne_data);
      }
      hqml::features::TSNEConfig tc;
      tc.perplexity = perplexity;
      tc.n_iter = tsne_iters;
      tc.seed = tsne_seed;
      std::cout << "t-SNE on " << x.rows() << " x " << x.cols << '\n' << std::flush;
      const auto r = hqml::features::tsne_reduce(x, tc);
      fs::create_directories(tsne_out);
      const fs::path path = fs::path(tsne_out) / "embedding.csv";
      hqml::features::write_embedding_csv(path.string(), hqml::features::with_embedding(x, r.embedding));
      std::cout << "KL initial " << r.kl_initial << ", after exaggeration " << r.kl_after_exaggeration
                << ", final " << r.kl_final << '\n'
                << "embedding written to " << path.string() << '\n';
      return 0;
    }
    if (*gen) {
      if (const auto parent = fs::path(gen_out).parent_path(); !parent.empty()) fs::create_directories(parent);
      if (gen_kind == "smiles-toy") {
        toy.seed = gen_seed;
        const auto records = hqml::smiles::generate_smiles_toy(toy);
        hqml::smiles::write_corpus_tsv(gen_out, records);
        std::cout << "wrote " << records.size() << " records to " << gen_out << '\n';
      } else {
        synth.seed = gen_seed;
        synth.layout = synth_layout == "xor" ? hqml::features::Layout::Xor : hqml::features::Layout::TwoCluster;
        const auto x = hqml::features::generate_trojan_synth(synth);
        hqml::features::write_feature_csv(gen_out, x);
        std::cout << "wrote " << x.rows() << " rows x " << x.cols << " features to " << gen_out << '\n';
      }
      return 0;
    }
    if (*simcheck) {
      const auto results = hqml::selfcheck::run_all(check_seed, check_circuits, check_vqcs, check_grad);
      bool all = true;
      std::printf("%-42s %-6s %8s %11s %9s\n", "check", "result", "cases", "worst", "seconds");
      for (const auto& r : results) {
        all = all && r.pass;
        std::printf("%-42s %-6s %8zu %11.3e %9.2f\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.cases,
                    r.worst, r.seconds);
      }
      std::fflush(stdout);
      return all ? 0 : kExitRuntime;
    }
    if (*plot) {
      const auto path = hqml::harness::emit_plot_data(plot_run);
      std::cout << "plot data written to " << path.string() << '\n';
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const hqml::Error& e) {
    if (json_errors) {
      std::cerr << nlohmann::json{{"error", hqml::to_string(e.kind())}, {"message", e.what()}}.dump() << '\n';
    } else {
      std::cerr << "error (" << hqml::to_string(e.kind()) << "): " << e.what() << '\n';
    }
    return kExitRuntime;
  } catch (const std::exception& e) {
    if (json_errors) {
      std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    } else {
      std::cerr << "error: " << e.what() << '\n';
    }
    return kExitRuntime;
  }
  return kExitUsage;
}
