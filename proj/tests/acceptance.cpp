// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "hqml/features.hpp"
#include "hqml/harness.hpp"
#include "hqml/qml.hpp"
#include "hqml/selfcheck.hpp"
#include "hqml/smiles.hpp"

using namespace hqml;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---- 1-3: oracle suites ----------------------------------------------------------

Verdict simulator_oracle() {
  const auto r = selfcheck::check_simulator_oracle(1000, 1);
  const bool fast = r.seconds < 30.0;
  return {r.pass && fast, fmt("%zu circuits, worst deviation %.3g (tol %.0e), %.2f s (limit 30 s)",
                              r.cases, r.worst, r.tolerance, r.seconds)};
}

Verdict shift_rule() {
  const auto r = selfcheck::check_parameter_shift(100, 2);
  const bool fast = r.seconds < 60.0;
  return {r.pass && fast, fmt("%zu VQCs, worst |shift - fd| %.3g (tol %.0e), %.2f s (limit 60 s)",
                              r.cases, r.worst, r.tolerance, r.seconds)};
}

Verdict autodiff() {
  const auto results = selfcheck::check_autodiff(100, 3);
  bool pass = !results.empty();
  std::string detail;
  for (const auto& r : results) {
    pass = pass && r.pass;
    detail += fmt("%s%s %.2g", detail.empty() ? "" : ", ", r.name.c_str(), r.worst);
  }
  return {pass, "100 seeds, worst rel error: " + detail + " (tol 1e-5)"};
}

// ---- 4: encoding aliasing ---------------------------------------------------------

Verdict aliasing() {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Rng rng(4);
  double worst_alias = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    qml::QNNModel m({}, seed);
    const std::vector<double> f{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const std::vector<double> g{f[0] + two_pi, f[1] - two_pi};
    const auto a = qml::qnn_forward(m, f);
    const auto b = qml::qnn_forward(m, g);
    for (std::size_t k = 0; k < a.size(); ++k) worst_alias = std::max(worst_alias, std::abs(a[k] - b[k]));
  }
  double worst_bound = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(40);
    for (auto& x : v) x = rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.uniform(-6, 6));
    for (double x : features::max_normalize(v, 2)) worst_bound = std::max(worst_bound, std::abs(x));
  }
  const bool pass = worst_alias <= 1e-12 && worst_bound <= 1.0;
  return {pass, fmt("max |qnn(f) - qnn(f + 2pi)| = %.3g (tol 1e-12), max |normalized| = %.17g", worst_alias,
                    worst_bound)};
}

// ---- 5: Trojan analogue -------------------------------------------------------------

double accuracy_of(const std::vector<harness::ComparisonRow>& rows, const std::string& model,
                   bool test) {
  for (const auto& r : rows)
    if (r.model == model) return test ? r.test_accuracy : r.train_accuracy;
  return NAN;
}

Verdict trojan() {
  Timer timer;
  using harness::Task;
  const auto qnn = harness::default_config(Task::TrojanQnn, "qnn");
  const auto dense = harness::default_config(Task::TrojanClassicalNn, "dense_nn");
  const auto clusters = harness::compare_models({qnn, dense});

  std::vector<harness::ExperimentConfig> xor_set;
  for (auto [task, model] : {std::pair{Task::TrojanBaselines, "perceptron"},
                             std::pair{Task::TrojanBaselines, "logreg"}, std::pair{Task::TrojanQnn, "qnn"},
                             std::pair{Task::TrojanClassicalNn, "dense_nn"}}) {
    auto c = harness::default_config(task, model);
    c.trojan.reduction = "none";
    c.trojan.synth.layout = features::Layout::Xor;
    c.trojan.synth.dims = 2;
    xor_set.push_back(c);
  }
  const auto xor_rows = harness::compare_models(xor_set);
  const double secs = timer.seconds();

  const double q_tr = accuracy_of(clusters, "qnn", false), q_te = accuracy_of(clusters, "qnn", true);
  const double d_tr = accuracy_of(clusters, "dense_nn", false), d_te = accuracy_of(clusters, "dense_nn", true);
  double linear = 0.0;
  for (const char* m : {"perceptron", "logreg"})
    linear = std::max({linear, accuracy_of(xor_rows, m, false), accuracy_of(xor_rows, m, true)});
  const double xor_qnn = accuracy_of(xor_rows, "qnn", true);
  const double xor_dense = accuracy_of(xor_rows, "dense_nn", true);

  const bool pass = q_tr >= 0.85 && q_te >= 0.85 && d_tr >= 0.95 && d_te >= 0.95 && linear <= 0.80 &&
                    d_te >= q_te && xor_qnn > linear && xor_dense > linear && secs < 300.0;
  return {pass, fmt("two-cluster qnn %.4f/%.4f, dense_nn %.4f/%.4f (train/test); xor linear max %.4f, "
                    "qnn %.4f, dense_nn %.4f (test); %.1f s (limit 300 s)",
                    q_tr, q_te, d_tr, d_te, linear, xor_qnn, xor_dense, secs)};
}

// ---- 6: retro single ----------------------------------------------------------------

double best_train(const harness::RunResult& r) {
  double best = 0.0;
  for (const auto& e : r.log.epochs) best = std::max(best, e.train_accuracy);
  return best;
}

Verdict retro_single() {
  Timer timer;
  using harness::Task;
  const auto lstm_cfg = harness::default_config(Task::RetroSingle, "lstm");
  const auto lstm = harness::run_in_memory(lstm_cfg);
  int lstm_epoch = 0;
  for (const auto& e : lstm.log.epochs)
    if (e.train_accuracy == 1.0) {
      lstm_epoch = e.epoch;
      break;
    }
  double q_best = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto c = harness::default_config(Task::RetroSingle, "qlstm");
    c.seed = seed;
    const double b = best_train(harness::run_in_memory(c));
    q_best = std::max(q_best, b);
    per_seed += fmt("%s%.3f", seed ? "/" : "", b);
  }
  const double secs = timer.seconds();
  const bool pass = lstm_epoch > 0 && lstm_epoch <= 50 && lstm_cfg.epochs <= 50 && q_best >= 0.55 && secs < 600.0;
  return {pass, fmt("%zu samples; lstm reaches 1.0 at epoch %d; qlstm best over seeds 0/1/2 = %s "
                    "(need >= 0.55); %.1f s (limit 600 s)",
                    lstm.summary.at("data").at("n_train").get<std::size_t>(), lstm_epoch, per_seed.c_str(), secs)};
}

// ---- 7: retro chain -----------------------------------------------------------------

Verdict retro_chain() {
  using harness::Task;
  bool pass = true;
  std::string detail;
  for (const char* model : {"lstm", "qlstm"}) {
    const auto c = harness::default_config(Task::RetroChain, model);
    const auto data = harness::prepare_retro_data(c);
    const auto r = harness::run_in_memory(c);
    bool finite = !r.log.diverged && static_cast<int>(r.log.epochs.size()) == c.epochs;
    bool cadence = true;
    for (const auto& e : r.log.epochs) {
      finite = finite && std::isfinite(e.train_loss) && (!e.val_loss || std::isfinite(*e.val_loss));
      cadence = cadence && (e.val_loss.has_value() == (e.epoch % 5 == 0));
    }
    const bool split = data.train.size() == 180 && data.validation.size() == 20;
    pass = pass && finite && cadence && split;
    detail += fmt("%s split %zu/%zu, val every 5: %s, finite losses: %s, final loss %.4f; ", model,
                  data.train.size(), data.validation.size(), cadence ? "yes" : "no", finite ? "yes" : "no",
                  r.log.epochs.empty() ? NAN : r.log.epochs.back().train_loss);
  }
  const auto label = smiles::label_chain_compressed("CC(C)(C)OC(=O)NCC(=O)CCC(=O)OCCCC(=O)OCc1ccccc1");
  const bool golden = label == smiles::ChainLabel::Acetic;
  return {pass && golden, detail + "worked string labels " + (label ? std::string(smiles::to_string(*label)) : "none")};
}

// ---- 8: t-SNE -----------------------------------------------------------------------

Verdict tsne() {
  Timer timer;
  Rng rng(8);
  features::FeatureMatrix x;
  x.cols = 50;
  std::vector<double> row(50);
  for (int i = 0; i < 300; ++i) {
    const int label = i % 2;
    for (std::size_t d = 0; d < 50; ++d) row[d] = rng.normal() + (d < 5 ? (label ? 2.0 : -2.0) : 0.0);
    x.append_row(row.data(), label, "c");
  }
  features::TSNEConfig cfg;
  cfg.seed = 8;
  const auto a = features::tsne_reduce(x, cfg);
  const auto b = features::tsne_reduce(x, cfg);

  std::size_t agree = 0;
  for (std::size_t i = 0; i < 300; ++i) {
    double best = INFINITY;
    std::size_t arg = i;
    for (std::size_t j = 0; j < 300; ++j) {
      if (j == i) continue;
      const double d = std::hypot(a.embedding[2 * i] - a.embedding[2 * j], a.embedding[2 * i + 1] - a.embedding[2 * j + 1]);
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    agree += x.labels[arg] == x.labels[i];
  }
  const double purity = static_cast<double>(agree) / 300.0;
  const bool same = a.embedding == b.embedding;
  const double secs = timer.seconds();
  const bool pass = a.kl_final < a.kl_initial && purity >= 0.95 && same && secs < 120.0;
  return {pass, fmt("n=300 d=50: KL %.4f -> %.4f, 1-NN purity %.4f, repeat identical: %s, %.1f s for two runs "
                    "(limit 120 s)",
                    a.kl_initial, a.kl_final, purity, same ? "yes" : "no", secs)};
}

// ---- 9: reproducibility -------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict reproducibility() {
  using harness::Task;
  const auto root = fs::temp_directory_path() / fmt("hqml-acceptance-%lld",
                                                    static_cast<long long>(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::vector<harness::ExperimentConfig> configs;
  configs.push_back(harness::default_config(Task::RetroSingle, "lstm"));
  auto chain = harness::default_config(Task::RetroChain, "qlstm");
  chain.epochs = 5;
  configs.push_back(chain);
  auto qnn = harness::default_config(Task::TrojanQnn, "qnn");
  qnn.seed = 9;
  qnn.trojan.synth.ti_total = 300;
  qnn.trojan.synth.ratio = 10.0;
  configs.push_back(qnn);
  auto dense = harness::default_config(Task::TrojanClassicalNn, "dense_nn");
  dense.trojan = qnn.trojan;
  configs.push_back(dense);

  bool pass = true;
  std::string detail;
  for (const auto& c : configs) {
    const auto a = harness::run_experiment(c, root);
    const auto b = harness::run_experiment(c, root);
    const auto ma = slurp(a.dir / "metrics.csv");
    const bool same = !ma.empty() && ma == slurp(b.dir / "metrics.csv");
    pass = pass && same;
    detail += fmt("%s%s/%s %s", detail.empty() ? "" : ", ", std::string(harness::to_string(c.task)).c_str(),
                  c.model.c_str(), same ? "identical" : "DIFFERENT");
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  return {pass, "metrics.csv over two runs: " + detail};
}

// ---- 10: preprocessing goldens -------------------------------------------------------

Verdict goldens() {
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  auto words = [](const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  };

  const auto eq1 = smiles::tokenize("<RX_1> c 1 c c c ( C n 2 c c c 3 c c c c c 3 2 ) c c 1");
  expect(eq1.reaction_type == 1 && eq1.tokens == words("c 1 c c c ( C n 2 c c c 3 c c c c c 3 2 ) c c 1"),
         "Eq. 1 tokenization");

  const std::string rx1_in = "<RX_1> F c 1 c c 2 c ( N C 3 C C C C C C 3 ) n c n c 2 c n 1";
  const std::string rx1_out = "F c 1 c c 2 c ( C l ) n c n c 2 c n 1 . N C 1 C C C C C C 1";
  const auto t1 = smiles::tokenize(rx1_in);
  expect(t1.reaction_type == 1, "RX_1 tag");
  expect(smiles::compress(t1.tokens) == "Fc1cc2c(NC3CCCCCC3)ncnc2cn1", "RX_1 stripped input");
  expect(smiles::compress(words(rx1_out)) == "Fc1cc2c(Cl)ncnc2cn1.NC1CCCCCC1", "RX_1 compressed reactants");

  std::istringstream corpus(rx1_in + "\t" + rx1_out + "\n");
  const auto sel = smiles::filter_single_reaction(smiles::parse_corpus(corpus));
  expect(sel.records.size() == 1 && sel.records[0].target == "Fc1cc2c(Cl)ncnc2cn1.NC1CCCCCC1",
         "RX_1 pipeline target");

  const auto t6 = smiles::tokenize(
      "<RX_6> C C ( C ) ( C ) O C ( = O ) N C C ( = O ) C C C ( = O ) O C C C C ( = O ) O");
  expect(t6.reaction_type == 6 && smiles::compress(t6.tokens) == "CC(C)(C)OC(=O)NCC(=O)CCC(=O)OCCCC(=O)O",
         "RX_6 stripped input");
  expect(smiles::label_chain_compressed("CC(C)(C)OC(=O)NCC(=O)CCC(=O)OCCCC(=O)OCc1ccccc1") ==
             smiles::ChainLabel::Acetic,
         "chain label");
  expect(smiles::compress(words("C C ( = O ) O")) == "CC(=O)O" && smiles::compress(words("C C ( = O ) C")) == "CC(=O)C",
         "chain patterns");

  std::string detail = "tokenization, RX_1 stripping and compression, RX_6 stripping, chain label";
  if (!failures.empty()) {
    detail = "mismatch:";
    for (const auto& f : failures) detail += " [" + f + "]";
  }
  return {failures.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"simulator matches dense oracle", simulator_oracle},
      {"parameter shift matches finite differences", shift_rule},
      {"classical autodiff gradient checks", autodiff},
      {"encoding aliasing and normalization bound", aliasing},
      {"Trojan detection analogue", trojan},
      {"single-reaction retrosynthesis", retro_single},
      {"chain-prediction pipeline", retro_chain},
      {"t-SNE reduction", tsne},
      {"byte-identical reruns", reproducibility},
      {"preprocessing goldens", goldens},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
