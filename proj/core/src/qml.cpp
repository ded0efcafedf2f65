#include "hqml/qml.hpp"

#include <numbers>
#include <string>

#include "hqml/error.hpp"

namespace hqml::qml {

using diff::Tape;
using diff::Tensor;
using diff::Var;
using qsim::ParamRef;

namespace {

// Ring edges i -> (i+1) mod n; a single wire has no ring.
std::vector<std::pair<int, int>> ring(int n) {
  std::vector<std::pair<int, int>> edges;
  if (n < 2) return edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return edges;
}

Tensor angle_init(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape), 0.0);
  for (auto& v : t.data()) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return t;
}

}  // namespace

std::shared_ptr<const qsim::Circuit> basic_entangler_circuit(int n_qubits, int n_layers) {
  if (n_layers < 1) fail(ErrorKind::Config, "entangler needs at least one layer");
  auto circuit = std::make_shared<qsim::Circuit>(n_qubits);
  for (int i = 0; i < n_qubits; ++i) circuit->rx(i, ParamRef::from_slot(static_cast<std::size_t>(i)));
  const auto edges = ring(n_qubits);
  for (int l = 0; l < n_layers; ++l) {
    for (int i = 0; i < n_qubits; ++i) {
      circuit->rx(i, ParamRef::from_slot(static_cast<std::size_t>(n_qubits + l * n_qubits + i)));
    }
    for (auto [c, t] : edges) circuit->cnot(c, t);
  }
  circuit->measure_all_z();
  return circuit;
}

VQCLayer make_vqc(ParamSet& params, const std::string& prefix, std::size_t in_dim,
                  std::size_t out_dim, int n_qubits, int n_layers, Rng& rng) {
  VQCLayer layer;
  layer.n_qubits = n_qubits;
  layer.n_layers = n_layers;
  layer.circuit = basic_entangler_circuit(n_qubits, n_layers);
  const auto nq = static_cast<std::size_t>(n_qubits);
  layer.squeeze = nn::make_linear(params, prefix + ".squeeze", in_dim, nq, rng);
  layer.theta = params.add(prefix + ".theta", angle_init({static_cast<std::size_t>(n_layers), nq}, rng));
  layer.bloat = nn::make_linear(params, prefix + ".bloat", nq, out_dim, rng);
  return layer;
}

Var vqc_forward(Tape& tape, const Bound& bound, const VQCLayer& layer, Var v) {
  if (tape.value(v).rank() != 1 || tape.value(v).size() != layer.squeeze.in_dim) {
    fail(ErrorKind::Shape, "vqc_forward: input " + tape.value(v).shape_string() + ", expected [" +
                               std::to_string(layer.squeeze.in_dim) + "]");
  }
  const Var angles = nn::apply(tape, bound, layer.squeeze, v);
  const Var theta = bound.at(layer.theta);
  const Var flat = diff::reshape(tape, theta, {tape.value(theta).size()});
  const Var parts[] = {angles, flat};
  const Var expectations = diff::quantum_node(tape, layer.circuit, diff::concat(tape, parts));
  return nn::apply(tape, bound, layer.bloat, expectations);
}

QLSTMCell make_qlstm_cell(ParamSet& params, const std::string& prefix, std::size_t embed_dim,
                          std::size_t hidden_dim, int n_qubits, int n_layers, Rng& rng) {
  QLSTMCell cell;
  cell.embed_dim = embed_dim;
  cell.hidden_dim = hidden_dim;
  const std::size_t in = hidden_dim + embed_dim;
  cell.forget = make_vqc(params, prefix + ".vqc1_forget", in, hidden_dim, n_qubits, n_layers, rng);
  cell.input = make_vqc(params, prefix + ".vqc2_input", in, hidden_dim, n_qubits, n_layers, rng);
  cell.candidate = make_vqc(params, prefix + ".vqc3_candidate", in, hidden_dim, n_qubits, n_layers, rng);
  cell.output = make_vqc(params, prefix + ".vqc4_output", in, hidden_dim, n_qubits, n_layers, rng);
  return cell;
}

nn::LSTMCellState qlstm_cell(Tape& tape, const Bound& bound, const QLSTMCell& cell, Var x,
                             const nn::LSTMCellState& prev) {
  if (tape.value(x).size() != cell.embed_dim || tape.value(prev.h).size() != cell.hidden_dim) {
    fail(ErrorKind::Shape, "qlstm_cell: input " + tape.value(x).shape_string() + ", hidden " +
                               tape.value(prev.h).shape_string());
  }
  auto gate = [&](const VQCLayer& layer) {
    return [&tape, &bound, &layer](Var v) { return vqc_forward(tape, bound, layer, v); };
  };
  const nn::GateSet gates{gate(cell.forget), gate(cell.input), gate(cell.candidate),
                          gate(cell.output)};
  return nn::lstm_recurrence(tape, x, prev, gates);
}

QLSTMClassifier::QLSTMClassifier(nn::SequenceDims dims, int n_qubits, int n_layers,
                                 std::uint64_t seed)
    : SequenceClassifier(dims) {
  Rng rng(seed, Stream::Init);
  add_embedding(rng);
  cell_ = make_qlstm_cell(params_, "qlstm", dims_.embed_dim, dims_.hidden_dim, n_qubits, n_layers,
                          rng);
  add_head(rng);
}

nn::LSTMCellState QLSTMClassifier::step(Tape& tape, const Bound& bound, Var x,
                                        const nn::LSTMCellState& prev) const {
  return qlstm_cell(tape, bound, cell_, x, prev);
}

nlohmann::json QLSTMClassifier::topology() const {
  return {{"vocab_size", dims_.vocab_size},
          {"embed_dim", dims_.embed_dim},
          {"hidden_dim", dims_.hidden_dim},
          {"n_classes", dims_.n_classes},
          {"cell", "qlstm"},
          {"vqc",
           {{"n_qubits", cell_.forget.n_qubits},
            {"n_layers", cell_.forget.n_layers},
            {"encoding", "RX"},
            {"entangler", "CNOT ring"},
            {"measurement", "PauliZ per wire"}}}};
}

// ---- QNN --------------------------------------------------------------------

QNNModel::QNNModel(QNNOptions options, std::uint64_t seed) : options_(options) {
  if (options_.n_qubits < 2) fail(ErrorKind::Config, "QNN needs at least two qubits");
  if (options_.n_layers < 1) fail(ErrorKind::Config, "QNN needs at least one layer");
  Rng rng(seed, Stream::Init);
  theta_ = params_.add("qnn.theta",
                       angle_init({static_cast<std::size_t>(options_.n_layers), slots_per_layer()}, rng));
}

std::size_t QNNModel::slots_per_layer() const noexcept {
  return 2 * static_cast<std::size_t>(options_.n_qubits) + ring(options_.n_qubits).size();
}

qsim::Circuit QNNModel::circuit_for(std::span<const double> features) const {
  const int n = options_.n_qubits;
  if (features.size() != static_cast<std::size_t>(n)) {
    fail(ErrorKind::Shape, "QNN expects " + std::to_string(n) + " features, got " +
                               std::to_string(features.size()));
  }
  qsim::Circuit c(n);
  for (int i = 0; i < n; ++i) {
    if (options_.hadamard_prefix) c.h(i);
    c.rz(i, ParamRef::value(features[static_cast<std::size_t>(i)]));
  }
  const auto edges = ring(n);
  std::size_t slot = 0;
  for (int l = 0; l < options_.n_layers; ++l) {
    for (int i = 0; i < n; ++i) {
      c.rx(i, ParamRef::from_slot(slot++));
      c.rz(i, ParamRef::from_slot(slot++));
    }
    for (auto [ctl, tgt] : edges) c.crz(ctl, tgt, ParamRef::from_slot(slot++));
  }
  c.measure_all_z();
  return c;
}

Var QNNModel::logits(Tape& tape, const Bound& bound, const Sample& sample) const {
  auto circuit = std::make_shared<const qsim::Circuit>(circuit_for(sample.features));
  const Var theta = bound.at(theta_);
  const Var flat = diff::reshape(tape, theta, {tape.value(theta).size()});
  return diff::quantum_node(tape, std::move(circuit), flat);
}

nlohmann::json QNNModel::topology() const {
  return {{"n_qubits", options_.n_qubits},
          {"n_layers", options_.n_layers},
          {"encoding", options_.hadamard_prefix ? "H+RZ" : "RZ"},
          {"layer", "RX,RZ per wire + CRZ ring"},
          {"readout", "softmax over PauliZ per wire"}};
}

std::vector<double> qnn_forward(const QNNModel& model, std::span<const double> features) {
  const auto circuit = model.circuit_for(features);
  return qsim::run_circuit(circuit, model.params().at(0).data());
}

}  // namespace hqml::qml
