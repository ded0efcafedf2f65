#pragma once

// Hybrid quantum models: the squeeze -> entangler -> bloat VQC, the QLSTM
// built from four of them, and the 2-qubit QNN classifier.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "hqml/diff.hpp"
#include "hqml/model.hpp"
#include "hqml/nn.hpp"
#include "hqml/qsim.hpp"

namespace hqml::qml {

/// Entangler circuit: RX(a_i) on each wire from slots [0, n_qubits), then per
/// layer l an RX on each wire from slot n_qubits + l*n_qubits + i followed by
/// the CNOT ring i -> (i+1) mod n. Measures Z on every wire.
std::shared_ptr<const qsim::Circuit> basic_entangler_circuit(int n_qubits, int n_layers);

struct VQCLayer {
  int n_qubits = 4;
  int n_layers = 1;
  nn::LinearLayer squeeze;
  std::size_t theta = 0;  // ParamSet index of [n_layers x n_qubits]
  nn::LinearLayer bloat;
  std::shared_ptr<const qsim::Circuit> circuit;
};

VQCLayer make_vqc(ParamSet& params, const std::string& prefix, std::size_t in_dim,
                  std::size_t out_dim, int n_qubits, int n_layers, Rng& rng);

/// bloat(<Z>(entangler(squeeze(v), theta))). Shape error on dimension mismatch.
diff::Var vqc_forward(diff::Tape& tape, const Bound& bound, const VQCLayer& layer, diff::Var v);

struct QLSTMCell {
  VQCLayer forget, input, candidate, output;
  std::size_t embed_dim = 0;
  std::size_t hidden_dim = 0;
};

QLSTMCell make_qlstm_cell(ParamSet& params, const std::string& prefix, std::size_t embed_dim,
                          std::size_t hidden_dim, int n_qubits, int n_layers, Rng& rng);

nn::LSTMCellState qlstm_cell(diff::Tape& tape, const Bound& bound, const QLSTMCell& cell,
                             diff::Var x, const nn::LSTMCellState& prev);

class QLSTMClassifier : public nn::SequenceClassifier {
 public:
  QLSTMClassifier(nn::SequenceDims dims, int n_qubits, int n_layers, std::uint64_t seed);

  std::string kind() const override { return "qlstm"; }
  nlohmann::json topology() const override;
  nn::LSTMCellState step(diff::Tape& tape, const Bound& bound, diff::Var x,
                         const nn::LSTMCellState& prev) const override;

  const QLSTMCell& cell() const noexcept { return cell_; }

 private:
  QLSTMCell cell_;
};

struct QNNOptions {
  int n_qubits = 2;
  int n_layers = 2;
  /// Hadamard on every wire before the RZ feature encoding. Without it RZ on
  /// |0> is a global phase and the features never reach the measurement.
  bool hadamard_prefix = true;
};

/// Angle-encoded PQC classifier: H, RZ(f_i) per wire, then per layer RX and RZ
/// on each wire and a CRZ ring; logits are the per-wire <Z>.
class QNNModel : public Model {
 public:
  QNNModel(QNNOptions options, std::uint64_t seed);

  std::string kind() const override { return "qnn"; }
  std::size_t n_classes() const override { return static_cast<std::size_t>(options_.n_qubits); }
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }
  nlohmann::json topology() const override;

  diff::Var logits(diff::Tape& tape, const Bound& bound, const Sample& sample) const override;

  /// Trainable slots per layer: RX and RZ on every wire plus one CRZ per ring edge.
  std::size_t slots_per_layer() const noexcept;

  /// Circuit for one feature vector; slot k reads theta[k].
  qsim::Circuit circuit_for(std::span<const double> features) const;

  const QNNOptions& options() const noexcept { return options_; }

 private:
  QNNOptions options_;
  ParamSet params_;
  std::size_t theta_ = 0;
};

/// Forward pass without a tape.
std::vector<double> qnn_forward(const QNNModel& model, std::span<const double> features);

}  // namespace hqml::qml
