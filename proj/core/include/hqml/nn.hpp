#pragma once

// Classical layers, the LSTM recurrence and the sequence/dense classifiers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "hqml/diff.hpp"
#include "hqml/model.hpp"
#include "hqml/params.hpp"
#include "hqml/rng.hpp"

namespace hqml::nn {

struct LinearLayer {
  std::size_t weight = 0;  // ParamSet index of [out x in]
  std::size_t bias = 0;    // ParamSet index of [out]
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
};

LinearLayer make_linear(ParamSet& params, const std::string& name, std::size_t in_dim,
                        std::size_t out_dim, Rng& rng);

diff::Var apply(diff::Tape& tape, const Bound& bound, const LinearLayer& layer, diff::Var x);

struct EmbeddingTable {
  std::size_t table = 0;  // ParamSet index of [vocab x dim]
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
};

EmbeddingTable make_embedding(ParamSet& params, const std::string& name, std::size_t vocab_size,
                              std::size_t dim, Rng& rng);

/// Row `token_id` of the table. Vocab error when token_id >= vocab_size.
diff::Var embed(diff::Tape& tape, const Bound& bound, const EmbeddingTable& table,
                std::size_t token_id);

struct LSTMCellState {
  diff::Var h;
  diff::Var c;
};

LSTMCellState zero_state(diff::Tape& tape, std::size_t hidden_dim);

/// The four gate pre-activation producers, each mapping concat(h, x) to a
/// hidden-sized vector.
struct GateSet {
  std::function<diff::Var(diff::Var)> forget;
  std::function<diff::Var(diff::Var)> input;
  std::function<diff::Var(diff::Var)> candidate;
  std::function<diff::Var(diff::Var)> output;
};

/// v = concat(h_prev, x); f, i, o = sigmoid(gate(v)); g = tanh(candidate(v));
/// C = f*C_prev + i*g; h = o*tanh(C).
LSTMCellState lstm_recurrence(diff::Tape& tape, diff::Var x, const LSTMCellState& prev,
                              const GateSet& gates);

struct LSTMCell {
  LinearLayer forget, input, candidate, output;
  std::size_t embed_dim = 0;
  std::size_t hidden_dim = 0;
};

LSTMCell make_lstm_cell(ParamSet& params, const std::string& prefix, std::size_t embed_dim,
                        std::size_t hidden_dim, Rng& rng);

LSTMCellState lstm_cell(diff::Tape& tape, const Bound& bound, const LSTMCell& cell, diff::Var x,
                        const LSTMCellState& prev);

struct SequenceDims {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 8;
  std::size_t hidden_dim = 6;
  std::size_t n_classes = 2;
};

/// Embedding -> recurrent cell over the tokens from a zero state -> linear head
/// on the final h. Subclasses supply the cell step.
class SequenceClassifier : public Model {
 public:
  std::size_t n_classes() const override { return dims_.n_classes; }
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }
  const SequenceDims& dims() const noexcept { return dims_; }

  /// Input error for an empty token list.
  diff::Var logits(diff::Tape& tape, const Bound& bound, const Sample& sample) const override;

  /// Final cell state after consuming `tokens`.
  LSTMCellState encode(diff::Tape& tape, const Bound& bound,
                       std::span<const std::size_t> tokens) const;

  virtual LSTMCellState step(diff::Tape& tape, const Bound& bound, diff::Var x,
                             const LSTMCellState& prev) const = 0;

 protected:
  explicit SequenceClassifier(SequenceDims dims);
  void add_embedding(Rng& rng);
  void add_head(Rng& rng);

  SequenceDims dims_;
  ParamSet params_;
  EmbeddingTable embedding_;
  LinearLayer head_;
};

class LSTMClassifier : public SequenceClassifier {
 public:
  LSTMClassifier(SequenceDims dims, std::uint64_t seed);

  std::string kind() const override { return "lstm"; }
  nlohmann::json topology() const override;
  LSTMCellState step(diff::Tape& tape, const Bound& bound, diff::Var x,
                     const LSTMCellState& prev) const override;

  const LSTMCell& cell() const noexcept { return cell_; }

 private:
  LSTMCell cell_;
};

/// Fully connected ReLU network with a linear head; widths include input and
/// output, e.g. {2, 64, 256, 64, 2}.
class DenseNN : public Model {
 public:
  DenseNN(std::vector<std::size_t> widths, std::uint64_t seed);

  std::string kind() const override { return "dense_nn"; }
  std::size_t n_classes() const override { return widths_.back(); }
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }
  nlohmann::json topology() const override;

  diff::Var logits(diff::Tape& tape, const Bound& bound, const Sample& sample) const override;

  /// Batched forward: x is [batch, in].
  diff::Var forward(diff::Tape& tape, const Bound& bound, diff::Var x) const;

 private:
  std::vector<std::size_t> widths_;
  ParamSet params_;
  std::vector<LinearLayer> layers_;
};

}  // namespace hqml::nn
