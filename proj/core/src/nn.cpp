#include "hqml/nn.hpp"

#include <string>

#include "hqml/error.hpp"

namespace hqml::nn {

using diff::Tape;
using diff::Tensor;
using diff::Var;

LinearLayer make_linear(ParamSet& params, const std::string& name, std::size_t in_dim,
                        std::size_t out_dim, Rng& rng) {
  LinearLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.weight = params.add(name + ".weight", uniform_init({out_dim, in_dim}, in_dim, rng));
  layer.bias = params.add(name + ".bias", uniform_init({out_dim}, in_dim, rng));
  return layer;
}

Var apply(Tape& tape, const Bound& bound, const LinearLayer& layer, Var x) {
  return diff::linear(tape, x, bound.at(layer.weight), bound.at(layer.bias));
}

EmbeddingTable make_embedding(ParamSet& params, const std::string& name, std::size_t vocab_size,
                              std::size_t dim, Rng& rng) {
  if (vocab_size == 0) fail(ErrorKind::Vocab, "embedding needs a non-empty vocabulary");
  EmbeddingTable table;
  table.vocab_size = vocab_size;
  table.dim = dim;
  // Unit-variance rows, the usual embedding initialisation.
  Tensor init({vocab_size, dim}, 0.0);
  for (auto& v : init.data()) v = rng.normal();
  table.table = params.add(name, std::move(init));
  return table;
}

Var embed(Tape& tape, const Bound& bound, const EmbeddingTable& table, std::size_t token_id) {
  if (token_id >= table.vocab_size) {
    fail(ErrorKind::Vocab, "token id " + std::to_string(token_id) + " outside vocabulary of " +
                               std::to_string(table.vocab_size));
  }
  return diff::row(tape, bound.at(table.table), token_id);
}

LSTMCellState zero_state(Tape& tape, std::size_t hidden_dim) {
  return {tape.constant(Tensor({hidden_dim}, 0.0)), tape.constant(Tensor({hidden_dim}, 0.0))};
}

LSTMCellState lstm_recurrence(Tape& tape, Var x, const LSTMCellState& prev, const GateSet& gates) {
  const Var parts[] = {prev.h, x};
  const Var v = diff::concat(tape, parts);
  const Var f = diff::sigmoid(tape, gates.forget(v));
  const Var i = diff::sigmoid(tape, gates.input(v));
  const Var g = diff::tanh_act(tape, gates.candidate(v));
  const Var o = diff::sigmoid(tape, gates.output(v));
  if (tape.value(f).shape() != tape.value(prev.c).shape()) {
    fail(ErrorKind::Shape, "gate output " + tape.value(f).shape_string() + " vs cell state " +
                               tape.value(prev.c).shape_string());
  }
  const Var c = diff::add(tape, diff::mul(tape, f, prev.c), diff::mul(tape, i, g));
  const Var h = diff::mul(tape, o, diff::tanh_act(tape, c));
  return {h, c};
}

LSTMCell make_lstm_cell(ParamSet& params, const std::string& prefix, std::size_t embed_dim,
                        std::size_t hidden_dim, Rng& rng) {
  LSTMCell cell;
  cell.embed_dim = embed_dim;
  cell.hidden_dim = hidden_dim;
  const std::size_t in = hidden_dim + embed_dim;
  cell.forget = make_linear(params, prefix + ".forget", in, hidden_dim, rng);
  cell.input = make_linear(params, prefix + ".input", in, hidden_dim, rng);
  cell.candidate = make_linear(params, prefix + ".candidate", in, hidden_dim, rng);
  cell.output = make_linear(params, prefix + ".output", in, hidden_dim, rng);
  return cell;
}

LSTMCellState lstm_cell(Tape& tape, const Bound& bound, const LSTMCell& cell, Var x,
                        const LSTMCellState& prev) {
  if (tape.value(x).size() != cell.embed_dim || tape.value(prev.h).size() != cell.hidden_dim) {
    fail(ErrorKind::Shape, "lstm_cell: input " + tape.value(x).shape_string() + ", hidden " +
                               tape.value(prev.h).shape_string());
  }
  auto gate = [&](const LinearLayer& layer) {
    return [&tape, &bound, &layer](Var v) { return apply(tape, bound, layer, v); };
  };
  const GateSet gates{gate(cell.forget), gate(cell.input), gate(cell.candidate), gate(cell.output)};
  return lstm_recurrence(tape, x, prev, gates);
}

// ---- SequenceClassifier -----------------------------------------------------

SequenceClassifier::SequenceClassifier(SequenceDims dims) : dims_(dims) {
  if (dims_.n_classes < 2) fail(ErrorKind::Config, "classifier needs at least two classes");
  if (dims_.embed_dim == 0 || dims_.hidden_dim == 0) {
    fail(ErrorKind::Config, "embedding and hidden dimensions must be positive");
  }
}

void SequenceClassifier::add_embedding(Rng& rng) {
  embedding_ = make_embedding(params_, "embedding", dims_.vocab_size, dims_.embed_dim, rng);
}

void SequenceClassifier::add_head(Rng& rng) {
  head_ = make_linear(params_, "head", dims_.hidden_dim, dims_.n_classes, rng);
}

LSTMCellState SequenceClassifier::encode(Tape& tape, const Bound& bound,
                                         std::span<const std::size_t> tokens) const {
  if (tokens.empty()) fail(ErrorKind::Input, "cannot classify an empty token sequence");
  LSTMCellState state = zero_state(tape, dims_.hidden_dim);
  for (std::size_t token : tokens) {
    state = step(tape, bound, embed(tape, bound, embedding_, token), state);
  }
  return state;
}

Var SequenceClassifier::logits(Tape& tape, const Bound& bound, const Sample& sample) const {
  const LSTMCellState final_state = encode(tape, bound, sample.tokens);
  return apply(tape, bound, head_, final_state.h);
}

// ---- LSTMClassifier ---------------------------------------------------------

LSTMClassifier::LSTMClassifier(SequenceDims dims, std::uint64_t seed) : SequenceClassifier(dims) {
  Rng rng(seed, Stream::Init);
  add_embedding(rng);
  cell_ = make_lstm_cell(params_, "lstm", dims_.embed_dim, dims_.hidden_dim, rng);
  add_head(rng);
}

LSTMCellState LSTMClassifier::step(Tape& tape, const Bound& bound, Var x,
                                   const LSTMCellState& prev) const {
  return lstm_cell(tape, bound, cell_, x, prev);
}

nlohmann::json LSTMClassifier::topology() const {
  return {{"vocab_size", dims_.vocab_size},
          {"embed_dim", dims_.embed_dim},
          {"hidden_dim", dims_.hidden_dim},
          {"n_classes", dims_.n_classes},
          {"cell", "lstm"}};
}

// ---- DenseNN ----------------------------------------------------------------

DenseNN::DenseNN(std::vector<std::size_t> widths, std::uint64_t seed) : widths_(std::move(widths)) {
  if (widths_.size() < 2) fail(ErrorKind::Config, "dense network needs at least input and output widths");
  Rng rng(seed, Stream::Init);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    layers_.push_back(
        make_linear(params_, "dense" + std::to_string(l), widths_[l], widths_[l + 1], rng));
  }
}

Var DenseNN::forward(Tape& tape, const Bound& bound, Var x) const {
  Var h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = apply(tape, bound, layers_[l], h);
    if (l + 1 < layers_.size()) h = diff::relu(tape, h);
  }
  return h;
}

Var DenseNN::logits(Tape& tape, const Bound& bound, const Sample& sample) const {
  if (sample.features.size() != widths_.front()) {
    fail(ErrorKind::Shape, "dense_nn expects " + std::to_string(widths_.front()) + " features, got " +
                               std::to_string(sample.features.size()));
  }
  return forward(tape, bound, tape.constant(Tensor::vector(sample.features)));
}

nlohmann::json DenseNN::topology() const { return {{"widths", widths_}, {"activation", "relu"}}; }

}  // namespace hqml::nn
