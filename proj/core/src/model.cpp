#include "hqml/model.hpp"

#include <algorithm>

namespace hqml {

std::vector<double> predict_logits(const Model& model, const Sample& sample) {
  diff::Tape tape;
  const Bound bound = model.params().bind(tape);
  const auto out = model.logits(tape, bound, sample);
  return tape.value(out).values();
}

std::size_t predict(const Model& model, const Sample& sample) {
  const auto logits = predict_logits(model, sample);
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

}  // namespace hqml
