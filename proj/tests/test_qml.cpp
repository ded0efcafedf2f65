#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hqml/diff.hpp"
#include "hqml/nn.hpp"
#include "hqml/qml.hpp"
#include "hqml/selfcheck.hpp"
#include "support.hpp"

using namespace hqml;
using namespace hqml::qml;
using diff::Tape;
using diff::Tensor;
using diff::Var;
using hqml::test::error_kind_of;

namespace {

constexpr double kPi = std::numbers::pi;

void zero_all(ParamSet& p) {
  for (std::size_t i = 0; i < p.size(); ++i) p.at(i).fill(0.0);
}

/// Slot layout per layer: RX0, RZ0, RX1, RZ1, CRZ(0->1), CRZ(1->0).
void make_symmetric(QNNModel& m) {
  auto& theta = m.params().at(0);
  const std::size_t per = m.slots_per_layer();
  for (std::size_t l = 0; l < theta.size() / per; ++l) {
    double* s = theta.data().data() + l * per;
    s[2] = s[0];
    s[3] = s[1];
    s[5] = s[4];
  }
}

}  // namespace

TEST(QML, EntanglerCircuitLayout) {
  const auto c = basic_entangler_circuit(4, 2);
  EXPECT_EQ(c->n_slots(), 12u);
  EXPECT_EQ(c->observables().size(), 4u);
  int cnots = 0;
  for (const auto& op : c->ops()) cnots += op.kind == qsim::GateKind::CNOT;
  EXPECT_EQ(cnots, 8);
}

TEST(QML, ZeroWeightVqcOutputsZero) {
  ParamSet p;
  Rng rng(1);
  const auto layer = make_vqc(p, "vqc", 14, 6, 4, 1, rng);
  zero_all(p);
  Tape t;
  const auto bound = p.bind(t);
  auto v = t.constant(Tensor(std::vector<std::size_t>{14}, 0.9));
  for (double y : t.value(vqc_forward(t, bound, layer, v)).values()) EXPECT_EQ(y, 0.0);
}

TEST(QML, SingleQubitPiEncodingFlipsExpectation) {
  ParamSet p;
  Rng rng(2);
  const auto layer = make_vqc(p, "vqc", 3, 2, 1, 1, rng);
  zero_all(p);
  p.at(layer.squeeze.bias)[0] = kPi;  // a = pi for any input
  p.at(layer.bloat.weight) = Tensor::matrix(2, 1, {2.0, -3.0});
  p.at(layer.bloat.bias) = Tensor::vector({0.5, 0.25});
  Tape t;
  const auto bound = p.bind(t);
  auto v = t.constant(Tensor::vector({0.3, -0.1, 0.8}));
  const auto out = t.value(vqc_forward(t, bound, layer, v));
  EXPECT_NEAR(out[0], -2.0 + 0.5, 1e-15);
  EXPECT_NEAR(out[1], 3.0 + 0.25, 1e-15);
}

TEST(QML, VqcShapeMismatch) {
  ParamSet p;
  Rng rng(3);
  const auto layer = make_vqc(p, "vqc", 14, 6, 4, 1, rng);
  Tape t;
  const auto bound = p.bind(t);
  auto v = t.constant(Tensor(std::vector<std::size_t>{13}, 0.0));
  EXPECT_EQ(error_kind_of([&] { vqc_forward(t, bound, layer, v); }), ErrorKind::Shape);
}

TEST(QML, VqcGradientIncludingSqueeze) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ParamSet p;
    Rng rng(seed);
    const auto layer = make_vqc(p, "vqc", 5, 3, 3, 2, rng);
    std::vector<Tensor> inputs;
    for (std::size_t i = 0; i < p.size(); ++i) inputs.push_back(p.at(i));
    Tensor v({5});
    for (auto& x : v.data()) x = rng.uniform(-1, 1);
    inputs.push_back(v);
    const std::size_t np = p.size();
    auto fn = [&](Tape& t, const std::vector<Var>& in) {
      const Bound bound(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(np));
      return diff::sum(t, diff::tanh_act(t, vqc_forward(t, bound, layer, in[np])));
    };
    worst = std::max(worst, selfcheck::gradcheck(fn, inputs, 1e-4, 1e-2).max_rel_error);
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(QML, ZeroWeightQlstmCell) {
  ParamSet p;
  Rng rng(4);
  const auto cell = make_qlstm_cell(p, "q", 8, 6, 4, 1, rng);
  zero_all(p);
  Tape t;
  const auto bound = p.bind(t);
  const std::vector<double> cprev{1.0, -2.0, 0.5, 0.0, 0.25, 3.0};
  nn::LSTMCellState prev{t.constant(Tensor::vector({0.3, 0.3, 0.3, 0.3, 0.3, 0.3})),
                         t.constant(Tensor::vector(cprev))};
  auto x = t.constant(Tensor(std::vector<std::size_t>{8}, -0.4));
  const auto s = qlstm_cell(t, bound, cell, x, prev);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(t.value(s.c)[k], 0.5 * cprev[k], 1e-15);
    EXPECT_NEAR(t.value(s.h)[k], 0.5 * std::tanh(0.5 * cprev[k]), 1e-15);
  }
  const auto z = qlstm_cell(t, bound, cell, x, nn::zero_state(t, 6));
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(t.value(z.c)[k], 0.0);
    EXPECT_EQ(t.value(z.h)[k], 0.0);
  }
}

TEST(QML, SharedVqcWeightsGiveEqualGates) {
  ParamSet p;
  Rng rng(5);
  const auto cell = make_qlstm_cell(p, "q", 8, 6, 4, 1, rng);
  const VQCLayer* others[] = {&cell.input, &cell.candidate, &cell.output};
  for (const auto* o : others) {
    p.at(o->squeeze.weight) = p.at(cell.forget.squeeze.weight);
    p.at(o->squeeze.bias) = p.at(cell.forget.squeeze.bias);
    p.at(o->theta) = p.at(cell.forget.theta);
    p.at(o->bloat.weight) = p.at(cell.forget.bloat.weight);
    p.at(o->bloat.bias) = p.at(cell.forget.bloat.bias);
  }
  Tape t;
  const auto bound = p.bind(t);
  Tensor v({14});
  for (auto& x : v.data()) x = rng.uniform(-1, 1);
  auto vin = t.constant(v);
  const auto ref = t.value(vqc_forward(t, bound, cell.forget, vin)).values();
  for (const auto* o : others) EXPECT_EQ(t.value(vqc_forward(t, bound, *o, vin)).values(), ref);
}

TEST(QML, LinearGatesInTheRecurrenceReproduceLstmCell) {
  // The QLSTM recurrence with each VQC swapped for a linear layer is the
  // classical LSTM cell.
  ParamSet p;
  Rng rng(6);
  const auto cell = nn::make_lstm_cell(p, "lstm", 8, 6, rng);
  Tape t;
  const auto bound = p.bind(t);
  auto gate = [&](const nn::LinearLayer& l) {
    return [&t, &bound, l](Var v) { return nn::apply(t, bound, l, v); };
  };
  const nn::GateSet gates{gate(cell.forget), gate(cell.input), gate(cell.candidate), gate(cell.output)};
  Tensor x({8}), h({6}), c({6});
  for (auto* ten : {&x, &h, &c})
    for (auto& v : ten->data()) v = rng.uniform(-1, 1);
  const nn::LSTMCellState prev{t.constant(h), t.constant(c)};
  auto xv = t.constant(x);
  const auto a = nn::lstm_recurrence(t, xv, prev, gates);
  const auto b = nn::lstm_cell(t, bound, cell, xv, prev);
  EXPECT_EQ(t.value(a.h), t.value(b.h));
  EXPECT_EQ(t.value(a.c), t.value(b.c));
}

TEST(QML, QlstmClassifierEndToEndGradient) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    QLSTMClassifier model({4, 3, 2, 3}, 2, 1, seed);
    auto& params = model.params();
    std::vector<Tensor> inputs;
    for (std::size_t i = 0; i < params.size(); ++i) inputs.push_back(params.at(i));
    const Sample sample{{seed % 4, 1, 3}, {}, seed % 3};
    auto fn = [&](Tape& t, const std::vector<Var>& in) {
      return diff::softmax_xent(t, model.logits(t, in, sample), sample.label);
    };
    worst = std::max(worst, selfcheck::gradcheck(fn, inputs, 1e-4, 1e-2).max_rel_error);
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(QML, QnnZeroAnglesGiveUniformLogits) {
  QNNModel m({}, 0);
  zero_all(m.params());
  const std::vector<double> f{0.0, 0.0};
  const auto z = qnn_forward(m, f);
  EXPECT_NEAR(z[0], 0.0, 1e-15);
  EXPECT_NEAR(z[1], 0.0, 1e-15);
  const auto p = diff::softmax(z);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
}

TEST(QML, QnnWirePermutationSymmetry) {
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    QNNModel m({}, seed);
    make_symmetric(m);
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    const std::vector<double> same{a, a}, ab{a, b}, ba{b, a};
    const auto z = qnn_forward(m, same);
    EXPECT_NEAR(z[0], z[1], 1e-13);
    const auto z1 = qnn_forward(m, ab);
    const auto z2 = qnn_forward(m, ba);
    EXPECT_NEAR(z1[0], z2[1], 1e-13);
    EXPECT_NEAR(z1[1], z2[0], 1e-13);
  }
}

TEST(QML, QnnLogitsStayInPauliRange) {
  Rng rng(9);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    QNNModel m({2, 1 + static_cast<int>(seed % 3), true}, seed);
    for (auto& v : m.params().at(0).data()) v = rng.uniform(-20, 20);
    const std::vector<double> f{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    for (double z : qnn_forward(m, f)) {
      EXPECT_GE(z, -1.0 - 1e-12);
      EXPECT_LE(z, 1.0 + 1e-12);
    }
  }
}

TEST(QML, QnnFeaturesAliasModuloTwoPi) {
  Rng rng(10);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    QNNModel m({}, seed);
    const std::vector<double> f{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const std::vector<double> g{f[0] + 2 * kPi, f[1] - 2 * kPi};
    const auto a = qnn_forward(m, f);
    const auto b = qnn_forward(m, g);
    EXPECT_NEAR(a[0], b[0], 1e-12);
    EXPECT_NEAR(a[1], b[1], 1e-12);
  }
}

TEST(QML, HadamardPrefixMakesFeaturesObservable) {
  const std::vector<double> f{0.2, -0.7}, g{1.1, 0.4};
  QNNModel with_h({2, 2, true}, 3);
  const auto a = qnn_forward(with_h, f);
  const auto b = qnn_forward(with_h, g);
  EXPECT_GT(std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]), 1e-3);

  // RZ on |00> is a phase, so without H the logits ignore the features.
  QNNModel no_h({2, 2, false}, 3);
  Rng rng(11);
  const auto ref = qnn_forward(no_h, f);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> h{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const auto z = qnn_forward(no_h, h);
    EXPECT_NEAR(z[0], ref[0], 1e-14);
    EXPECT_NEAR(z[1], ref[1], 1e-14);
  }
}

TEST(QML, QnnFeatureCountMustMatchQubits) {
  QNNModel m({}, 0);
  const std::vector<double> three{0.1, 0.2, 0.3};
  EXPECT_EQ(error_kind_of([&] { qnn_forward(m, three); }), ErrorKind::Shape);
}
