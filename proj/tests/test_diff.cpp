#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <vector>

#include "hqml/diff.hpp"
#include "hqml/rng.hpp"
#include "hqml/selfcheck.hpp"
#include "support.hpp"

using namespace hqml;
using namespace hqml::diff;
using hqml::test::error_kind_of;

namespace {

constexpr double kPi = std::numbers::pi;

// Reference values computed in extended precision, independent of the
// library's stabilised formulas.
long double ref_sigmoid(long double x) { return 1.0L / (1.0L + std::exp(-x)); }
long double ref_tanh(long double x) { return 2.0L / (1.0L + std::exp(-2.0L * x)) - 1.0L; }
long double ref_xent(const std::vector<long double>& z, std::size_t label) {
  long double s = 0.0L;
  for (auto v : z) s += std::exp(v);
  return std::log(s) - z[label];
}

}  // namespace

TEST(Diff, MatmulConcatAndAnnihilator) {
  Tape t;
  auto a = t.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  auto x = t.leaf(Tensor::vector({1, 1}));
  EXPECT_EQ(t.value(matmul(t, a, x)).values(), (std::vector<double>{3, 7}));

  auto h = t.leaf(Tensor(std::vector<std::size_t>{6}, 1.0));
  auto e = t.leaf(Tensor(std::vector<std::size_t>{8}, 2.0));
  const Var parts[] = {h, e};
  const auto cat = t.value(concat(t, parts)).values();
  ASSERT_EQ(cat.size(), 14u);
  EXPECT_EQ(cat[5], 1.0);
  EXPECT_EQ(cat[6], 2.0);

  auto z = t.leaf(Tensor::vector({0, 0, 0}));
  auto w = t.leaf(Tensor::vector({5, -2, 9}));
  for (double v : t.value(mul(t, w, z)).values()) EXPECT_EQ(v, 0.0);
}

TEST(Diff, ShapeMismatchIsShapeError) {
  Tape t;
  auto a = t.leaf(Tensor::vector({1, 2, 3}));
  auto b = t.leaf(Tensor::vector({1, 2}));
  EXPECT_EQ(error_kind_of([&] { add(t, a, b); }), ErrorKind::Shape);
  auto m = t.leaf(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  EXPECT_EQ(error_kind_of([&] { matmul(t, m, a); }), ErrorKind::Shape);
}

TEST(Diff, SigmoidValues) {
  EXPECT_EQ(sigmoid_value(0.0), 0.5);
  EXPECT_EQ(sigmoid_value(-1000.0), 0.0);
  EXPECT_EQ(sigmoid_value(1000.0), 1.0);
  EXPECT_NEAR(sigmoid_value(1.0), static_cast<double>(ref_sigmoid(1.0L)), 1e-15);
  EXPECT_NEAR(sigmoid_value(1.0), 0.7310585786, 1e-10);
}

TEST(Diff, TanhValues) {
  EXPECT_EQ(tanh_value(0.0), 0.0);
  EXPECT_NEAR(tanh_value(1.0), static_cast<double>(ref_tanh(1.0L)), 1e-15);
  EXPECT_NEAR(tanh_value(1.0), 0.7615941560, 1e-10);
  for (double x : {0.1, 0.7, 3.0, 25.0, 800.0}) EXPECT_EQ(tanh_value(-x), -tanh_value(x));
  EXPECT_EQ(tanh_value(-1000.0), -1.0);
}

TEST(Diff, SoftmaxXentExamples) {
  Tape t;
  auto two = t.leaf(Tensor::vector({0, 0}));
  EXPECT_NEAR(t.value(softmax_xent(t, two, 0))[0], std::log(2.0), 1e-15);
  auto four = t.leaf(Tensor::vector({0, 0, 0, 0}));
  for (std::size_t k = 0; k < 4; ++k)
    EXPECT_NEAR(t.value(softmax_xent(t, four, k))[0], std::log(4.0), 1e-15);
  auto z = t.leaf(Tensor::vector({2, 1, 0}));
  const double loss = t.value(softmax_xent(t, z, 0))[0];
  EXPECT_NEAR(loss, static_cast<double>(ref_xent({2, 1, 0}, 0)), 1e-14);
  EXPECT_NEAR(loss, 0.4076, 1e-4);
  EXPECT_EQ(error_kind_of([&] { softmax_xent(t, z, 3); }), ErrorKind::Label);
}

TEST(Diff, SoftmaxXentGradientIsSoftmaxMinusOneHot) {
  Tape t;
  auto z = t.leaf(Tensor::vector({0.3, -1.2, 2.0}));
  t.backward(softmax_xent(t, z, 1));
  const std::vector<double> zv{0.3, -1.2, 2.0};
  const auto p = softmax(zv);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(t.grad(z)[k], p[k] - (k == 1 ? 1.0 : 0.0), 1e-15);
}

TEST(Diff, SoftmaxIsANormalisedDistribution) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> z(2 + rng.below(6));
    for (auto& v : z) v = rng.uniform(-50, 50);
    const auto p = softmax(z);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  const std::vector<double> big{1000.0, 999.0};
  const auto p = softmax(big);
  EXPECT_TRUE(std::isfinite(p[0]) && p[0] > 0.0 && p[0] < 1.0);
}

TEST(Diff, BackwardOnSimpleGraphs) {
  {
    Tape t;
    auto w = t.leaf(Tensor::scalar(0.8));
    auto x = t.constant(Tensor::scalar(3.0));
    t.backward(mul(t, w, x));
    EXPECT_EQ(t.grad(w)[0], 3.0);
  }
  {
    Tape t;
    auto w = t.leaf(Tensor::scalar(0.0));
    auto x = t.constant(Tensor::scalar(1.7));
    t.backward(sigmoid(t, mul(t, w, x)));
    EXPECT_NEAR(t.grad(w)[0], 0.25 * 1.7, 1e-15);
  }
  {
    // Fan-out accumulates: d(x*x)/dx = 2x.
    Tape t;
    auto x = t.leaf(Tensor::scalar(1.5));
    auto unused = t.leaf(Tensor::scalar(9.0));
    t.backward(mul(t, x, x));
    EXPECT_EQ(t.grad(x)[0], 3.0);
    EXPECT_EQ(t.grad(unused)[0], 0.0);
  }
}

TEST(Diff, NonScalarLossIsShapeError) {
  Tape t;
  auto x = t.leaf(Tensor::vector({1, 2}));
  auto y = scale(t, x, 2.0);
  EXPECT_EQ(error_kind_of([&] { t.backward(y); }), ErrorKind::Shape);
}

TEST(Diff, BackwardVisitsEachNodeOnce) {
  Tape t;
  auto x = t.leaf(Tensor::vector({0.5, -0.5}));
  auto s = sum(t, tanh_act(t, sigmoid(t, x)));
  t.backward(s);
  EXPECT_LE(t.visited(), t.size());
}

TEST(Diff, TapeReplayIsBitwiseDeterministic) {
  auto build = [] {
    Tape t;
    auto w = t.leaf(Tensor::matrix(2, 3, {0.1, -0.4, 0.7, 1.1, 0.2, -0.9}));
    auto b = t.leaf(Tensor::vector({0.05, -0.3}));
    auto x = t.constant(Tensor::vector({0.3, 0.6, -1.0}));
    t.backward(softmax_xent(t, tanh_act(t, linear(t, x, w, b)), 1));
    return std::make_pair(t.grad(w), t.grad(b));
  };
  EXPECT_EQ(build(), build());
}

TEST(Diff, CompositeGraphsMatchFiniteDifferences) {
  Rng rng(17);
  double worst = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    auto rnd = [&](std::vector<std::size_t> shape) {
      Tensor t(std::move(shape));
      for (auto& v : t.data()) v = rng.uniform(-1, 1);
      return t;
    };
    const std::size_t label = rng.below(3);
    auto fn = [label](Tape& t, const std::vector<Var>& in) {
      auto hidden = tanh_act(t, linear(t, in[0], in[1], in[2]));
      auto gate = sigmoid(t, slice(t, in[0], 0, 3));
      auto mixed = add(t, mul(t, hidden, gate), relu(t, scale(t, hidden, -0.5)));
      return softmax_xent(t, mixed, label);
    };
    const auto r = selfcheck::gradcheck(fn, {rnd({4}), rnd({3, 4}), rnd({3})}, 1e-4, 1e-2);
    worst = std::max(worst, r.max_rel_error);
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Diff, QuantumNodeShiftRuleExamples) {
  auto c = std::make_shared<qsim::Circuit>(1);
  c->rx(0, qsim::ParamRef::from_slot(0)).measure_z(0);
  for (const auto& [theta, expected] : {std::pair{0.0, 0.0}, std::pair{kPi / 2, -1.0}}) {
    Tape t;
    auto p = t.leaf(Tensor::vector({theta}));
    t.backward(sum(t, quantum_node(t, c, p)));
    EXPECT_NEAR(t.grad(p)[0], expected, 1e-14);
  }
}

TEST(Diff, ParameterOnUnmeasuredWireHasZeroGradient) {
  qsim::Circuit c(2);
  c.rx(0, qsim::ParamRef::from_slot(0)).ry(1, qsim::ParamRef::from_slot(1)).measure_z(0);
  const std::vector<double> p{0.4, 1.3};
  const auto jac = parameter_shift_jacobian(c, p);
  EXPECT_NEAR(jac[0][0], -std::sin(0.4), 1e-14);
  EXPECT_EQ(jac[0][1], 0.0);
}

TEST(Diff, ControlledRzNeedsTheFourTermRule) {
  // H on the control, CRZ onto |0>, H again: <Z_1> = cos(theta/2). The
  // half-frequency term defeats the two-term rule.
  qsim::Circuit c(2);
  c.h(1).crz(1, 0, qsim::ParamRef::from_slot(0)).h(1).measure_z(1);
  for (double theta : {0.3, 1.1, -2.4}) {
    const std::vector<double> p{theta};
    const auto exact = parameter_shift_jacobian(c, p)[0][0];
    const auto fd = selfcheck::finite_difference_jacobian(c, p, 1e-5)[0][0];
    EXPECT_NEAR(exact, fd, 1e-8);
    const std::vector<double> plus{theta + kPi / 2}, minus{theta - kPi / 2};
    const double two_term = (qsim::run_circuit(c, plus)[0] - qsim::run_circuit(c, minus)[0]) / 2;
    EXPECT_GT(std::abs(two_term - fd), 1e-3);
  }
}

TEST(Diff, ShiftRuleMatchesFiniteDifferencesOnRandomCircuits) {
  const auto r = selfcheck::check_parameter_shift(100, 23);
  EXPECT_TRUE(r.pass) << r.detail;
  EXPECT_LE(r.worst, 1e-6);
}
