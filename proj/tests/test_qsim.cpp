#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hqml/qsim.hpp"
#include "hqml/rng.hpp"
#include "hqml/selfcheck.hpp"
#include "support.hpp"

using namespace hqml;
using namespace hqml::qsim;
using hqml::test::error_kind_of;

namespace {

constexpr double kPi = std::numbers::pi;

GateOp op(GateKind k, std::vector<int> wires, std::optional<double> p = std::nullopt) {
  return GateOp{k, std::move(wires), p};
}

}  // namespace

TEST(QSim, XFlipsZeroToOne) {
  const auto s = apply_gate(new_zero_state(1), op(GateKind::X, {0}));
  EXPECT_NEAR(std::abs(s[0]), 0.0, 1e-15);
  EXPECT_NEAR(s[1].real(), 1.0, 1e-15);
}

TEST(QSim, HadamardGivesEqualSuperposition) {
  const auto s = apply_gate(new_zero_state(1), op(GateKind::H, {0}));
  EXPECT_NEAR(s[0].real(), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s[1].real(), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(expectation_z(s, 0), 0.0, 1e-15);
}

TEST(QSim, RxThirdPiExpectationIsHalf) {
  const auto s = apply_gate(new_zero_state(1), op(GateKind::RX, {0}, kPi / 3));
  EXPECT_NEAR(expectation_z(s, 0), 0.5, 1e-12);
}

TEST(QSim, RxPiFlipsExpectation) {
  EXPECT_DOUBLE_EQ(expectation_z(new_zero_state(1), 0), 1.0);
  const auto s = apply_gate(new_zero_state(1), op(GateKind::RX, {0}, kPi));
  EXPECT_NEAR(expectation_z(s, 0), -1.0, 1e-15);
}

TEST(QSim, WireZeroIsLeastSignificantBit) {
  const auto s = apply_gate(new_zero_state(3), op(GateKind::X, {0}));
  EXPECT_NEAR(s[1].real(), 1.0, 1e-15);
  const auto t = apply_gate(new_zero_state(3), op(GateKind::X, {2}));
  EXPECT_NEAR(t[4].real(), 1.0, 1e-15);
}

TEST(QSim, RzPhaseConvention) {
  auto s = apply_gate(new_zero_state(1), op(GateKind::H, {0}));
  s = apply_gate(s, op(GateKind::RZ, {0}, 0.7));
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(s[0] - r * std::polar(1.0, -0.35)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s[1] - r * std::polar(1.0, 0.35)), 0.0, 1e-15);
}

TEST(QSim, ControlledGatesActOnlyWhenControlIsSet) {
  auto s = apply_gate(new_zero_state(2), op(GateKind::CNOT, {0, 1}));
  EXPECT_NEAR(s[0].real(), 1.0, 1e-15);
  s = apply_gate(apply_gate(new_zero_state(2), op(GateKind::X, {0})), op(GateKind::CNOT, {0, 1}));
  EXPECT_NEAR(s[3].real(), 1.0, 1e-15);

  auto c = apply_gate(new_zero_state(2), op(GateKind::X, {0}));
  c = apply_gate(c, op(GateKind::X, {1}));
  c = apply_gate(c, op(GateKind::CRZ, {0, 1}, 1.0));
  EXPECT_NEAR(std::abs(c[3] - std::polar(1.0, 0.5)), 0.0, 1e-15);
}

TEST(QSim, GateErrors) {
  const auto s = new_zero_state(2);
  EXPECT_EQ(error_kind_of([&] { apply_gate(s, op(GateKind::X, {2})); }), ErrorKind::Wire);
  EXPECT_EQ(error_kind_of([&] { apply_gate(s, op(GateKind::CNOT, {1, 1})); }), ErrorKind::Wire);
  EXPECT_EQ(error_kind_of([&] { apply_gate(s, op(GateKind::RX, {0})); }), ErrorKind::Param);
  EXPECT_EQ(error_kind_of([&] { apply_gate(s, op(GateKind::H, {0}, 1.0)); }), ErrorKind::Param);
  EXPECT_EQ(error_kind_of([&] { expectation_z(s, 5); }), ErrorKind::Wire);
  EXPECT_EQ(error_kind_of([] { new_zero_state(0); }), ErrorKind::Size);
  EXPECT_EQ(error_kind_of([] { new_zero_state(25); }), ErrorKind::Size);
}

TEST(QSim, RunCircuitExamples) {
  Circuit c(1);
  c.rx(0, ParamRef::from_slot(0)).measure_z(0);
  const std::vector<double> zero{0.0};
  const std::vector<double> quarter{kPi / 2};
  EXPECT_NEAR(run_circuit(c, zero)[0], 1.0, 1e-15);
  EXPECT_NEAR(run_circuit(c, quarter)[0], 0.0, 1e-15);

  const std::vector<double> wrong{0.0, 1.0};
  EXPECT_EQ(error_kind_of([&] { run_circuit(c, wrong); }), ErrorKind::Arity);

  Circuit bell(2);
  bell.h(0).cnot(0, 1).measure_all_z();
  const auto z = run_circuit(bell, {});
  ASSERT_EQ(z.size(), 2u);
  EXPECT_NEAR(z[0], 0.0, 1e-15);
  EXPECT_NEAR(z[1], 0.0, 1e-15);
}

TEST(QSim, PhaseOnlyCircuitsKeepProbabilities) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(4));
    Circuit c(n);
    for (int g = 0; g < 10; ++g) {
      const int w = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (n > 1 && rng.uniform() < 0.5) {
        const int t = (w + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)))) % n;
        c.crz(w, t, ParamRef::value(rng.uniform(-7, 7)));
      } else {
        c.rz(w, ParamRef::value(rng.uniform(-7, 7)));
      }
    }
    const auto s = simulate(c, {});
    EXPECT_NEAR(std::norm(s[0]), 1.0, 1e-12);
  }
}

TEST(QSim, RepeatedRunsAreBitwiseIdentical) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto c = selfcheck::random_vqc(rng, 4, 12);
    std::vector<double> p(c.n_slots());
    for (auto& v : p) v = rng.uniform(-3, 3);
    EXPECT_EQ(run_circuit(c, p), run_circuit(c, p));
  }
}

TEST(QSim, MatchesDenseOracleOnRandomCircuits) {
  const auto r = selfcheck::check_simulator_oracle(200, 5);
  EXPECT_TRUE(r.pass) << r.detail;
  EXPECT_EQ(r.cases, 200u);
}

TEST(QSim, DenseOracleDetectsAWrongAngle) {
  // The oracle has to disagree with the simulator when fed a different circuit.
  std::vector<GateOp> ops{op(GateKind::H, {0}), op(GateKind::RY, {0}, 0.3), op(GateKind::CRZ, {0, 1}, 0.9)};
  auto sim = new_zero_state(2);
  for (const auto& g : ops) sim = apply_gate(sim, g);
  ops[1].param = 0.3 + 1e-3;
  std::vector<selfcheck::Complex> init(4, 0.0);
  init[0] = 1.0;
  const auto dense = selfcheck::dense_run(2, init, ops);
  double diff = 0.0;
  for (std::size_t i = 0; i < 4; ++i) diff = std::max(diff, std::abs(dense[i] - sim[i]));
  EXPECT_GT(diff, 1e-5);
}
