#include <benchmark/benchmark.h>

#include <vector>

#include "hqml/diff.hpp"
#include "hqml/features.hpp"
#include "hqml/qml.hpp"
#include "hqml/qsim.hpp"
#include "hqml/rng.hpp"

using namespace hqml;

namespace {

void BM_RxOnEveryWire(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto s = qsim::new_zero_state(n);
  for (auto _ : state) {
    for (int w = 0; w < n; ++w) qsim::apply_gate_inplace(s, {qsim::GateKind::RX, {w}, 0.3});
    benchmark::DoNotOptimize(s.amplitudes().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RxOnEveryWire)->DenseRange(4, 20, 4);

void BM_CnotRing(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto s = qsim::new_zero_state(n);
  for (auto _ : state) {
    for (int w = 0; w < n; ++w) qsim::apply_gate_inplace(s, {qsim::GateKind::CNOT, {w, (w + 1) % n}, {}});
    benchmark::DoNotOptimize(s.amplitudes().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CnotRing)->DenseRange(4, 20, 4);

void BM_EntanglerJacobian(benchmark::State& state) {
  const int layers = static_cast<int>(state.range(0));
  const auto circuit = qml::basic_entangler_circuit(4, layers);
  Rng rng(1);
  std::vector<double> params(circuit->n_slots());
  for (auto& p : params) p = rng.uniform(-3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(diff::parameter_shift_jacobian(*circuit, params));
}
BENCHMARK(BM_EntanglerJacobian)->Arg(1)->Arg(2)->Arg(4);

void BM_QlstmStepWithBackward(benchmark::State& state) {
  ParamSet params;
  Rng rng(2);
  const auto cell = qml::make_qlstm_cell(params, "q", 8, 6, 4, 1, rng);
  for (auto _ : state) {
    diff::Tape tape;
    const auto bound = params.bind(tape);
    auto x = tape.constant(diff::Tensor(std::vector<std::size_t>{8}, 0.1));
    const auto next = qml::qlstm_cell(tape, bound, cell, x, nn::zero_state(tape, 6));
    tape.backward(diff::sum(tape, next.h));
    benchmark::DoNotOptimize(tape.grad(bound[0]).values().data());
  }
}
BENCHMARK(BM_QlstmStepWithBackward);

void BM_TsneExact(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  features::FeatureMatrix x;
  x.cols = 50;
  std::vector<double> row(50);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = rng.normal() + (i % 2 ? 1.5 : -1.5);
    x.append_row(row.data(), static_cast<int>(i % 2), "c");
  }
  features::TSNEConfig cfg;
  cfg.n_iter = 300;
  for (auto _ : state) benchmark::DoNotOptimize(features::tsne_reduce(x, cfg).kl_final);
}
BENCHMARK(BM_TsneExact)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
