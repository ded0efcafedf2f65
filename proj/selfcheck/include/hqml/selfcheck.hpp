#pragma once

// Independent reference checks for the simulator and the differentiation
// engine. The dense oracle builds full 2^n x 2^n gate matrices from Kronecker
// products and never calls the simulator's in-place kernels.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hqml/diff.hpp"
#include "hqml/qsim.hpp"
#include "hqml/rng.hpp"

namespace hqml::selfcheck {

using Complex = std::complex<double>;
using DenseMatrix = std::vector<Complex>;  // row-major dim x dim

/// Full-register matrix of one gate; wire 0 is the least significant bit.
DenseMatrix dense_gate_matrix(int n_wires, const qsim::GateOp& op);

/// Applies each gate by dense matrix-vector product.
std::vector<Complex> dense_run(int n_wires, std::vector<Complex> state,
                               const std::vector<qsim::GateOp>& ops);

struct RandomCircuit {
  int n_wires = 1;
  std::vector<qsim::GateOp> ops;
};

/// 1..max_wires wires, 1..max_gates gates from {H, X, RX, RY, RZ, CNOT, CRZ}.
RandomCircuit random_circuit(Rng& rng, int max_wires = 4, int max_gates = 20);

/// Random parametrised circuit with 1..max_params trainable slots, measuring Z on every wire.
qsim::Circuit random_vqc(Rng& rng, int max_wires = 4, std::size_t max_params = 12);

/// Central finite-difference Jacobian of run_circuit.
std::vector<std::vector<double>> finite_difference_jacobian(const qsim::Circuit& circuit,
                                                           std::vector<double> params, double eps);

/// Builds a scalar from leaves on a fresh tape.
using TapeFn = std::function<diff::Var(diff::Tape&, const std::vector<diff::Var>&)>;

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of `f` with central differences over every
/// input coordinate. Relative error is |a - b| / max(|a|, |b|, floor).
GradCheck gradcheck(const TapeFn& f, const std::vector<diff::Tensor>& inputs, double eps = 1e-5,
                    double floor = 1e-2);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::size_t cases = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

/// Random circuits against the dense oracle: amplitudes within 1e-10, norms within 1e-12.
CheckResult check_simulator_oracle(std::size_t n_circuits, std::uint64_t seed);

/// Shift-rule Jacobians against central differences (eps 1e-4), absolute tolerance 1e-6.
CheckResult check_parameter_shift(std::size_t n_circuits, std::uint64_t seed);

/// One result per layer: linear, embedding, sigmoid, tanh, softmax_xent,
/// lstm_cell, qlstm_cell. Relative tolerance 1e-5.
std::vector<CheckResult> check_autodiff(std::size_t n_seeds, std::uint64_t seed);

/// All of the above with the given case counts.
std::vector<CheckResult> run_all(std::uint64_t seed, std::size_t circuits = 1000,
                                 std::size_t vqcs = 100, std::size_t grad_seeds = 100);

}  // namespace hqml::selfcheck
