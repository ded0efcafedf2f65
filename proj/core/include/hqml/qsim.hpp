#pragma once

// Statevector simulation of the gate set {H, X, RX, RY, RZ, CNOT, CRZ} with
// exact Pauli-Z expectations.
//
// Conventions:
//   * wire 0 is the least-significant bit of the basis index;
//   * RZ(t) = diag(e^{-it/2}, e^{+it/2});
//   * RX(t) = [[cos(t/2), -i sin(t/2)], [-i sin(t/2), cos(t/2)]];
//   * RY(t) = [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]];
//   * CNOT / CRZ act on wires[1] (target) when wires[0] (control) is 1.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace hqml::qsim {

using Complex = std::complex<double>;

inline constexpr int kMaxWires = 24;

enum class GateKind { H, X, RX, RY, RZ, CNOT, CRZ };

std::string_view to_string(GateKind kind) noexcept;
GateKind gate_kind_from_string(std::string_view name);

constexpr bool is_parametric(GateKind k) noexcept {
  return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ || k == GateKind::CRZ;
}

constexpr int arity(GateKind k) noexcept {
  return (k == GateKind::CNOT || k == GateKind::CRZ) ? 2 : 1;
}

class QuantumState {
 public:
  /// |0...0> on n_wires qubits; throws Size outside [1, kMaxWires].
  explicit QuantumState(int n_wires);

  /// Takes ownership of explicit amplitudes. Length must be a power of two and
  /// the vector must be normalized within 1e-10.
  static QuantumState from_amplitudes(std::vector<Complex> amplitudes);

  int n_wires() const noexcept { return n_wires_; }
  std::size_t dimension() const noexcept { return amps_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }

  double norm_squared() const noexcept;

  // In-place kernels used by run_circuit. No validation; callers check wires.
  void apply_matrix_1q(int wire, const Complex& m00, const Complex& m01, const Complex& m10,
                       const Complex& m11);
  void apply_diagonal_1q(int wire, const Complex& d0, const Complex& d1);
  void apply_cnot(int control, int target);
  void apply_controlled_diagonal(int control, int target, const Complex& d0, const Complex& d1);

 private:
  QuantumState() = default;

  int n_wires_ = 0;
  std::vector<Complex> amps_;
};

struct GateOp {
  GateKind kind = GateKind::H;
  std::vector<int> wires;
  std::optional<double> param;
};

/// Throws Size when n_wires is outside [1, 24].
QuantumState new_zero_state(int n_wires);

/// Validates op against the state (Wire / Param errors) and returns the
/// transformed state. The input is left untouched.
QuantumState apply_gate(const QuantumState& state, const GateOp& op);

/// Applies op to state in place after validation.
void apply_gate_inplace(QuantumState& state, const GateOp& op);

/// Exact <Z> on `wire`: sum_i |a_i|^2 * (bit(i, wire) ? -1 : +1).
double expectation_z(const QuantumState& state, int wire);

/// Where a circuit operation takes its angle from.
struct ParamRef {
  enum class Source { None, Literal, Slot };

  Source source = Source::None;
  double literal = 0.0;
  std::size_t slot = 0;

  static ParamRef none() { return {}; }
  static ParamRef value(double angle) { return {Source::Literal, angle, 0}; }
  static ParamRef from_slot(std::size_t index) { return {Source::Slot, 0.0, index}; }
};

struct CircuitOp {
  GateKind kind = GateKind::H;
  int wires[2] = {0, 0};
  ParamRef param;

  double angle(std::span<const double> params) const {
    return param.source == ParamRef::Source::Slot ? params[param.slot] : param.literal;
  }
};

/// Ordered gate list over a fixed register plus Pauli-Z observables.
class Circuit {
 public:
  explicit Circuit(int n_wires);

  int n_wires() const noexcept { return n_wires_; }
  const std::vector<CircuitOp>& ops() const noexcept { return ops_; }
  const std::vector<int>& observables() const noexcept { return observables_; }

  /// Number of parameter slots referenced (max slot index + 1).
  std::size_t n_slots() const noexcept { return n_slots_; }

  Circuit& h(int wire);
  Circuit& x(int wire);
  Circuit& rx(int wire, ParamRef p);
  Circuit& ry(int wire, ParamRef p);
  Circuit& rz(int wire, ParamRef p);
  Circuit& cnot(int control, int target);
  Circuit& crz(int control, int target, ParamRef p);
  Circuit& add(GateKind kind, std::span<const int> wires, ParamRef p);
  Circuit& measure_z(int wire);
  Circuit& measure_all_z();

 private:
  int n_wires_;
  std::size_t n_slots_ = 0;
  std::vector<CircuitOp> ops_;
  std::vector<int> observables_;
};

/// Runs the circuit from |0...0> and returns the final state.
/// Throws Arity when params.size() != circuit.n_slots().
QuantumState simulate(const Circuit& circuit, std::span<const double> params);

/// Same as simulate, with the angle of operation `op_index` offset by `shift`.
QuantumState simulate_shifted(const Circuit& circuit, std::span<const double> params,
                              std::size_t op_index, double shift);

/// One <Z> per observable, in observable order.
std::vector<double> run_circuit(const Circuit& circuit, std::span<const double> params);

std::vector<double> measure(const Circuit& circuit, const QuantumState& state);

}  // namespace hqml::qsim
