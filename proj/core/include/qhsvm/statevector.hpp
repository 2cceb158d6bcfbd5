#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace qhsvm {

using Amplitude = std::complex<double>;

// Upper bound on register width; 2^20 amplitudes is 16 MiB.
inline constexpr int kMaxQubits = 20;

enum class GateKind { Rx, Rz, U3, CNOT };

// One gate of the feature-map gate set. Angles are in radians.
//
//   Rx(t)      = [[cos t/2, -i sin t/2], [-i sin t/2, cos t/2]]
//   Rz(p)      = diag(e^{-ip/2}, e^{ip/2})
//   U3(t,p,l)  = [[cos t/2, -e^{il} sin t/2], [e^{ip} sin t/2, e^{i(p+l)} cos t/2]]
//   CNOT(c, t) flips qubit t on basis states where qubit c is 1.
struct GateOp {
  GateKind kind = GateKind::Rx;
  int target = 0;
  std::optional<int> control;
  std::array<double, 3> angles{};

  static GateOp rx(int target, double theta);
  static GateOp rz(int target, double phi);
  static GateOp u3(int target, double theta, double phi, double lambda);
  static GateOp cnot(int control, int target);

  // Number of angles the gate kind carries (1, 1, 3, 0).
  int angle_count() const noexcept;
  // Exact inverse: negated rotation angles, U3(t,p,l)^-1 = U3(-t,-l,-p),
  // CNOT is self-inverse.
  GateOp inverse() const;

  friend bool operator==(const GateOp&, const GateOp&) = default;
};

// Dense amplitude vector over 2^n basis states. Qubit 0 is the
// least-significant bit of the basis index.
class StateVector {
 public:
  // |0...0> on num_qubits qubits; throws CapacityError outside [1, kMaxQubits].
  static StateVector zero(int num_qubits);
  // Wraps explicit amplitudes; length must be a power of two >= 2.
  static StateVector from_amplitudes(std::vector<Amplitude> amplitudes);

  int num_qubits() const noexcept { return num_qubits_; }
  std::size_t dimension() const noexcept { return amplitudes_.size(); }
  std::span<const Amplitude> amplitudes() const noexcept { return amplitudes_; }
  Amplitude operator[](std::size_t i) const { return amplitudes_[i]; }

  double norm_squared() const noexcept;

  // In-place gate application. Throws IndexError on invalid qubit indices
  // and ArgumentError when the angle count does not match the kind.
  void apply(const GateOp& gate);
  void apply(std::span<const GateOp> circuit);

 private:
  StateVector(int num_qubits, std::vector<Amplitude> amplitudes)
      : num_qubits_(num_qubits), amplitudes_(std::move(amplitudes)) {}

  void apply_single(int target, const std::array<Amplitude, 4>& m);
  void apply_cnot(int control, int target);

  int num_qubits_ = 0;
  std::vector<Amplitude> amplitudes_;
};

StateVector zero_state(int num_qubits);

// Functional form of StateVector::apply.
StateVector apply_gate(StateVector state, const GateOp& gate);

// 2x2 unitary of a single-qubit gate, row-major.
std::array<Amplitude, 4> gate_matrix(const GateOp& gate);

// <a|b> = sum conj(a_i) b_i. Throws ShapeError on width mismatch.
Amplitude inner_product(const StateVector& a, const StateVector& b);

// Born-rule probabilities |a_i|^2.
std::vector<double> outcome_probabilities(const StateVector& state);

// Histogram of `shots` measurement outcomes (basis index -> count) drawn by
// inverse-CDF sampling from an Rng seeded with `seed`.
std::map<std::uint64_t, std::uint64_t> sample_outcomes(const StateVector& state,
                                                        std::uint64_t shots,
                                                        std::uint64_t seed);

}  // namespace qhsvm
