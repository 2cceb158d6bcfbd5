#include "qhsvm/statevector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "qhsvm/errors.hpp"
#include "qhsvm/rng.hpp"

namespace qhsvm {

namespace {

constexpr Amplitude kI{0.0, 1.0};

void check_qubit(int q, int num_qubits, const char* role) {
  if (q < 0 || q >= num_qubits) {
    throw IndexError(std::string(role) + " qubit " + std::to_string(q) +
                     " out of range for " + std::to_string(num_qubits) + " qubits");
  }
}

}  // namespace

GateOp GateOp::rx(int target, double theta) {
  return {GateKind::Rx, target, std::nullopt, {theta, 0.0, 0.0}};
}

GateOp GateOp::rz(int target, double phi) {
  return {GateKind::Rz, target, std::nullopt, {phi, 0.0, 0.0}};
}

GateOp GateOp::u3(int target, double theta, double phi, double lambda) {
  return {GateKind::U3, target, std::nullopt, {theta, phi, lambda}};
}

GateOp GateOp::cnot(int control, int target) {
  return {GateKind::CNOT, target, control, {}};
}

int GateOp::angle_count() const noexcept {
  switch (kind) {
    case GateKind::Rx:
    case GateKind::Rz:
      return 1;
    case GateKind::U3:
      return 3;
    case GateKind::CNOT:
      return 0;
  }
  return 0;
}

GateOp GateOp::inverse() const {
  switch (kind) {
    case GateKind::Rx:
      return rx(target, -angles[0]);
    case GateKind::Rz:
      return rz(target, -angles[0]);
    case GateKind::U3:
      return u3(target, -angles[0], -angles[2], -angles[1]);
    case GateKind::CNOT:
      return *this;
  }
  return *this;
}

std::array<Amplitude, 4> gate_matrix(const GateOp& gate) {
  const double half = gate.angles[0] / 2.0;
  switch (gate.kind) {
    case GateKind::Rx: {
      const double c = std::cos(half);
      const double s = std::sin(half);
      return {Amplitude{c, 0.0}, -kI * s, -kI * s, Amplitude{c, 0.0}};
    }
    case GateKind::Rz:
      return {std::polar(1.0, -half), 0.0, 0.0, std::polar(1.0, half)};
    case GateKind::U3: {
      const double c = std::cos(half);
      const double s = std::sin(half);
      const double phi = gate.angles[1];
      const double lambda = gate.angles[2];
      return {Amplitude{c, 0.0}, -std::polar(s, lambda), std::polar(s, phi),
              std::polar(c, phi + lambda)};
    }
    case GateKind::CNOT:
      break;
  }
  throw ArgumentError("CNOT has no single-qubit matrix");
}

StateVector StateVector::zero(int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw CapacityError("qubit count " + std::to_string(num_qubits) +
                        " outside [1, " + std::to_string(kMaxQubits) + "]");
  }
  std::vector<Amplitude> amps(std::size_t{1} << num_qubits);
  amps[0] = 1.0;
  return StateVector(num_qubits, std::move(amps));
}

StateVector StateVector::from_amplitudes(std::vector<Amplitude> amplitudes) {
  const std::size_t n = amplitudes.size();
  if (n < 2 || !std::has_single_bit(n)) {
    throw ShapeError("amplitude count " + std::to_string(n) + " is not a power of two >= 2");
  }
  const int qubits = std::countr_zero(n);
  if (qubits > kMaxQubits) {
    throw CapacityError("qubit count " + std::to_string(qubits) + " exceeds cap");
  }
  return StateVector(qubits, std::move(amplitudes));
}

double StateVector::norm_squared() const noexcept {
  double total = 0.0;
  for (const auto& a : amplitudes_) total += std::norm(a);
  return total;
}

void StateVector::apply(const GateOp& gate) {
  check_qubit(gate.target, num_qubits_, "target");
  if (gate.kind == GateKind::CNOT) {
    if (!gate.control) throw ArgumentError("CNOT requires a control qubit");
    check_qubit(*gate.control, num_qubits_, "control");
    if (*gate.control == gate.target) {
      throw IndexError("CNOT control equals target (" + std::to_string(gate.target) + ")");
    }
    apply_cnot(*gate.control, gate.target);
    return;
  }
  if (gate.control) throw ArgumentError("single-qubit gate given a control qubit");
  apply_single(gate.target, gate_matrix(gate));
}

void StateVector::apply(std::span<const GateOp> circuit) {
  for (const auto& gate : circuit) apply(gate);
}

void StateVector::apply_single(int target, const std::array<Amplitude, 4>& m) {
  const std::size_t stride = std::size_t{1} << target;
  const std::size_t n = amplitudes_.size();
  for (std::size_t base = 0; base < n; base += 2 * stride) {
    for (std::size_t k = base; k < base + stride; ++k) {
      const Amplitude a0 = amplitudes_[k];
      const Amplitude a1 = amplitudes_[k + stride];
      amplitudes_[k] = m[0] * a0 + m[1] * a1;
      amplitudes_[k + stride] = m[2] * a0 + m[3] * a1;
    }
  }
}

void StateVector::apply_cnot(int control, int target) {
  const std::size_t cbit = std::size_t{1} << control;
  const std::size_t tbit = std::size_t{1} << target;
  for (std::size_t k = 0; k < amplitudes_.size(); ++k) {
    if ((k & cbit) && !(k & tbit)) std::swap(amplitudes_[k], amplitudes_[k | tbit]);
  }
}

StateVector zero_state(int num_qubits) { return StateVector::zero(num_qubits); }

StateVector apply_gate(StateVector state, const GateOp& gate) {
  state.apply(gate);
  return state;
}

Amplitude inner_product(const StateVector& a, const StateVector& b) {
  if (a.num_qubits() != b.num_qubits()) {
    throw ShapeError("inner product of " + std::to_string(a.num_qubits()) + "- and " +
                     std::to_string(b.num_qubits()) + "-qubit states");
  }
  // Accumulate real and imaginary parts separately; avoids complex multiply
  // overhead in the Gram-matrix hot loop.
  double re = 0.0;
  double im = 0.0;
  const auto av = a.amplitudes();
  const auto bv = b.amplitudes();
  for (std::size_t i = 0; i < av.size(); ++i) {
    re += av[i].real() * bv[i].real() + av[i].imag() * bv[i].imag();
    im += av[i].real() * bv[i].imag() - av[i].imag() * bv[i].real();
  }
  return {re, im};
}

std::vector<double> outcome_probabilities(const StateVector& state) {
  std::vector<double> p(state.dimension());
  std::ranges::transform(state.amplitudes(), p.begin(),
                         [](const Amplitude& a) { return std::norm(a); });
  return p;
}

std::map<std::uint64_t, std::uint64_t> sample_outcomes(const StateVector& state,
                                                        std::uint64_t shots,
                                                        std::uint64_t seed) {
  if (shots == 0) throw ArgumentError("shots must be >= 1");
  const auto probs = outcome_probabilities(state);
  std::vector<double> cdf(probs.size());
  double running = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    running += probs[i];
    cdf[i] = running;
  }
  // Renormalize so rounding in the total cannot push draws past the end.
  for (auto& c : cdf) c /= running;
  cdf.back() = 1.0;

  Rng rng(seed);
  std::map<std::uint64_t, std::uint64_t> counts;
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform();
    const auto it = std::ranges::upper_bound(cdf, u);
    ++counts[static_cast<std::uint64_t>(it - cdf.begin())];
  }
  return counts;
}

}  // namespace qhsvm
