#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qhsvm/statevector.hpp"

namespace qhsvm {

enum class Entanglement { LinearChain, None };

// Dense angle encoding: qubit q receives Rx(x[2q]) followed by Rz(x[2q+1]),
// then one entangling layer. LinearChain applies CNOT(q, q+1) for
// q = 0 .. num_qubits-2 in ascending order.
struct FeatureMapSpec {
  int num_features = 0;
  int num_qubits = 0;
  Entanglement entanglement = Entanglement::LinearChain;
  // Rz angle used for the missing last feature when num_features is odd.
  double pad_value = 0.0;

  // Validated constructor; num_qubits = ceil(num_features / 2).
  static FeatureMapSpec dense(int num_features,
                              Entanglement entanglement = Entanglement::LinearChain,
                              double pad_value = 0.0);
};

struct EncodedPoint {
  std::vector<double> raw;
  StateVector state;
};

// Gate sequence U(x). Throws ShapeError on length mismatch and DataError on
// non-finite components.
std::vector<GateOp> feature_map_circuit(const FeatureMapSpec& spec, std::span<const double> x);

// Reversed sequence of inverted gates.
std::vector<GateOp> inverse_circuit(std::span<const GateOp> circuit);

EncodedPoint encode(const FeatureMapSpec& spec, std::span<const double> x);

// |<psi(x)|psi(y)>|^2, clamped to 0 for rounding residue in (-1e-12, 0).
double fidelity_exact(const FeatureMapSpec& spec, std::span<const double> x,
                      std::span<const double> y);

// Same quantity for already-encoded states.
double state_fidelity(const StateVector& a, const StateVector& b);

// Compute-uncompute state U(y)^dagger U(x)|0...0>.
StateVector compute_uncompute_state(const FeatureMapSpec& spec, std::span<const double> x,
                                    std::span<const double> y);

// Fraction of `shots` compute-uncompute measurements that return all zeros.
// Throws ArgumentError when shots == 0.
double fidelity_sampled(const FeatureMapSpec& spec, std::span<const double> x,
                        std::span<const double> y, std::uint64_t shots, std::uint64_t seed);

}  // namespace qhsvm
