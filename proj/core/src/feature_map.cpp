#include "qhsvm/feature_map.hpp"

#include <cmath>
#include <string>

#include "qhsvm/errors.hpp"

namespace qhsvm {

FeatureMapSpec FeatureMapSpec::dense(int num_features, Entanglement entanglement,
                                     double pad_value) {
  if (num_features < 1) {
    throw ArgumentError("feature map needs at least one feature, got " +
                        std::to_string(num_features));
  }
  const int qubits = (num_features + 1) / 2;
  if (qubits > kMaxQubits) {
    throw CapacityError(std::to_string(num_features) + " features need " +
                        std::to_string(qubits) + " qubits, cap is " +
                        std::to_string(kMaxQubits));
  }
  if (!std::isfinite(pad_value)) throw DataError("pad value must be finite");
  return {num_features, qubits, entanglement, pad_value};
}

std::vector<GateOp> feature_map_circuit(const FeatureMapSpec& spec, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(spec.num_features)) {
    throw ShapeError("feature vector has " + std::to_string(x.size()) +
                     " components, feature map expects " +
                     std::to_string(spec.num_features));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw DataError("feature " + std::to_string(i) + " is not finite");
    }
  }

  std::vector<GateOp> gates;
  gates.reserve(3 * static_cast<std::size_t>(spec.num_qubits));
  for (int q = 0; q < spec.num_qubits; ++q) {
    const auto first = static_cast<std::size_t>(2 * q);
    gates.push_back(GateOp::rx(q, x[first]));
    gates.push_back(GateOp::rz(q, first + 1 < x.size() ? x[first + 1] : spec.pad_value));
  }
  if (spec.entanglement == Entanglement::LinearChain) {
    for (int q = 0; q + 1 < spec.num_qubits; ++q) gates.push_back(GateOp::cnot(q, q + 1));
  }
  return gates;
}

std::vector<GateOp> inverse_circuit(std::span<const GateOp> circuit) {
  std::vector<GateOp> out;
  out.reserve(circuit.size());
  for (auto it = circuit.rbegin(); it != circuit.rend(); ++it) out.push_back(it->inverse());
  return out;
}

EncodedPoint encode(const FeatureMapSpec& spec, std::span<const double> x) {
  const auto circuit = feature_map_circuit(spec, x);
  auto state = StateVector::zero(spec.num_qubits);
  state.apply(circuit);
  return {std::vector<double>(x.begin(), x.end()), std::move(state)};
}

double state_fidelity(const StateVector& a, const StateVector& b) {
  const double f = std::norm(inner_product(a, b));
  return f < 0.0 && f > -1e-12 ? 0.0 : f;
}

double fidelity_exact(const FeatureMapSpec& spec, std::span<const double> x,
                      std::span<const double> y) {
  return state_fidelity(encode(spec, x).state, encode(spec, y).state);
}

StateVector compute_uncompute_state(const FeatureMapSpec& spec, std::span<const double> x,
                                    std::span<const double> y) {
  const auto forward = feature_map_circuit(spec, x);
  const auto backward = inverse_circuit(feature_map_circuit(spec, y));
  auto state = StateVector::zero(spec.num_qubits);
  state.apply(forward);
  state.apply(backward);
  return state;
}

double fidelity_sampled(const FeatureMapSpec& spec, std::span<const double> x,
                        std::span<const double> y, std::uint64_t shots, std::uint64_t seed) {
  if (shots == 0) throw ArgumentError("shots must be >= 1");
  const auto state = compute_uncompute_state(spec, x, y);
  const auto counts = sample_outcomes(state, shots, seed);
  const auto it = counts.find(0);
  const std::uint64_t zeros = it == counts.end() ? 0 : it->second;
  return static_cast<double>(zeros) / static_cast<double>(shots);
}

}  // namespace qhsvm
