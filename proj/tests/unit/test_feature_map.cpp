#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "qhsvm/errors.hpp"
#include "qhsvm/feature_map.hpp"
#include "qhsvm/rng.hpp"

namespace {

using qhsvm::Entanglement;
using qhsvm::FeatureMapSpec;
constexpr double kPi = std::numbers::pi;

std::vector<double> random_point(qhsvm::Rng& rng, int d) {
  std::vector<double> x(d);
  for (auto& v : x) v = rng.uniform() * kPi;
  return x;
}

TEST(FeatureMap, QubitCount) {
  EXPECT_EQ(FeatureMapSpec::dense(8).num_qubits, 4);
  EXPECT_EQ(FeatureMapSpec::dense(12).num_qubits, 6);
  EXPECT_EQ(FeatureMapSpec::dense(5).num_qubits, 3);
  EXPECT_EQ(FeatureMapSpec::dense(1).num_qubits, 1);
}

TEST(FeatureMap, CircuitLayout) {
  const auto spec = FeatureMapSpec::dense(5);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5};
  const auto c = qhsvm::feature_map_circuit(spec, x);
  ASSERT_EQ(c.size(), 8u);
  EXPECT_EQ(c[0], qhsvm::GateOp::rx(0, 0.1));
  EXPECT_EQ(c[1], qhsvm::GateOp::rz(0, 0.2));
  EXPECT_EQ(c[4], qhsvm::GateOp::rx(2, 0.5));
  EXPECT_EQ(c[5], qhsvm::GateOp::rz(2, 0.0));  // padded
  EXPECT_EQ(c[6], qhsvm::GateOp::cnot(0, 1));
  EXPECT_EQ(c[7], qhsvm::GateOp::cnot(1, 2));

  const auto none = qhsvm::feature_map_circuit(FeatureMapSpec::dense(4, Entanglement::None),
                                               std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(none.size(), 4u);
}

TEST(FeatureMap, InputValidation) {
  const auto spec = FeatureMapSpec::dense(4);
  EXPECT_THROW(qhsvm::feature_map_circuit(spec, std::vector<double>{1, 2, 3}), qhsvm::ShapeError);
  EXPECT_THROW(qhsvm::feature_map_circuit(
                   spec, std::vector<double>{1, std::numeric_limits<double>::quiet_NaN(), 0, 0}),
               qhsvm::DataError);
  EXPECT_THROW(qhsvm::feature_map_circuit(
                   spec, std::vector<double>{1, std::numeric_limits<double>::infinity(), 0, 0}),
               qhsvm::DataError);
}

TEST(Encode, ClosedFormStates) {
  const auto s0 = qhsvm::encode(FeatureMapSpec::dense(2, Entanglement::None),
                                std::vector<double>{0, 0});
  EXPECT_NEAR(qhsvm::outcome_probabilities(s0.state)[0], 1.0, 1e-15);

  const auto p1 = qhsvm::outcome_probabilities(
      qhsvm::encode(FeatureMapSpec::dense(2), std::vector<double>{kPi, 0}).state);
  EXPECT_NEAR(p1[0], 0.0, 1e-15);
  EXPECT_NEAR(p1[1], 1.0, 1e-15);

  const auto p = qhsvm::outcome_probabilities(
      qhsvm::encode(FeatureMapSpec::dense(4), std::vector<double>{kPi / 2, 0, 0, 0}).state);
  const std::vector<double> want{0.5, 0.0, 0.0, 0.5};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], want[i], 1e-14);
}

TEST(Encode, MatchesKroneckerOracle) {
  qhsvm::Rng rng(5);
  for (int d : {2, 3, 4, 7, 8}) {
    const auto x = random_point(rng, d);
    const auto s = qhsvm::encode(FeatureMapSpec::dense(d), x).state;
    const int nq = (d + 1) / 2;
    const auto v = oracle::apply_matrix(oracle::feature_map_unitary(x, true), oracle::zero_vector(nq));
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_NEAR(s[i].real(), v[i].real(), 1e-12);
      EXPECT_NEAR(s[i].imag(), v[i].imag(), 1e-12);
    }
  }
}

TEST(Fidelity, SelfIsOne) {
  qhsvm::Rng rng(8);
  for (int d : {2, 5, 8, 12}) {
    const auto x = random_point(rng, d);
    EXPECT_NEAR(qhsvm::fidelity_exact(FeatureMapSpec::dense(d), x, x), 1.0, 1e-12);
  }
}

TEST(Fidelity, SingleQubitClosedForm) {
  const auto spec = FeatureMapSpec::dense(2);
  EXPECT_NEAR(qhsvm::fidelity_exact(spec, std::vector<double>{kPi, 0}, std::vector<double>{0, 0}),
              0.0, 1e-15);
  for (double theta : {kPi / 3, kPi / 2, 2 * kPi / 3}) {
    const double want = std::pow(std::cos(theta / 2), 2);
    EXPECT_NEAR(
        qhsvm::fidelity_exact(spec, std::vector<double>{theta, 0}, std::vector<double>{0, 0}),
        want, 1e-14);
  }
}

TEST(Fidelity, SymmetricAndMatchesOracle) {
  qhsvm::Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    const int d = 2 + static_cast<int>(rng.below(7));
    const auto spec = FeatureMapSpec::dense(d);
    const auto x = random_point(rng, d);
    const auto y = random_point(rng, d);
    const double fxy = qhsvm::fidelity_exact(spec, x, y);
    EXPECT_NEAR(fxy, qhsvm::fidelity_exact(spec, y, x), 1e-14);
    EXPECT_NEAR(fxy, oracle::fidelity(x, y, true), 1e-12);
    EXPECT_GE(fxy, 0.0);
    EXPECT_LE(fxy, 1.0 + 1e-12);
  }
}

TEST(ComputeUncompute, ZeroProbabilityEqualsFidelity) {
  qhsvm::Rng rng(21);
  for (int d : {8, 12}) {
    const auto spec = FeatureMapSpec::dense(d);
    const auto x = random_point(rng, d);
    const auto y = random_point(rng, d);
    const auto s = qhsvm::compute_uncompute_state(spec, x, y);
    EXPECT_NEAR(std::norm(s[0]), qhsvm::fidelity_exact(spec, x, y), 1e-12);
  }
}

TEST(FidelitySampled, Values) {
  qhsvm::Rng rng(34);
  const auto spec2 = FeatureMapSpec::dense(2);
  const auto x = random_point(rng, 8);
  const auto spec8 = FeatureMapSpec::dense(8);
  EXPECT_EQ(qhsvm::fidelity_sampled(spec8, x, x, 17, 1), 1.0);
  EXPECT_EQ(qhsvm::fidelity_sampled(spec2, std::vector<double>{kPi, 0},
                                    std::vector<double>{0, 0}, 100000, 1),
            0.0);
  const auto y = random_point(rng, 8);
  EXPECT_NEAR(qhsvm::fidelity_sampled(spec8, x, y, 100000, 77), qhsvm::fidelity_exact(spec8, x, y),
              0.01);
  EXPECT_EQ(qhsvm::fidelity_sampled(spec8, x, y, 1000, 5), qhsvm::fidelity_sampled(spec8, x, y, 1000, 5));
  EXPECT_THROW(qhsvm::fidelity_sampled(spec8, x, y, 0, 5), qhsvm::ArgumentError);
}

}  // namespace
