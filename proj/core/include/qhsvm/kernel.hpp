#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qhsvm/feature_map.hpp"
#include "qhsvm/matrix.hpp"

namespace qhsvm {

enum class MatrixKind : std::uint8_t { TrainSymmetric = 0, TestRectangular = 1 };

// Where kernel values came from. Stored alongside cached matrices and models.
struct Provenance {
  enum class Kind : std::uint8_t {
    QuantumExact = 0,
    QuantumSampled = 1,
    ClassicalLinear = 2,
    ClassicalRbf = 3,
  };

  Kind kind = Kind::QuantumExact;
  std::uint64_t shots = 0;  // QuantumSampled only
  std::uint64_t seed = 0;   // QuantumSampled only
  double gamma = 0.0;       // ClassicalRbf only

  static Provenance quantum_exact() { return {Kind::QuantumExact}; }
  static Provenance quantum_sampled(std::uint64_t shots, std::uint64_t seed) {
    return {Kind::QuantumSampled, shots, seed};
  }
  static Provenance classical_linear() { return {Kind::ClassicalLinear}; }
  static Provenance classical_rbf(double gamma) { return {Kind::ClassicalRbf, 0, 0, gamma}; }

  // Fidelity and RBF kernels have unit diagonal and values in [0, 1].
  bool is_bounded() const noexcept { return kind != Kind::ClassicalLinear; }
  std::string describe() const;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct KernelMatrix {
  MatrixKind kind = MatrixKind::TrainSymmetric;
  Provenance provenance;
  Matrix values;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }

  friend bool operator==(const KernelMatrix&, const KernelMatrix&) = default;
};

// Entry (i, j) of a bound kernel. Implementations must be pure functions of
// (i, j) so that parallel fills are scheduling-independent.
class PairEvaluator {
 public:
  virtual ~PairEvaluator() = default;
  virtual double operator()(std::size_t i, std::size_t j) const = 0;
};

class Kernel {
 public:
  virtual ~Kernel() = default;

  virtual Provenance provenance() const = 0;
  virtual double operator()(std::span<const double> x, std::span<const double> y) const = 0;

  // Evaluator over fixed row and column sets. The default calls operator()
  // on each pair; quantum kernels override it to encode every row once.
  virtual std::unique_ptr<PairEvaluator> bind(const Matrix& rows, const Matrix& cols,
                                              MatrixKind kind) const;
};

class QuantumExactKernel final : public Kernel {
 public:
  explicit QuantumExactKernel(FeatureMapSpec spec) : spec_(spec) {}

  const FeatureMapSpec& spec() const noexcept { return spec_; }
  Provenance provenance() const override { return Provenance::quantum_exact(); }
  double operator()(std::span<const double> x, std::span<const double> y) const override;
  std::unique_ptr<PairEvaluator> bind(const Matrix& rows, const Matrix& cols,
                                      MatrixKind kind) const override;

 private:
  FeatureMapSpec spec_;
};

// Finite-shot compute-uncompute estimate. Inside a Gram matrix, pair (i, j)
// is sampled with a seed derived from (seed, matrix kind, i, j).
class QuantumSampledKernel final : public Kernel {
 public:
  QuantumSampledKernel(FeatureMapSpec spec, std::uint64_t shots, std::uint64_t seed);

  Provenance provenance() const override { return Provenance::quantum_sampled(shots_, seed_); }
  double operator()(std::span<const double> x, std::span<const double> y) const override;
  std::unique_ptr<PairEvaluator> bind(const Matrix& rows, const Matrix& cols,
                                      MatrixKind kind) const override;

 private:
  FeatureMapSpec spec_;
  std::uint64_t shots_;
  std::uint64_t seed_;
};

class LinearKernel final : public Kernel {
 public:
  Provenance provenance() const override { return Provenance::classical_linear(); }
  double operator()(std::span<const double> x, std::span<const double> y) const override;
};

class RbfKernel final : public Kernel {
 public:
  explicit RbfKernel(double gamma);

  Provenance provenance() const override { return Provenance::classical_rbf(gamma_); }
  double operator()(std::span<const double> x, std::span<const double> y) const override;

 private:
  double gamma_;
};

enum class ClassicalKind { Linear, Rbf };

// Linear: dot(x, y). Rbf: exp(-gamma * |x - y|^2).
// Throws ShapeError on length mismatch and NumericError on non-finite input.
double classical_kernel(ClassicalKind kind, std::span<const double> x,
                        std::span<const double> y, double gamma = 0.0);

struct FillOptions {
  unsigned workers = 1;
};

// Square training Gram matrix. Only the upper triangle (with diagonal) is
// evaluated; the lower triangle is mirrored.
KernelMatrix gram_train(const Kernel& kernel, const Matrix& x_train, FillOptions options = {});

// Rectangular test-by-train matrix.
KernelMatrix gram_test(const Kernel& kernel, const Matrix& x_test, const Matrix& x_train,
                       FillOptions options = {});

// Nearest positive semidefinite matrix in Frobenius norm: negative
// eigenvalues of the symmetric training matrix are set to zero. Finite-shot
// estimates are generally indefinite and need this before SVM training.
KernelMatrix clip_to_psd(const KernelMatrix& k_train);

enum class ClassTag : std::uint8_t { Baseline = 0, Anomaly = 1 };

struct Projection2D {
  std::vector<std::array<double, 2>> points;
  std::vector<ClassTag> labels;
};

struct KernelPcaOptions {
  // Training sets up to this size use a dense symmetric eigensolver; larger
  // ones use Lanczos with full reorthogonalization for the two leading pairs.
  std::size_t dense_limit = 400;
};

// Kernel PCA: double-centres the training Gram matrix, takes its two leading
// eigenpairs and projects the centred test rows onto them (scaled by
// 1/sqrt(lambda)). Each eigenvector's largest-magnitude loading is made
// positive. Throws NumericError when fewer than two eigenvalues are positive.
Projection2D kernel_pca_2d(const KernelMatrix& k_test, const KernelMatrix& k_train,
                           std::span<const ClassTag> labels, KernelPcaOptions options = {});

// Binary cache format, little-endian:
//   "QKRN" | version u8 (=1) | kind u8 | provenance u8 [+ shots u64, seed u64
//   | gamma f64] | rows u64 | cols u64 | rows*cols f64 row-major.
void save_kernel(const KernelMatrix& matrix, const std::filesystem::path& path);
// Throws FormatError on any inconsistency; never returns a partial matrix.
KernelMatrix load_kernel(const std::filesystem::path& path);

}  // namespace qhsvm
