#include "qhsvm/kernel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "binary_io.hpp"
#include "qhsvm/errors.hpp"
#include "qhsvm/rng.hpp"

namespace qhsvm {

namespace {

constexpr std::uint8_t kCacheVersion = 1;
constexpr double kNegativeClamp = 1e-12;

class GenericEvaluator final : public PairEvaluator {
 public:
  GenericEvaluator(const Kernel& kernel, const Matrix& rows, const Matrix& cols)
      : kernel_(kernel), rows_(rows), cols_(cols) {}

  double operator()(std::size_t i, std::size_t j) const override {
    return kernel_(rows_.row(i), cols_.row(j));
  }

 private:
  const Kernel& kernel_;
  const Matrix& rows_;
  const Matrix& cols_;
};

std::vector<StateVector> encode_rows(const FeatureMapSpec& spec, const Matrix& x) {
  std::vector<StateVector> states;
  states.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) states.push_back(encode(spec, x.row(r)).state);
  return states;
}

class ExactEvaluator final : public PairEvaluator {
 public:
  ExactEvaluator(std::vector<StateVector> rows, std::optional<std::vector<StateVector>> cols)
      : rows_(std::move(rows)), cols_(std::move(cols)) {}

  double operator()(std::size_t i, std::size_t j) const override {
    const auto& right = cols_ ? (*cols_)[j] : rows_[j];
    return state_fidelity(rows_[i], right);
  }

 private:
  std::vector<StateVector> rows_;
  std::optional<std::vector<StateVector>> cols_;  // empty when cols == rows
};

class SampledEvaluator final : public PairEvaluator {
 public:
  SampledEvaluator(FeatureMapSpec spec, const Matrix& rows, const Matrix& cols,
                   std::uint64_t shots, std::uint64_t seed)
      : spec_(spec), rows_(rows), cols_(cols), shots_(shots), seed_(seed) {}

  double operator()(std::size_t i, std::size_t j) const override {
    return fidelity_sampled(spec_, rows_.row(i), cols_.row(j), shots_, derive_seed(seed_, i, j));
  }

 private:
  FeatureMapSpec spec_;
  const Matrix& rows_;
  const Matrix& cols_;
  std::uint64_t shots_;
  std::uint64_t seed_;
};

void check_same_width(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("kernel inputs have lengths " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  }
}

// Fills out(i, j) for the pairs produced by `columns_for(i)`, spreading rows
// across workers. Each entry depends only on (i, j); the first error in
// row-major order is rethrown.
template <typename ColumnRange>
void parallel_fill(Matrix& out, const PairEvaluator& eval, const Provenance& provenance,
                   unsigned workers, ColumnRange columns_for) {
  const std::size_t rows = out.rows();
  std::atomic<std::size_t> next_row{0};
  std::mutex error_mutex;
  std::optional<std::pair<std::size_t, std::size_t>> error_at;
  std::exception_ptr error;

  auto record = [&](std::size_t i, std::size_t j, std::exception_ptr e) {
    std::scoped_lock lock(error_mutex);
    if (!error_at || std::pair{i, j} < *error_at) {
      error_at = {i, j};
      error = std::move(e);
    }
  };

  auto work = [&] {
    for (std::size_t i = next_row++; i < rows; i = next_row++) {
      const auto [begin, end] = columns_for(i);
      for (std::size_t j = begin; j < end; ++j) {
        try {
          double v = eval(i, j);
          if (!std::isfinite(v)) {
            throw NumericError("kernel value at (" + std::to_string(i) + ", " +
                               std::to_string(j) + ") is not finite");
          }
          if (provenance.is_bounded() && v < 0.0) {
            if (v < -kNegativeClamp) {
              throw NumericError("kernel value " + std::to_string(v) + " at (" +
                                 std::to_string(i) + ", " + std::to_string(j) +
                                 ") is negative");
            }
            v = 0.0;
          }
          out(i, j) = v;
        } catch (...) {
          record(i, j, std::current_exception());
          break;
        }
      }
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(rows)));
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

struct Eigenpairs {
  std::array<double, 2> values{};
  Eigen::MatrixXd vectors;  // n x 2
};

// Two largest eigenpairs of a symmetric matrix, descending.
Eigenpairs leading_eigenpairs(const Eigen::MatrixXd& a, std::size_t dense_limit) {
  const Eigen::Index n = a.rows();
  Eigenpairs out;
  out.vectors = Eigen::MatrixXd::Zero(n, 2);
  if (n <= static_cast<Eigen::Index>(dense_limit) || n < 4) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, n); ++k) {
      out.values[static_cast<std::size_t>(k)] = solver.eigenvalues()(n - 1 - k);
      out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
    }
    return out;
  }

  Rng rng(0x6b70636100000001ULL);
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i) start(i) = rng.uniform() - 0.5;
  start.normalize();
  const double norm_scale = std::max(1.0, a.cwiseAbs().maxCoeff());

  for (Eigen::Index steps = std::min<Eigen::Index>(n, 48);; steps = std::min(n, 2 * steps)) {
    Eigen::MatrixXd q(n, steps + 1);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(steps);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(steps);
    q.col(0) = start;
    Eigen::Index m = steps;
    for (Eigen::Index j = 0; j < steps; ++j) {
      Eigen::VectorXd w = a * q.col(j);
      alpha(j) = q.col(j).dot(w);
      // Full reorthogonalization, applied twice.
      for (int pass = 0; pass < 2; ++pass) {
        w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
      }
      beta(j) = w.norm();
      if (beta(j) < 1e-13 * norm_scale) {
        m = j + 1;
        break;
      }
      q.col(j + 1) = w / beta(j);
    }

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      t(j, j) = alpha(j);
      if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t);
    bool converged = true;
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, m); ++k) {
      const Eigen::VectorXd s = small.eigenvectors().col(m - 1 - k);
      out.values[static_cast<std::size_t>(k)] = small.eigenvalues()(m - 1 - k);
      out.vectors.col(k) = q.leftCols(m) * s;
      const double residual = std::abs(beta(m - 1) * s(m - 1));
      if (m < n && residual > 1e-11 * std::max(1.0, std::abs(small.eigenvalues()(m - 1)))) {
        converged = false;
      }
    }
    if (m < steps) converged = true;  // invariant subspace found exactly
    if (converged || steps == n) return out;
  }
}

}  // namespace

std::string Provenance::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::QuantumExact:
      os << "QuantumExact";
      break;
    case Kind::QuantumSampled:
      os << "QuantumSampled(shots=" << shots << ", seed=" << seed << ")";
      break;
    case Kind::ClassicalLinear:
      os << "ClassicalLinear";
      break;
    case Kind::ClassicalRbf:
      os.precision(17);
      os << "ClassicalRbf(gamma=" << gamma << ")";
      break;
  }
  return os.str();
}

std::unique_ptr<PairEvaluator> Kernel::bind(const Matrix& rows, const Matrix& cols,
                                            MatrixKind) const {
  return std::make_unique<GenericEvaluator>(*this, rows, cols);
}

double QuantumExactKernel::operator()(std::span<const double> x,
                                      std::span<const double> y) const {
  return fidelity_exact(spec_, x, y);
}

std::unique_ptr<PairEvaluator> QuantumExactKernel::bind(const Matrix& rows, const Matrix& cols,
                                                        MatrixKind kind) const {
  auto row_states = encode_rows(spec_, rows);
  if (kind == MatrixKind::TrainSymmetric && &rows == &cols) {
    return std::make_unique<ExactEvaluator>(std::move(row_states), std::nullopt);
  }
  return std::make_unique<ExactEvaluator>(std::move(row_states), encode_rows(spec_, cols));
}

QuantumSampledKernel::QuantumSampledKernel(FeatureMapSpec spec, std::uint64_t shots,
                                           std::uint64_t seed)
    : spec_(spec), shots_(shots), seed_(seed) {
  if (shots == 0) throw ArgumentError("shots must be >= 1");
}

double QuantumSampledKernel::operator()(std::span<const double> x,
                                        std::span<const double> y) const {
  return fidelity_sampled(spec_, x, y, shots_, seed_);
}

std::unique_ptr<PairEvaluator> QuantumSampledKernel::bind(const Matrix& rows, const Matrix& cols,
                                                          MatrixKind kind) const {
  const std::uint64_t matrix_seed = derive_seed(seed_, static_cast<std::uint64_t>(kind) + 1);
  return std::make_unique<SampledEvaluator>(spec_, rows, cols, shots_, matrix_seed);
}

double LinearKernel::operator()(std::span<const double> x, std::span<const double> y) const {
  return classical_kernel(ClassicalKind::Linear, x, y);
}

RbfKernel::RbfKernel(double gamma) : gamma_(gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ArgumentError("RBF gamma must be positive and finite");
  }
}

double RbfKernel::operator()(std::span<const double> x, std::span<const double> y) const {
  return classical_kernel(ClassicalKind::Rbf, x, y, gamma_);
}

double classical_kernel(ClassicalKind kind, std::span<const double> x, std::span<const double> y,
                        double gamma) {
  check_same_width(x, y);
  double acc = 0.0;
  if (kind == ClassicalKind::Linear) {
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      acc += d * d;
    }
    acc = std::exp(-gamma * acc);
  }
  if (!std::isfinite(acc)) throw NumericError("classical kernel produced a non-finite value");
  return acc;
}

KernelMatrix gram_train(const Kernel& kernel, const Matrix& x_train, FillOptions options) {
  if (x_train.rows() == 0) throw ShapeError("training matrix is empty");
  const std::size_t n = x_train.rows();
  const auto eval = kernel.bind(x_train, x_train, MatrixKind::TrainSymmetric);
  KernelMatrix k{MatrixKind::TrainSymmetric, kernel.provenance(), Matrix(n, n)};
  parallel_fill(k.values, *eval, k.provenance, options.workers,
                [n](std::size_t i) { return std::pair{i, n}; });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) k.values(i, j) = k.values(j, i);
  }
  return k;
}

KernelMatrix gram_test(const Kernel& kernel, const Matrix& x_test, const Matrix& x_train,
                       FillOptions options) {
  if (x_test.cols() != x_train.cols()) {
    throw ShapeError("test rows have " + std::to_string(x_test.cols()) +
                     " features, training rows have " + std::to_string(x_train.cols()));
  }
  const std::size_t m = x_test.rows();
  const std::size_t n = x_train.rows();
  const auto eval = kernel.bind(x_test, x_train, MatrixKind::TestRectangular);
  KernelMatrix k{MatrixKind::TestRectangular, kernel.provenance(), Matrix(m, n)};
  if (m > 0 && n > 0) {
    parallel_fill(k.values, *eval, k.provenance, options.workers,
                  [n](std::size_t) { return std::pair<std::size_t, std::size_t>{0, n}; });
  }
  return k;
}

KernelMatrix clip_to_psd(const KernelMatrix& k_train) {
  if (k_train.kind != MatrixKind::TrainSymmetric || k_train.rows() != k_train.cols()) {
    throw ShapeError("PSD projection needs a square training Gram matrix");
  }
  const auto n = static_cast<Eigen::Index>(k_train.rows());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = k_train(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");
  const Eigen::VectorXd clipped = solver.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd& v = solver.eigenvectors();
  const Eigen::MatrixXd b = v * clipped.asDiagonal() * v.transpose();

  KernelMatrix out = k_train;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double value = i == j ? b(i, i) : 0.5 * (b(i, j) + b(j, i));
      out.values(i, j) = value;
      out.values(j, i) = value;
    }
  }
  return out;
}

Projection2D kernel_pca_2d(const KernelMatrix& k_test, const KernelMatrix& k_train,
                           std::span<const ClassTag> labels, KernelPcaOptions options) {
  if (k_train.kind != MatrixKind::TrainSymmetric || k_train.rows() != k_train.cols()) {
    throw ShapeError("kernel PCA needs a square training Gram matrix");
  }
  const auto n = static_cast<Eigen::Index>(k_train.rows());
  const auto m = static_cast<Eigen::Index>(k_test.rows());
  if (static_cast<Eigen::Index>(k_test.cols()) != n) {
    throw ShapeError("test kernel has " + std::to_string(k_test.cols()) + " columns, expected " +
                     std::to_string(n));
  }
  if (labels.size() != k_test.rows()) {
    throw ShapeError("label count does not match test kernel rows");
  }

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> kt(k_train.values.data().data(), n, n);
  const Eigen::Map<const RowMajor> ks(k_test.values.data().data(), m, n);

  const Eigen::VectorXd train_col_mean = kt.colwise().mean().transpose();
  const double train_mean = train_col_mean.mean();
  Eigen::MatrixXd centered = kt;
  centered.rowwise() -= train_col_mean.transpose();
  centered.colwise() -= train_col_mean;
  centered.array() += train_mean;

  const auto [evals, evecs] = leading_eigenpairs(centered, options.dense_limit);
  const double scale = std::max(1.0, std::abs(evals[0]));
  if (n < 2 || evals[0] <= 1e-12 * scale || evals[1] <= 1e-12 * scale) {
    throw NumericError("kernel PCA needs two positive eigenvalues of the centred Gram matrix");
  }

  Eigen::MatrixXd axes(n, 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd v = evecs.col(k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(k) = v / std::sqrt(evals[k]);
  }

  Eigen::MatrixXd test_centered = ks;
  const Eigen::VectorXd test_row_mean = ks.rowwise().mean();
  test_centered.rowwise() -= train_col_mean.transpose();
  test_centered.colwise() -= test_row_mean;
  test_centered.array() += train_mean;
  const Eigen::MatrixXd coords = test_centered * axes;

  Projection2D out;
  out.points.resize(static_cast<std::size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r) {
    out.points[static_cast<std::size_t>(r)] = {coords(r, 0), coords(r, 1)};
  }
  out.labels.assign(labels.begin(), labels.end());
  return out;
}

void save_kernel(const KernelMatrix& matrix, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.bytes("QKRN", 4);
  w.u8(kCacheVersion);
  w.u8(static_cast<std::uint8_t>(matrix.kind));
  w.provenance(matrix.provenance);
  w.u64(matrix.rows());
  w.u64(matrix.cols());
  for (double v : matrix.values.data()) w.f64(v);
  w.write_file(path);
}

KernelMatrix load_kernel(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("QKRN");
  const auto version = r.u8();
  if (version != kCacheVersion) r.fail("unsupported version " + std::to_string(version));
  const auto kind = r.u8();
  if (kind > 1) r.fail("unknown matrix kind " + std::to_string(kind));
  const auto provenance = r.provenance();
  const auto rows = r.u64();
  const auto cols = r.u64();
  if (cols != 0 && rows > std::numeric_limits<std::uint64_t>::max() / 8 / cols) {
    r.fail("dimension overflow");
  }
  if (rows * cols * 8 != r.remaining()) {
    r.fail("payload holds " + std::to_string(r.remaining()) + " bytes, header declares " +
           std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (kind == 0 && rows != cols) r.fail("symmetric matrix is not square");
  std::vector<double> values(rows * cols);
  r.bytes(values.data(), values.size() * 8);
  r.expect_end();
  return {static_cast<MatrixKind>(kind), provenance, Matrix(rows, cols, std::move(values))};
}

}  // namespace qhsvm
