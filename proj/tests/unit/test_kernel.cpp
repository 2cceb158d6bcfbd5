#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "qhsvm/errors.hpp"
#include "qhsvm/kernel.hpp"
#include "qhsvm/rng.hpp"

namespace {

using qhsvm::FeatureMapSpec;
using qhsvm::Matrix;
using qhsvm::MatrixKind;
constexpr double kPi = std::numbers::pi;

Matrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  qhsvm::Rng rng(seed);
  Matrix m(n, d);
  for (auto& v : m.data()) v = rng.uniform() * kPi;
  return m;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("qhsvm_test_" + name);
}

TEST(GramTrain, SingleAndDuplicateRows) {
  const qhsvm::QuantumExactKernel k(FeatureMapSpec::dense(4));
  const auto one = qhsvm::gram_train(k, random_points(1, 4, 1));
  ASSERT_EQ(one.rows(), 1u);
  EXPECT_DOUBLE_EQ(one(0, 0), 1.0);

  Matrix two(2, 4);
  const auto p = random_points(1, 4, 2);
  for (std::size_t c = 0; c < 4; ++c) two(0, c) = two(1, c) = p(0, c);
  const auto g = qhsvm::gram_train(k, two);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(g(i, j), 1.0, 1e-12);
}

TEST(GramTrain, MatchesNaiveDoubleLoop) {
  const auto x = random_points(10, 8, 3);
  const qhsvm::QuantumExactKernel k(FeatureMapSpec::dense(8));
  const auto g = qhsvm::gram_train(k, x);
  EXPECT_EQ(g.kind, MatrixKind::TrainSymmetric);
  EXPECT_EQ(g.provenance, qhsvm::Provenance::quantum_exact());
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      std::vector<double> a(x.row(i).begin(), x.row(i).end());
      std::vector<double> b(x.row(j).begin(), x.row(j).end());
      EXPECT_NEAR(g(i, j), oracle::fidelity(a, b, true), 1e-10);
      EXPECT_EQ(g(i, j), g(j, i));
    }
  }
}

TEST(GramTest, Shapes) {
  const qhsvm::QuantumExactKernel k(FeatureMapSpec::dense(8));
  const auto train = random_points(10, 8, 4);
  const auto same = qhsvm::gram_test(k, train, train);
  const auto tr = qhsvm::gram_train(k, train);
  EXPECT_EQ(same.kind, MatrixKind::TestRectangular);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(same(i, j), tr(i, j), 1e-15);

  const Matrix row3 = train.select_rows(std::vector<std::size_t>{3});
  EXPECT_NEAR(qhsvm::gram_test(k, row3, train)(0, 3), 1.0, 1e-12);

  const auto big_train = random_points(20, 8, 5);
  const auto test = random_points(5, 8, 6);
  const auto g = qhsvm::gram_test(k, test, big_train);
  ASSERT_EQ(g.rows(), 5u);
  ASSERT_EQ(g.cols(), 20u);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 20; ++j)
      EXPECT_NEAR(g(i, j), k(test.row(i), big_train.row(j)), 1e-12);
}

TEST(GramTrain, WorkerCountDoesNotChangeBits) {
  const auto x = random_points(60, 8, 7);
  const qhsvm::QuantumExactKernel k(FeatureMapSpec::dense(8));
  const auto a = qhsvm::gram_train(k, x, {1});
  const auto b = qhsvm::gram_train(k, x, {3});
  EXPECT_EQ(a, b);

  const qhsvm::QuantumSampledKernel ks(FeatureMapSpec::dense(8), 256, 42);
  EXPECT_EQ(qhsvm::gram_train(ks, x, {1}), qhsvm::gram_train(ks, x, {4}));
  EXPECT_EQ(qhsvm::gram_test(ks, x, x, {1}), qhsvm::gram_test(ks, x, x, {2}));
}

TEST(GramTrain, SampledProvenanceAndRange) {
  const auto x = random_points(15, 6, 8);
  const qhsvm::QuantumSampledKernel ks(FeatureMapSpec::dense(6), 1024, 9);
  const auto g = qhsvm::gram_train(ks, x);
  EXPECT_EQ(g.provenance, qhsvm::Provenance::quantum_sampled(1024, 9));
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_EQ(g(i, i), 1.0);
    for (std::size_t j = 0; j < 15; ++j) {
      EXPECT_GE(g(i, j), 0.0);
      EXPECT_LE(g(i, j), 1.0);
    }
  }
}

TEST(ClassicalKernel, Values) {
  using qhsvm::ClassicalKind;
  const std::vector<double> a{0.3, -1.2}, e1{1, 0}, e2{0, 1}, z{0, 0}, o{1, 1};
  EXPECT_DOUBLE_EQ(qhsvm::classical_kernel(ClassicalKind::Rbf, a, a, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(qhsvm::classical_kernel(ClassicalKind::Linear, e1, e2), 0.0);
  EXPECT_NEAR(qhsvm::classical_kernel(ClassicalKind::Rbf, z, o, 0.5), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(qhsvm::classical_kernel(ClassicalKind::Linear, a, o), -0.9, 1e-15);
  EXPECT_THROW(qhsvm::classical_kernel(ClassicalKind::Linear, a, std::vector<double>{1}),
               qhsvm::ShapeError);
  EXPECT_THROW(qhsvm::classical_kernel(ClassicalKind::Rbf, a,
                                       std::vector<double>{NAN, 0}, 1.0),
               qhsvm::NumericError);
  EXPECT_THROW(qhsvm::RbfKernel(0.0), qhsvm::ArgumentError);
  EXPECT_EQ(qhsvm::RbfKernel(0.25).provenance(), qhsvm::Provenance::classical_rbf(0.25));
}

qhsvm::KernelMatrix make_matrix(MatrixKind kind, Matrix values) {
  return qhsvm::KernelMatrix{kind, qhsvm::Provenance::classical_linear(), std::move(values)};
}

TEST(KernelPca, OrthogonalStatesEquidistant) {
  Matrix id(3, 3);
  for (std::size_t i = 0; i < 3; ++i) id(i, i) = 1.0;
  const auto train = make_matrix(MatrixKind::TrainSymmetric, id);
  const auto test = make_matrix(MatrixKind::TestRectangular, id);
  const std::vector<qhsvm::ClassTag> labels(3, qhsvm::ClassTag::Baseline);
  const auto proj = qhsvm::kernel_pca_2d(test, train, labels);
  ASSERT_EQ(proj.points.size(), 3u);
  const auto dist = [&](int a, int b) {
    return std::hypot(proj.points[a][0] - proj.points[b][0], proj.points[a][1] - proj.points[b][1]);
  };
  // The centred identity is the projector onto the complement of the ones
  // vector, so the rows map to an equilateral triangle with side sqrt(2).
  EXPECT_NEAR(dist(0, 1), dist(1, 2), 1e-10);
  EXPECT_NEAR(dist(0, 1), dist(0, 2), 1e-10);
  EXPECT_NEAR(dist(0, 1), std::sqrt(2.0), 1e-10);
}

TEST(KernelPca, DuplicateTestRowsCoincide) {
  const auto x = random_points(12, 4, 10);
  const qhsvm::QuantumExactKernel k(FeatureMapSpec::dense(4));
  const auto train = qhsvm::gram_train(k, x);
  Matrix t(3, 4);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) t(r, c) = x(r == 2 ? 5 : 1, c);
  const auto test = qhsvm::gram_test(k, t, x);
  const std::vector<qhsvm::ClassTag> labels{qhsvm::ClassTag::Baseline, qhsvm::ClassTag::Baseline,
                                            qhsvm::ClassTag::Anomaly};
  const auto proj = qhsvm::kernel_pca_2d(test, train, labels);
  EXPECT_EQ(proj.points[0], proj.points[1]);
  EXPECT_EQ(proj.labels, labels);
}

TEST(KernelPca, MatchesJacobiOracleOnTrainingRows) {
  const auto x = random_points(25, 6, 11);
  const qhsvm::QuantumExactKernel k(FeatureMapSpec::dense(6));
  const auto train = qhsvm::gram_train(k, x);
  const auto test = qhsvm::gram_test(k, x, x);
  const std::vector<qhsvm::ClassTag> labels(25, qhsvm::ClassTag::Baseline);
  const auto proj = qhsvm::kernel_pca_2d(test, train, labels);

  const std::size_t n = 25;
  std::vector<double> row_mean(n, 0.0);
  double all_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row_mean[i] += train(i, j) / n;
    all_mean += row_mean[i] / n;
  }
  std::vector<double> centred(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      centred[i * n + j] = train(i, j) - row_mean[i] - row_mean[j] + all_mean;
  std::vector<double> vecs;
  const auto vals = oracle::jacobi_eigenvalues(centred, n, &vecs);
  for (int axis = 0; axis < 2; ++axis) {
    const std::size_t col = n - 1 - axis;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(vecs[i * n + col]) > std::abs(vecs[arg * n + col])) arg = i;
    const double sign = vecs[arg * n + col] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double want = sign * std::sqrt(vals[col]) * vecs[i * n + col];
      EXPECT_NEAR(proj.points[i][axis], want, 1e-8);
    }
  }
}

TEST(KernelPca, SeparatedClustersSplitOnFirstAxis) {
  qhsvm::Rng rng(12);
  const std::size_t per = 40;
  Matrix x(2 * per, 5);
  for (std::size_t r = 0; r < 2 * per; ++r)
    for (std::size_t c = 0; c < 5; ++c) x(r, c) = rng.normal() * 0.5 + (r < per ? -3.0 : 3.0);
  const qhsvm::LinearKernel k;
  const auto train = qhsvm::gram_train(k, x);
  const auto test = qhsvm::gram_test(k, x, x);
  std::vector<qhsvm::ClassTag> labels(2 * per, qhsvm::ClassTag::Baseline);
  const auto proj = qhsvm::kernel_pca_2d(test, train, labels);
  double m0 = 0, m1 = 0;
  for (std::size_t r = 0; r < per; ++r) m0 += proj.points[r][0] / per;
  for (std::size_t r = per; r < 2 * per; ++r) m1 += proj.points[r][0] / per;
  double spread = 0.0;
  for (std::size_t r = 0; r < 2 * per; ++r)
    spread = std::max(spread, std::abs(proj.points[r][0] - (r < per ? m0 : m1)));
  EXPECT_GT(std::abs(m0 - m1), spread);
}

TEST(KernelPca, LanczosAgreesWithDense) {
  const auto x = random_points(450, 6, 13);
  const qhsvm::QuantumExactKernel k(FeatureMapSpec::dense(6));
  const auto train = qhsvm::gram_train(k, x);
  const auto t = x.select_rows(std::vector<std::size_t>{0, 7, 99, 300});
  const auto test = qhsvm::gram_test(k, t, x);
  const std::vector<qhsvm::ClassTag> labels(4, qhsvm::ClassTag::Baseline);
  const auto lanczos = qhsvm::kernel_pca_2d(test, train, labels, {400});
  const auto dense = qhsvm::kernel_pca_2d(test, train, labels, {1000});
  for (std::size_t i = 0; i < 4; ++i)
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(lanczos.points[i][a], dense.points[i][a], 1e-7);
}

TEST(KernelPca, DegenerateRejected) {
  Matrix ones(3, 3, 1.0);
  const auto train = make_matrix(MatrixKind::TrainSymmetric, ones);
  const auto test = make_matrix(MatrixKind::TestRectangular, ones);
  const std::vector<qhsvm::ClassTag> labels(3, qhsvm::ClassTag::Baseline);
  EXPECT_THROW(qhsvm::kernel_pca_2d(test, train, labels), qhsvm::NumericError);
}

TEST(ClipToPsd, RemovesNegativeSpectrumOnly) {
  const auto x = random_points(30, 6, 15);
  const qhsvm::QuantumSampledKernel ks(FeatureMapSpec::dense(6), 64, 3);
  const auto raw = qhsvm::gram_train(ks, x);
  const auto fixed = qhsvm::clip_to_psd(raw);
  EXPECT_EQ(fixed.provenance, raw.provenance);
  const auto as_vec = [](const qhsvm::KernelMatrix& k) {
    return std::vector<double>(k.values.data().begin(), k.values.data().end());
  };
  EXPECT_LT(oracle::jacobi_eigenvalues(as_vec(raw), 30).front(), -1e-3);
  EXPECT_GE(oracle::jacobi_eigenvalues(as_vec(fixed), 30).front(), -1e-10);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 30; ++j) EXPECT_EQ(fixed(i, j), fixed(j, i));

  // Already PSD: unchanged up to rounding.
  const qhsvm::QuantumExactKernel ke(FeatureMapSpec::dense(6));
  const auto exact = qhsvm::gram_train(ke, x);
  const auto same = qhsvm::clip_to_psd(exact);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 30; ++j) EXPECT_NEAR(same(i, j), exact(i, j), 1e-9);
}

TEST(KernelCache, RoundTripBitwise) {
  qhsvm::Rng rng(14);
  Matrix m(100, 100);
  for (auto& v : m.data()) v = rng.normal();
  const qhsvm::KernelMatrix km{MatrixKind::TrainSymmetric, qhsvm::Provenance::quantum_exact(), m};
  const auto path = temp_path("roundtrip.qkrn");
  qhsvm::save_kernel(km, path);
  EXPECT_EQ(qhsvm::load_kernel(path), km);
  std::filesystem::remove(path);
}

TEST(KernelCache, ProvenanceRoundTrip) {
  for (const auto& prov : {qhsvm::Provenance::quantum_sampled(1000, 42),
                           qhsvm::Provenance::classical_rbf(0.125),
                           qhsvm::Provenance::classical_linear()}) {
    const qhsvm::KernelMatrix km{MatrixKind::TestRectangular, prov, random_points(3, 5, 1)};
    const auto path = temp_path("prov.qkrn");
    qhsvm::save_kernel(km, path);
    const auto back = qhsvm::load_kernel(path);
    EXPECT_EQ(back.provenance, prov);
    EXPECT_EQ(back, km);
    std::filesystem::remove(path);
  }
}

TEST(KernelCache, TruncatedOrCorruptRejected) {
  const qhsvm::KernelMatrix km{MatrixKind::TrainSymmetric, qhsvm::Provenance::quantum_exact(),
                               random_points(4, 4, 2)};
  const auto path = temp_path("trunc.qkrn");
  qhsvm::save_kernel(km, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 3);
  EXPECT_THROW(qhsvm::load_kernel(path), qhsvm::FormatError);

  qhsvm::save_kernel(km, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  EXPECT_THROW(qhsvm::load_kernel(path), qhsvm::FormatError);

  qhsvm::save_kernel(km, path);
  {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    f.put('\0');
  }
  EXPECT_THROW(qhsvm::load_kernel(path), qhsvm::FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(qhsvm::load_kernel(path), qhsvm::FormatError);
}

}  // namespace
