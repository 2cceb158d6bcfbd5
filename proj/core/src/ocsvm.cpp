#include "qhsvm/ocsvm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "qhsvm/errors.hpp"

namespace qhsvm {

namespace {

constexpr std::uint8_t kModelVersion = 1;
constexpr double kTau = 1e-12;
constexpr double kPsdTolerance = 1e-8;

void check_kernel(const KernelMatrix& k, const OcsvmConfig& config) {
  const std::size_t n = k.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(k(i, i)));
  const double tol = kPsdTolerance * std::max(1.0, max_diag);

  for (std::size_t i = 0; i < n; ++i) {
    if (k(i, i) < -tol) {
      throw NumericError("kernel diagonal entry " + std::to_string(i) + " is negative");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double kij = k(i, j);
      if (!std::isfinite(kij) || std::abs(kij - k(j, i)) > tol) {
        throw NumericError("kernel is not symmetric at (" + std::to_string(i) + ", " +
                           std::to_string(j) + ")");
      }
      if (kij * kij > k(i, i) * k(j, j) + tol) {
        throw NumericError("kernel is not positive semidefinite: 2x2 minor at (" +
                           std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }

  if (n <= config.psd_eigen_check_limit) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto dim = static_cast<Eigen::Index>(n);
    const Eigen::Map<const RowMajor> km(k.values.data().data(), dim, dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(km, Eigen::EigenvaluesOnly);
    const double min_eval = solver.eigenvalues()(0);
    if (min_eval < -tol) {
      throw NumericError("kernel is not positive semidefinite: minimum eigenvalue " +
                         std::to_string(min_eval));
    }
  }
}

class Solver {
 public:
  Solver(const KernelMatrix& k, double nu) : k_(k), n_(k.rows()) {
    const double nu_n = nu * static_cast<double>(n_);
    upper_ = 1.0 / nu_n;
    // Uniform start: feasible for every nu in (0, 1] and symmetric under row permutations.
    alpha_.assign(n_, 1.0 / static_cast<double>(n_));
    recompute_gradient();
  }

  void recompute_gradient() {
    grad_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      if (alpha_[j] == 0.0) continue;
      for (std::size_t i = 0; i < n_; ++i) grad_[i] += k_(i, j) * alpha_[j];
    }
  }

  // max_{a>0} G - min_{a<C} G; non-positive at the optimum.
  double violation() const {
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n_; ++t) {
      if (alpha_[t] > 0.0) up = std::max(up, grad_[t]);
      if (alpha_[t] < upper_) low = std::min(low, grad_[t]);
    }
    if (!std::isfinite(up) || !std::isfinite(low)) return 0.0;
    return up - low;
  }

  // One SMO step with second-order working-set selection. Returns false when
  // the KKT violation is below tolerance.
  bool step(double tolerance) {
    std::size_t i = n_;
    double g_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n_; ++t) {
      if (alpha_[t] < upper_ && grad_[t] < g_min) {
        g_min = grad_[t];
        i = t;
      }
    }
    if (i == n_) return false;

    std::size_t j = n_;
    double g_max = -std::numeric_limits<double>::infinity();
    double best_gain = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n_; ++t) {
      if (!(alpha_[t] > 0.0)) continue;
      g_max = std::max(g_max, grad_[t]);
      const double diff = grad_[t] - g_min;
      if (diff <= 0.0) continue;
      double quad = k_(i, i) + k_(t, t) - 2.0 * k_(i, t);
      if (quad <= 0.0) quad = kTau;
      const double gain = -(diff * diff) / quad;
      if (gain < best_gain) {
        best_gain = gain;
        j = t;
      }
    }
    if (g_max - g_min < tolerance || j == n_) return false;

    double quad = k_(i, i) + k_(j, j) - 2.0 * k_(i, j);
    if (quad <= 0.0) quad = kTau;
    double shift = (grad_[j] - grad_[i]) / quad;
    const double room_i = upper_ - alpha_[i];
    const double room_j = alpha_[j];
    bool i_at_bound = false;
    bool j_at_bound = false;
    if (shift >= room_i) {
      shift = room_i;
      i_at_bound = true;
    }
    if (shift >= room_j) {
      shift = room_j;
      j_at_bound = true;
      i_at_bound = shift == room_i;
    }
    alpha_[i] = i_at_bound ? upper_ : alpha_[i] + shift;
    alpha_[j] = j_at_bound ? 0.0 : alpha_[j] - shift;
    for (std::size_t t = 0; t < n_; ++t) grad_[t] += shift * (k_(t, i) - k_(t, j));
    return true;
  }

  double offset() const {
    double free_sum = 0.0;
    std::size_t free_count = 0;
    double at_zero_min = std::numeric_limits<double>::infinity();
    double at_upper_max = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n_; ++t) {
      if (alpha_[t] == 0.0) {
        at_zero_min = std::min(at_zero_min, grad_[t]);
      } else if (alpha_[t] == upper_) {
        at_upper_max = std::max(at_upper_max, grad_[t]);
      } else {
        free_sum += grad_[t];
        ++free_count;
      }
    }
    if (free_count > 0) return free_sum / static_cast<double>(free_count);
    // KKT bracket rho between bound-support and non-support decision values.
    if (std::isfinite(at_zero_min) && std::isfinite(at_upper_max)) {
      return (at_zero_min + at_upper_max) / 2.0;
    }
    return std::isfinite(at_upper_max) ? at_upper_max : at_zero_min;
  }

  const std::vector<double>& alphas() const noexcept { return alpha_; }

 private:
  const KernelMatrix& k_;
  std::size_t n_;
  double upper_ = 0.0;
  std::vector<double> alpha_;
  std::vector<double> grad_;
};

}  // namespace

OcsvmModel fit(const KernelMatrix& k_train, const OcsvmConfig& config) {
  if (!(config.nu > 0.0 && config.nu <= 1.0)) {
    throw ArgumentError("nu must lie in (0, 1], got " + std::to_string(config.nu));
  }
  if (!(config.tolerance > 0.0)) throw ArgumentError("tolerance must be positive");
  if (k_train.kind != MatrixKind::TrainSymmetric || k_train.rows() != k_train.cols()) {
    throw ShapeError("one-class SVM needs a square training Gram matrix");
  }
  const std::size_t n = k_train.rows();
  if (n < 2) throw ArgumentError("one-class SVM needs at least 2 training points");
  check_kernel(k_train, config);

  OcsvmModel model;
  model.nu = config.nu;
  model.kernel_provenance = k_train.provenance;
  Solver solver(k_train, config.nu);

  std::size_t iter = 0;
  double violation = 0.0;
  for (;;) {
    while (iter < config.max_iterations && solver.step(config.tolerance)) ++iter;
    // Refresh the incrementally updated gradient before trusting convergence.
    solver.recompute_gradient();
    violation = solver.violation();
    if (violation < config.tolerance) break;
    if (iter >= config.max_iterations) {
      throw ConvergenceError("one-class SVM did not converge in " +
                                 std::to_string(config.max_iterations) +
                                 " iterations; KKT violation " + std::to_string(violation),
                             violation);
    }
  }

  model.alphas = solver.alphas();
  model.rho = solver.offset();
  model.final_violation = violation;
  model.iterations = iter;
  for (std::size_t i = 0; i < n; ++i) {
    if (model.alphas[i] > 0.0) model.support_indices.push_back(i);
  }
  return model;
}

double dual_objective(const KernelMatrix& k_train, const std::vector<double>& alphas) {
  if (alphas.size() != k_train.rows()) throw ShapeError("alpha count does not match kernel");
  double total = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < alphas.size(); ++j) row += k_train(i, j) * alphas[j];
    total += alphas[i] * row;
  }
  return 0.5 * total;
}

std::vector<double> decision_scores(const OcsvmModel& model, const KernelMatrix& k_test) {
  if (k_test.cols() != model.alphas.size()) {
    throw ShapeError("test kernel has " + std::to_string(k_test.cols()) +
                     " columns, model has " + std::to_string(model.alphas.size()) +
                     " training points");
  }
  std::vector<double> scores(k_test.rows());
  for (std::size_t s = 0; s < k_test.rows(); ++s) {
    double acc = 0.0;
    for (std::size_t r : model.support_indices) acc += model.alphas[r] * k_test(s, r);
    scores[s] = acc - model.rho;
  }
  return scores;
}

std::vector<Prediction> predict(const OcsvmModel& model, const KernelMatrix& k_test) {
  const auto scores = decision_scores(model, k_test);
  std::vector<Prediction> out;
  out.reserve(scores.size());
  for (double s : scores) {
    out.push_back({s >= 0.0 ? PredictedLabel::Normal : PredictedLabel::Anomaly, s});
  }
  return out;
}

void save_model(const OcsvmModel& model, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.bytes("QOCS", 4);
  w.u8(kModelVersion);
  w.u64(model.alphas.size());
  w.f64(model.nu);
  w.f64(model.rho);
  for (double a : model.alphas) w.f64(a);
  w.provenance(model.kernel_provenance);
  w.write_file(path);
}

OcsvmModel load_model(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("QOCS");
  const auto version = r.u8();
  if (version != kModelVersion) r.fail("unsupported version " + std::to_string(version));
  const auto n = r.u64();
  if (n > r.remaining() / 8) r.fail("declared " + std::to_string(n) + " alphas exceed file size");
  OcsvmModel model;
  model.nu = r.f64();
  model.rho = r.f64();
  model.alphas.resize(n);
  r.bytes(model.alphas.data(), n * 8);
  model.kernel_provenance = r.provenance();
  r.expect_end();
  if (!(model.nu > 0.0 && model.nu <= 1.0)) r.fail("nu outside (0, 1]");
  for (std::size_t i = 0; i < n; ++i) {
    if (model.alphas[i] > 0.0) model.support_indices.push_back(i);
  }
  return model;
}

}  // namespace qhsvm
