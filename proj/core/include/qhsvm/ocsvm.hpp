#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "qhsvm/kernel.hpp"

namespace qhsvm {

struct OcsvmConfig {
  double nu = 0.1;
  double tolerance = 1e-6;
  std::size_t max_iterations = 100000;
  // Full eigenvalue PSD check is done up to this many training points; larger
  // problems only get the symmetry and 2x2-minor checks.
  std::size_t psd_eigen_check_limit = 512;
};

// nu-one-class SVM on a precomputed kernel. Dual:
//   min 1/2 a^T K a   s.t.  0 <= a_i <= 1/(nu N),  sum a_i = 1
// Decision value for a test row s: sum_r a_r K(s, r) - rho.
struct OcsvmModel {
  double nu = 0.1;
  std::vector<double> alphas;
  double rho = 0.0;
  std::vector<std::size_t> support_indices;
  Provenance kernel_provenance;

  // Solver diagnostics; not persisted.
  double final_violation = 0.0;
  std::size_t iterations = 0;

  double upper_bound() const noexcept {
    return 1.0 / (nu * static_cast<double>(alphas.size()));
  }
};

enum class PredictedLabel { Normal, Anomaly };

struct Prediction {
  PredictedLabel label = PredictedLabel::Normal;
  double score = 0.0;
};

OcsvmModel fit(const KernelMatrix& k_train, const OcsvmConfig& config = {});

// 1/2 a^T K a.
double dual_objective(const KernelMatrix& k_train, const std::vector<double>& alphas);

std::vector<double> decision_scores(const OcsvmModel& model, const KernelMatrix& k_test);

// Normal iff score >= 0.
std::vector<Prediction> predict(const OcsvmModel& model, const KernelMatrix& k_test);

// "QOCS" | version u8 (=1) | N u64 | nu f64 | rho f64 | N x f64 alphas |
// provenance block as in the kernel cache.
void save_model(const OcsvmModel& model, const std::filesystem::path& path);
OcsvmModel load_model(const std::filesystem::path& path);

}  // namespace qhsvm
