#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace fdr::ml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Feature rows with their targets. Targets are FDR values in [0, 1] in
/// the pipeline, but the models accept any finite target.
struct Dataset {
  Matrix X;
  Vector y;
  std::vector<std::string> ids;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Throws DimensionMismatch / InvalidArgument on empty or non-finite data.
  void validate() const;
};

/// Per-column centring and unit-variance scaling, fitted on training rows.
/// Constant columns map to 0.
class Standardiser {
 public:
  Standardiser() = default;
  Standardiser(Vector mean, Vector scale) : mean_(std::move(mean)), scale_(std::move(scale)) {}

  static Standardiser fit(const Matrix& X);
  Matrix transform(const Matrix& X) const;

  const Vector& mean() const { return mean_; }
  /// Population standard deviation; 0 marks a constant column.
  const Vector& scale() const { return scale_; }

 private:
  Vector mean_;
  Vector scale_;
};

enum class ModelKind { Ols, Knn, Tree, KernelRidge, Svr };
enum class DistanceMetric { Manhattan, Euclidean };
enum class KernelKind { Linear, Polynomial, Rbf, Sigmoid };

std::string_view model_kind_name(ModelKind kind);
std::optional<ModelKind> model_kind_from_name(std::string_view name);
std::string_view metric_name(DistanceMetric metric);
std::optional<DistanceMetric> metric_from_name(std::string_view name);
std::string_view kernel_kind_name(KernelKind kind);
std::optional<KernelKind> kernel_kind_from_name(std::string_view name);

struct KernelParams {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;
  int degree = 3;
  double coef0 = 0.0;  // independent term r

  bool operator==(const KernelParams&) const = default;
};

/// linear: x.z; polynomial: (gamma x.z + r)^d; rbf: exp(-gamma |x - z|^2);
/// sigmoid: tanh(gamma x.z + r).
class Kernel {
 public:
  /// Throws InvalidHyperparam for gamma <= 0 or degree < 1.
  explicit Kernel(const KernelParams& params);

  double operator()(std::span<const double> x, std::span<const double> z) const {
    return static_cast<double>(extended(x, z));
  }
  /// Evaluation in extended precision, used where kernel sums cancel.
  long double extended(std::span<const double> x, std::span<const double> z) const;
  const KernelParams& params() const { return params_; }

 private:
  KernelParams params_;
};

/// Gram matrix K_ij = kernel(row_i(A), row_j(B)).
Matrix gram(const Kernel& kernel, const Matrix& A, const Matrix& B);

struct Hyperparams {
  ModelKind kind = ModelKind::Ols;
  // k-NN
  int k = 5;
  DistanceMetric metric = DistanceMetric::Euclidean;
  // tree limits, 0 = unlimited
  int max_depth = 0;
  int max_leaf_nodes = 0;
  int min_samples_leaf = 0;
  // kernel ridge
  double alpha = 1.0;
  // kernel ridge and SVR
  KernelParams kernel;
  // SVR
  double C = 1.0;
  double epsilon = 0.1;

  /// Throws InvalidHyperparam for out-of-domain values of the fields the
  /// model kind uses.
  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

struct LinearParams {
  Vector weights;
  double bias = 0.0;
};

struct NeighborParams {
  Matrix X;  // standardised training rows
  Vector y;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::size_t samples = 0;

  bool is_leaf() const { return feature < 0; }
};

struct TreeParams {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_count() const;
  std::size_t depth() const;
};

/// f(x) = sum_i (coef_i + coef_low_i) kernel(support_i, x) + bias, summed
/// in extended precision. coef_low holds the rounding remainder of
/// coefficients solved in extended precision and may be empty.
struct KernelExpansion {
  Matrix support;
  Vector coef;
  Vector coef_low;
  double bias = 0.0;
  std::vector<std::size_t> support_rows;  // training row of each support vector
};

struct SolverReport {
  bool converged = true;
  double kkt_violation = 0.0;
  std::size_t updates = 0;
  /// Dual objective after every pair update; only filled on request.
  std::vector<double> objective_trace;
};

class TrainedModel {
 public:
  using Params = std::variant<LinearParams, NeighborParams, TreeParams, KernelExpansion>;

  TrainedModel(Hyperparams hp, Standardiser standardiser, Params params,
               std::optional<SolverReport> report = std::nullopt);

  ModelKind kind() const { return hp_.kind; }
  const Hyperparams& hyperparams() const { return hp_; }
  const Standardiser& standardiser() const { return standardiser_; }
  const Params& params() const { return params_; }
  const std::optional<SolverReport>& solver_report() const { return report_; }

  /// Raw predictor output for raw (unstandardised) feature rows.
  Vector predict_unclipped(const Matrix& X) const;
  /// predict_unclipped clipped to [0, 1].
  Vector predict(const Matrix& X) const;

 private:
  Hyperparams hp_;
  Standardiser standardiser_;
  Params params_;
  std::optional<SolverReport> report_;
};

TrainedModel fit_ols(const Dataset& train);
/// Throws KTooLarge when k exceeds the training rows.
TrainedModel fit_knn(const Dataset& train, const Hyperparams& hp);
TrainedModel fit_tree(const Dataset& train, const Hyperparams& hp);
/// Throws SingularSystem if K + alpha I cannot be factorised.
TrainedModel fit_kernel_ridge(const Dataset& train, const Hyperparams& hp);

struct SvrOptions {
  double tolerance = 1e-3;
  /// 0 means 10 n^2 pair updates.
  std::size_t max_updates = 0;
  bool record_objective = false;
};

/// Epsilon-SVR by SMO. A run that hits the update cap still returns a
/// model, with solver_report()->converged == false.
TrainedModel fit_svr(const Dataset& train, const Hyperparams& hp, const SvrOptions& options = {});

/// Dispatches on hp.kind.
TrainedModel fit(const Dataset& train, const Hyperparams& hp);

struct Prediction {
  Vector values;  // clipped to [0, 1]
  double seconds = 0.0;
};

Prediction predict(const TrainedModel& model, const Matrix& X);

}  // namespace fdr::ml
