#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "fdr/error.hpp"
#include "fdr/regression.hpp"
#include "ml/internal.hpp"

namespace fdr::ml {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<Enum, std::string_view>, N>& table, std::string_view name) {
  for (const auto& [e, n] : table) {
    if (n == name) return e;
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum e) {
  for (const auto& [v, n] : table) {
    if (v == e) return n;
  }
  return "?";
}

constexpr std::array<std::pair<ModelKind, std::string_view>, 5> kModelNames{{
    {ModelKind::Ols, "ols"},
    {ModelKind::Knn, "knn"},
    {ModelKind::Tree, "tree"},
    {ModelKind::KernelRidge, "kernel_ridge"},
    {ModelKind::Svr, "svr"},
}};
constexpr std::array<std::pair<DistanceMetric, std::string_view>, 2> kMetricNames{{
    {DistanceMetric::Manhattan, "manhattan"},
    {DistanceMetric::Euclidean, "euclidean"},
}};
constexpr std::array<std::pair<KernelKind, std::string_view>, 4> kKernelNames{{
    {KernelKind::Linear, "linear"},
    {KernelKind::Polynomial, "polynomial"},
    {KernelKind::Rbf, "rbf"},
    {KernelKind::Sigmoid, "sigmoid"},
}};

void invalid(const std::string& what) { throw Error(Errc::InvalidHyperparam, what); }

}  // namespace

std::string_view model_kind_name(ModelKind kind) { return name_of(kModelNames, kind); }
std::optional<ModelKind> model_kind_from_name(std::string_view name) { return lookup(kModelNames, name); }
std::string_view metric_name(DistanceMetric metric) { return name_of(kMetricNames, metric); }
std::optional<DistanceMetric> metric_from_name(std::string_view name) { return lookup(kMetricNames, name); }
std::string_view kernel_kind_name(KernelKind kind) { return name_of(kKernelNames, kind); }
std::optional<KernelKind> kernel_kind_from_name(std::string_view name) { return lookup(kKernelNames, name); }

// ---------------------------------------------------------------------------

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(r);
    out.y(static_cast<Eigen::Index>(i)) = y(r);
    if (!ids.empty()) out.ids.push_back(ids[rows[i]]);
  }
  return out;
}

void Dataset::validate() const {
  if (X.rows() == 0) throw Error(Errc::TooFewRows, "dataset has no rows");
  if (X.rows() != y.size()) throw Error(Errc::DimensionMismatch, "feature rows and targets differ in count");
  if (!ids.empty() && ids.size() != rows()) throw Error(Errc::DimensionMismatch, "row ids do not match rows");
  if (!X.allFinite() || !y.allFinite()) throw Error(Errc::InvalidArgument, "dataset contains non-finite values");
}

// ---------------------------------------------------------------------------

Standardiser Standardiser::fit(const Matrix& X) {
  const Eigen::Index n = X.rows(), d = X.cols();
  Vector mean = Vector::Zero(d), scale = Vector::Zero(d);
  if (n == 0) return {mean, scale};
  // Plain sequential sums keep the result independent of SIMD width.
  for (Eigen::Index j = 0; j < d; ++j) {
    double lo = X(0, j), hi = X(0, j), sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sum += X(i, j);
      lo = std::min(lo, X(i, j));
      hi = std::max(hi, X(i, j));
    }
    const double mu = sum / static_cast<double>(n);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ss += (X(i, j) - mu) * (X(i, j) - mu);
    mean(j) = mu;
    scale(j) = lo == hi ? 0.0 : std::sqrt(ss / static_cast<double>(n));
  }
  return {mean, scale};
}

Matrix Standardiser::transform(const Matrix& X) const {
  if (X.cols() != mean_.size()) throw Error(Errc::DimensionMismatch, "feature count differs from the fitted data");
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out(i, j) = scale_(j) > 0.0 ? (X(i, j) - mean_(j)) / scale_(j) : 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Kernel::Kernel(const KernelParams& params) : params_(params) {
  if (!(params.gamma > 0.0)) invalid("kernel gamma must be > 0");
  if (params.degree < 1) invalid("polynomial degree must be >= 1");
}

long double Kernel::extended(std::span<const double> x, std::span<const double> z) const {
  if (params_.kind == KernelKind::Rbf) {
    long double d2 = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const long double d = static_cast<long double>(x[i]) - z[i];
      d2 += d * d;
    }
    return std::exp(-params_.gamma * d2);
  }
  long double dot = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) dot += static_cast<long double>(x[i]) * z[i];
  switch (params_.kind) {
    case KernelKind::Linear: return dot;
    case KernelKind::Polynomial: {
      const long double base = params_.gamma * dot + params_.coef0;
      long double out = 1.0L;
      for (int i = 0; i < params_.degree; ++i) out *= base;
      return out;
    }
    case KernelKind::Sigmoid: return std::tanh(params_.gamma * dot + params_.coef0);
    case KernelKind::Rbf: break;
  }
  return 0.0L;
}

Matrix gram(const Kernel& kernel, const Matrix& A, const Matrix& B) {
  // Row-major copies give contiguous rows for the kernel.
  const RowMatrix a = A, b = B;
  Matrix K(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) K(i, j) = kernel(row_span(a, i), row_span(b, j));
  }
  return K;
}

// ---------------------------------------------------------------------------

void Hyperparams::validate() const {
  switch (kind) {
    case ModelKind::Ols: break;
    case ModelKind::Knn:
      if (k < 1) invalid("k must be >= 1");
      break;
    case ModelKind::Tree:
      if (max_depth < 0 || max_leaf_nodes < 0 || min_samples_leaf < 0) invalid("tree limits must be >= 0");
      break;
    case ModelKind::KernelRidge:
      if (!(alpha > 0.0)) invalid("alpha must be > 0");
      (void)Kernel(kernel);
      break;
    case ModelKind::Svr:
      if (!(C > 0.0)) invalid("C must be > 0");
      if (!(epsilon >= 0.0)) invalid("epsilon must be >= 0");
      (void)Kernel(kernel);
      break;
  }
}

TrainedModel::TrainedModel(Hyperparams hp, Standardiser standardiser, Params params,
                           std::optional<SolverReport> report)
    : hp_(std::move(hp)), standardiser_(std::move(standardiser)), params_(std::move(params)),
      report_(std::move(report)) {}

Vector TrainedModel::predict_unclipped(const Matrix& X) const {
  const Matrix Z = standardiser_.transform(X);
  return std::visit(
      [&](const auto& p) -> Vector {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearParams>) {
          return (Z * p.weights).array() + p.bias;
        } else if constexpr (std::is_same_v<P, NeighborParams>) {
          return knn_predict(p, hp_.k, hp_.metric, Z);
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          return tree_predict(p, Z);
        } else {
          return expansion_predict(p, Kernel(hp_.kernel), Z);
        }
      },
      params_);
}

Vector TrainedModel::predict(const Matrix& X) const { return predict_unclipped(X).cwiseMax(0.0).cwiseMin(1.0); }

TrainedModel fit(const Dataset& train, const Hyperparams& hp) {
  switch (hp.kind) {
    case ModelKind::Ols: return fit_ols(train);
    case ModelKind::Knn: return fit_knn(train, hp);
    case ModelKind::Tree: return fit_tree(train, hp);
    case ModelKind::KernelRidge: return fit_kernel_ridge(train, hp);
    case ModelKind::Svr: return fit_svr(train, hp);
  }
  throw Error(Errc::InvalidHyperparam, "unknown model kind");
}

Prediction predict(const TrainedModel& model, const Matrix& X) {
  const auto started = std::chrono::steady_clock::now();
  Prediction out;
  out.values = model.predict(X);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace fdr::ml
