#include "fdr/error.hpp"
#include "fdr/regression.hpp"
#include "ml/internal.hpp"

namespace fdr::ml {

namespace {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

}  // namespace

// Small alpha makes (K + alpha I) nearly singular and the coefficients
// large, so predictions are differences of big terms. The system is built,
// solved and later evaluated in extended precision.
TrainedModel fit_kernel_ridge(const Dataset& train, const Hyperparams& hp) {
  Hyperparams h = hp;
  h.kind = ModelKind::KernelRidge;
  h.validate();
  Matrix Z;
  Standardiser s = standardise(train, Z);
  const Kernel kernel(h.kernel);
  const RowMatrix rows = Z;
  const Eigen::Index n = Z.rows();

  // Targets are centred; the mean becomes the expansion's bias.
  const double y_mean = train.y.mean();
  LongVector yc(n);
  for (Eigen::Index i = 0; i < n; ++i) yc(i) = static_cast<long double>(train.y(i)) - y_mean;
  LongMatrix A(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) A(i, j) = A(j, i) = kernel.extended(row_span(rows, i), row_span(rows, j));
    A(i, i) += h.alpha;
  }

  LongVector coef;
  Eigen::LLT<LongMatrix> llt(A);
  if (llt.info() == Eigen::Success) {
    coef = llt.solve(yc);
  } else {
    // Indefinite K (sigmoid kernel) falls back to a pivoted LDL^T.
    Eigen::LDLT<LongMatrix> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw Error(Errc::SingularSystem, "K + alpha I could not be factorised");
    coef = ldlt.solve(yc);
  }
  if (!coef.allFinite()) throw Error(Errc::SingularSystem, "K + alpha I is singular");

  KernelExpansion p;
  p.support = std::move(Z);
  p.coef = coef.cast<double>();
  p.coef_low = (coef - p.coef.cast<long double>()).cast<double>();
  p.bias = y_mean;
  p.support_rows.resize(train.rows());
  for (std::size_t i = 0; i < train.rows(); ++i) p.support_rows[i] = i;
  return TrainedModel(h, std::move(s), std::move(p));
}

Vector expansion_predict(const KernelExpansion& params, const Kernel& kernel, const Matrix& queries) {
  const RowMatrix q = queries, sv = params.support;
  const bool low = params.coef_low.size() == params.coef.size();
  Vector out(q.rows());
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    long double sum = params.bias;
    for (Eigen::Index i = 0; i < sv.rows(); ++i) {
      long double c = params.coef(i);
      if (low) c += params.coef_low(i);
      sum += c * kernel.extended(row_span(q, r), row_span(sv, i));
    }
    out(r) = static_cast<double>(sum);
  }
  return out;
}

}  // namespace fdr::ml
