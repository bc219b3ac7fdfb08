#include <algorithm>
#include <cmath>

#include "fdr/regression.hpp"
#include "ml/internal.hpp"

namespace fdr::ml {

TrainedModel fit_ols(const Dataset& train) {
  Matrix Z;
  Standardiser s = standardise(train, Z);
  const Vector x_mean = Z.colwise().mean();
  const double y_mean = train.y.mean();
  const Matrix Zc = Z.rowwise() - x_mean.transpose();
  const Vector yc = train.y.array() - y_mean;

  Matrix G = Zc.transpose() * Zc;
  const Vector rhs = Zc.transpose() * yc;
  Vector w;
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-12) {
    w = llt.solve(rhs);
  } else {
    // Singular Gram (constant or collinear columns): a tiny ridge picks the
    // minimum-norm solution among the least-squares minimisers.
    const double jitter = 1e-12 * std::max(1.0, G.diagonal().maxCoeff());
    G.diagonal().array() += jitter;
    w = G.ldlt().solve(rhs);
  }
  LinearParams p{w, y_mean - x_mean.dot(w)};
  Hyperparams hp;
  hp.kind = ModelKind::Ols;
  return TrainedModel(hp, std::move(s), std::move(p));
}

}  // namespace fdr::ml
