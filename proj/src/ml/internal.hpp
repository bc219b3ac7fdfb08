#pragma once

#include <span>

#include "fdr/regression.hpp"

namespace fdr::ml {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const RowMatrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

Vector knn_predict(const NeighborParams& params, int k, DistanceMetric metric, const Matrix& queries);
Vector tree_predict(const TreeParams& params, const Matrix& queries);
Vector expansion_predict(const KernelExpansion& params, const Kernel& kernel, const Matrix& queries);

/// Standardise the training rows and return the fitted standardiser.
inline Standardiser standardise(const Dataset& train, Matrix& Z) {
  train.validate();
  Standardiser s = Standardiser::fit(train.X);
  Z = s.transform(train.X);
  return s;
}

}  // namespace fdr::ml
