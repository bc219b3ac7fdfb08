#include <algorithm>
#include <cmath>
#include <utility>

#include "fdr/error.hpp"
#include "fdr/regression.hpp"
#include "ml/internal.hpp"

namespace fdr::ml {

TrainedModel fit_knn(const Dataset& train, const Hyperparams& hp) {
  Hyperparams h = hp;
  h.kind = ModelKind::Knn;
  h.validate();
  train.validate();
  if (static_cast<std::size_t>(h.k) > train.rows()) {
    throw Error(Errc::KTooLarge, "k = " + std::to_string(h.k) + " exceeds " + std::to_string(train.rows()) +
                                     " training rows");
  }
  Matrix Z;
  Standardiser s = standardise(train, Z);
  return TrainedModel(h, std::move(s), NeighborParams{std::move(Z), train.y});
}

Vector knn_predict(const NeighborParams& params, int k, DistanceMetric metric, const Matrix& queries) {
  const RowMatrix train = params.X;
  const RowMatrix q = queries;
  const auto n = static_cast<std::size_t>(train.rows());
  const auto kk = static_cast<std::size_t>(k);
  Vector out(q.rows());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    auto x = row_span(q, r);
    for (std::size_t i = 0; i < n; ++i) {
      auto t = row_span(train, static_cast<Eigen::Index>(i));
      double d = 0.0;
      if (metric == DistanceMetric::Manhattan) {
        for (std::size_t j = 0; j < x.size(); ++j) d += std::abs(x[j] - t[j]);
      } else {
        for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - t[j]) * (x[j] - t[j]);
        d = std::sqrt(d);
      }
      dist[i] = {d, i};
    }
    // (distance, row) order: equal distances go to the lower row.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    if (dist[0].first == 0.0) {
      double sum = 0.0;
      std::size_t zeros = 0;
      for (std::size_t i = 0; i < kk && dist[i].first == 0.0; ++i, ++zeros) sum += params.y(static_cast<Eigen::Index>(dist[i].second));
      out(r) = sum / static_cast<double>(zeros);
      continue;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < kk; ++i) {
      num += params.y(static_cast<Eigen::Index>(dist[i].second)) / dist[i].first;
      den += 1.0 / dist[i].first;
    }
    out(r) = num / den;
  }
  return out;
}

}  // namespace fdr::ml
