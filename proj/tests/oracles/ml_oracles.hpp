#pragma once

// Deliberately naive reference implementations used as test oracles. They
// share no code with the library beyond the Eigen containers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = u(rng);
  return X;
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n, double lo = 0.0, double hi = 1.0) {
  return random_matrix(rng, n, 1, lo, hi).col(0);
}

struct Scaling {
  Vec mean, sd;
};

inline Scaling fit_scaling(const Mat& X) {
  Scaling s{Vec::Zero(X.cols()), Vec::Zero(X.cols())};
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) sum += X(i, j);
    const double mu = sum / static_cast<double>(X.rows());
    double ss = 0.0;
    bool constant = true;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      ss += (X(i, j) - mu) * (X(i, j) - mu);
      constant = constant && X(i, j) == X(0, j);
    }
    s.mean(j) = mu;
    s.sd(j) = constant ? 0.0 : std::sqrt(ss / static_cast<double>(X.rows()));
  }
  return s;
}

inline Mat apply_scaling(const Scaling& s, const Mat& X) {
  Mat Z(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) Z(i, j) = s.sd(j) > 0.0 ? (X(i, j) - s.mean(j)) / s.sd(j) : 0.0;
  return Z;
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

/// Least squares with intercept via the normal equations on raw features.
inline Vec ols_predict(const Mat& X, const Vec& y, const Mat& Q) {
  const std::size_t d = static_cast<std::size_t>(X.cols()) + 1;
  std::vector<std::vector<double>> A(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> row(d, 1.0);
    for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
    for (std::size_t a = 0; a < d; ++a) {
      b[a] += row[a] * y(i);
      for (std::size_t c = 0; c < d; ++c) A[a][c] += row[a] * row[c];
    }
  }
  const auto w = gauss_solve(A, b);
  Vec out(Q.rows());
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    double s = w.back();
    for (Eigen::Index j = 0; j < Q.cols(); ++j) s += w[static_cast<std::size_t>(j)] * Q(i, j);
    out(i) = s;
  }
  return out;
}

/// Exhaustive-scan k-NN on standardised data, inverse-distance weights,
/// ties by lower row index.
inline Vec knn_predict(const Mat& X, const Vec& y, const Mat& Q, int k, bool manhattan) {
  const Scaling s = fit_scaling(X);
  const Mat Z = apply_scaling(s, X), Zq = apply_scaling(s, Q);
  Vec out(Q.rows());
  for (Eigen::Index q = 0; q < Q.rows(); ++q) {
    std::vector<std::pair<double, Eigen::Index>> all;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      double d = 0.0;
      for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        const double diff = Zq(q, j) - Z(i, j);
        d += manhattan ? std::abs(diff) : diff * diff;
      }
      all.emplace_back(manhattan ? d : std::sqrt(d), i);
    }
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    all.resize(static_cast<std::size_t>(k));
    double zero_sum = 0.0;
    int zeros = 0;
    for (const auto& [d, i] : all)
      if (d == 0.0) zero_sum += y(i), ++zeros;
    if (zeros > 0) {
      out(q) = zero_sum / zeros;
      continue;
    }
    double num = 0.0, den = 0.0;
    for (const auto& [d, i] : all) num += y(i) / d, den += 1.0 / d;
    out(q) = num / den;
  }
  return out;
}

/// Best (feature, threshold) by direct child SSE over every midpoint.
struct SplitChoice {
  Eigen::Index feature = -1;
  double threshold = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

inline SplitChoice best_split(const Mat& Z, const Vec& y) {
  SplitChoice best;
  for (Eigen::Index f = 0; f < Z.cols(); ++f) {
    std::vector<double> values(Z.col(f).data(), Z.col(f).data() + Z.rows());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t v = 0; v + 1 < values.size(); ++v) {
      const double t = (values[v] + values[v + 1]) / 2.0;
      double sl = 0, sr = 0;
      int nl = 0, nr = 0;
      for (Eigen::Index i = 0; i < Z.rows(); ++i) (Z(i, f) <= t ? (sl += y(i), nl++) : (sr += y(i), nr++));
      double sse = 0.0;
      for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        const double m = Z(i, f) <= t ? sl / nl : sr / nr;
        sse += (y(i) - m) * (y(i) - m);
      }
      if (sse < best.sse - 1e-12) best = {f, t, sse};
    }
  }
  return best;
}

/// Maximum of the epsilon-SVR dual
///   max -1/2 a'Qa - p'a  s.t.  s'a = 0, 0 <= a <= C
/// by accelerated projected gradient. The projection onto the box and the
/// hyperplane is a bisection on the multiplier.
inline double svr_dual(const Mat& K, const Vec& y, double C, double eps, int iterations = 50000) {
  const Eigen::Index n = y.size(), m = 2 * n;
  Vec s(m), p(m);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = 1, s(i + n) = -1, p(i) = eps - y(i), p(i + n) = eps + y(i);
  Mat Q(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) Q(i, j) = s(i) * s(j) * K(i % n, j % n);
  const double L = std::max(1e-12, Eigen::SelfAdjointEigenSolver<Mat>(Q).eigenvalues().maxCoeff());

  auto project = [&](const Vec& v) {
    auto at = [&](double lam) { return (v - lam * s).cwiseMax(0.0).cwiseMin(C).eval(); };
    const double r = v.lpNorm<Eigen::Infinity>() + C + 1.0;
    double lo = -r, hi = r;
    for (int it = 0; it < 80; ++it) {
      const double mid = (lo + hi) / 2;
      (s.dot(at(mid)) > 0 ? lo : hi) = mid;
    }
    return at((lo + hi) / 2);
  };
  auto f = [&](const Vec& a) { return 0.5 * a.dot(Q * a) + p.dot(a); };

  Vec a = Vec::Zero(m), z = a;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const Vec next = project(z - (Q * z + p) / L);
    const double tn = (1 + std::sqrt(1 + 4 * t * t)) / 2;
    z = next + ((t - 1) / tn) * (next - a);
    if (f(next) > f(a)) z = next, t = 1.0;  // restart on ascent
    else t = tn;
    if ((next - a).lpNorm<Eigen::Infinity>() < 1e-13) {
      a = next;
      break;
    }
    a = next;
  }
  return -f(a);
}

}  // namespace oracle
