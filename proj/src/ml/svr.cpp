#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fdr/regression.hpp"
#include "ml/internal.hpp"

namespace fdr::ml {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Dual of epsilon-SVR over 2n variables a = (alpha, alpha*):
//   min 1/2 a'Qa + p'a  s.t.  s'a = 0, 0 <= a <= C
// with s = (+1.., -1..), p = (eps - y, eps + y), Q_ij = s_i s_j K.
class Smo {
 public:
  Smo(const Matrix& K, const Vector& y, double C, double eps)
      : K_(K), n_(static_cast<std::size_t>(y.size())), C_(C), a_(2 * n_, 0.0), p_(2 * n_), G_(2 * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      p_[i] = eps - y(static_cast<Eigen::Index>(i));
      p_[i + n_] = eps + y(static_cast<Eigen::Index>(i));
    }
    G_ = p_;
  }

  SolverReport solve(double tol, std::size_t max_updates, bool record) {
    SolverReport report;
    report.converged = false;
    while (true) {
      std::size_t i = 0, j = 0;
      const double gap = select(i, j);
      report.kkt_violation = gap;
      if (gap < tol || j == kNone) {
        report.converged = true;
        break;
      }
      if (report.updates == max_updates) break;
      update(i, j);
      ++report.updates;
      if (record) report.objective_trace.push_back(dual_objective());
    }
    return report;
  }

  double dual_objective() const {
    double obj = 0.0;
    for (std::size_t t = 0; t < 2 * n_; ++t) obj += a_[t] * (G_[t] + p_[t]);
    return -0.5 * obj;
  }

  double rho() const {
    double ub = kInf, lb = -kInf, sum = 0.0;
    std::size_t free = 0;
    for (std::size_t t = 0; t < 2 * n_; ++t) {
      const double yg = sign(t) * G_[t];
      if (upper(t)) {
        if (sign(t) < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (lower(t)) {
        if (sign(t) > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        ++free;
        sum += yg;
      }
    }
    return free > 0 ? sum / static_cast<double>(free) : (ub + lb) / 2.0;
  }

  double beta(std::size_t i) const { return a_[i] - a_[i + n_]; }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  double sign(std::size_t t) const { return t < n_ ? 1.0 : -1.0; }
  bool upper(std::size_t t) const { return a_[t] >= C_; }
  bool lower(std::size_t t) const { return a_[t] <= 0.0; }
  double kern(std::size_t a, std::size_t b) const {
    return K_(static_cast<Eigen::Index>(a % n_), static_cast<Eigen::Index>(b % n_));
  }
  double q(std::size_t a, std::size_t b) const { return sign(a) * sign(b) * kern(a, b); }

  // Second-order working set selection; returns the maximal violation.
  double select(std::size_t& out_i, std::size_t& out_j) const {
    double gmax = -kInf, gmax2 = -kInf;
    std::size_t i = kNone;
    for (std::size_t t = 0; t < 2 * n_; ++t) {
      if (sign(t) > 0) {
        if (!upper(t) && -G_[t] >= gmax) gmax = -G_[t], i = t;
      } else {
        if (!lower(t) && G_[t] >= gmax) gmax = G_[t], i = t;
      }
    }
    std::size_t j = kNone;
    double best = kInf;
    for (std::size_t t = 0; t < 2 * n_ && i != kNone; ++t) {
      double grad_diff = 0.0, quad = 0.0;
      if (sign(t) > 0) {
        if (lower(t)) continue;
        gmax2 = std::max(gmax2, G_[t]);
        grad_diff = gmax + G_[t];
        quad = kern(i, i) + kern(t, t) - 2.0 * sign(i) * q(i, t);
      } else {
        if (upper(t)) continue;
        gmax2 = std::max(gmax2, -G_[t]);
        grad_diff = gmax - G_[t];
        quad = kern(i, i) + kern(t, t) + 2.0 * sign(i) * q(i, t);
      }
      if (grad_diff <= 0.0) continue;
      if (quad <= 0.0) quad = kTau;
      const double obj = -(grad_diff * grad_diff) / quad;
      if (obj <= best) best = obj, j = t;
    }
    out_i = i;
    out_j = j;
    return gmax + gmax2;
  }

  void update(std::size_t i, std::size_t j) {
    const double old_i = a_[i], old_j = a_[j];
    double& ai = a_[i];
    double& aj = a_[j];
    const double qij = q(i, j);
    if (sign(i) != sign(j)) {
      double quad = kern(i, i) + kern(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G_[i] - G_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) aj = 0.0, ai = diff;
      } else if (ai < 0.0) {
        ai = 0.0, aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > C_) ai = C_, aj = C_ - diff;
      } else if (aj > C_) {
        aj = C_, ai = C_ + diff;
      }
    } else {
      double quad = kern(i, i) + kern(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (G_[i] - G_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C_) {
        if (ai > C_) ai = C_, aj = sum - C_;
      } else if (aj < 0.0) {
        aj = 0.0, ai = sum;
      }
      if (sum > C_) {
        if (aj > C_) aj = C_, ai = sum - C_;
      } else if (ai < 0.0) {
        ai = 0.0, aj = sum;
      }
    }
    const double di = ai - old_i, dj = aj - old_j;
    for (std::size_t t = 0; t < 2 * n_; ++t) G_[t] += q(i, t) * di + q(j, t) * dj;
  }

  const Matrix& K_;
  std::size_t n_;
  double C_;
  std::vector<double> a_, p_, G_;
};

}  // namespace

TrainedModel fit_svr(const Dataset& train, const Hyperparams& hp, const SvrOptions& options) {
  Hyperparams h = hp;
  h.kind = ModelKind::Svr;
  h.validate();
  Matrix Z;
  Standardiser s = standardise(train, Z);
  const Matrix K = gram(Kernel(h.kernel), Z, Z);
  const std::size_t n = train.rows();

  Smo smo(K, train.y, h.C, h.epsilon);
  const std::size_t cap = options.max_updates > 0 ? options.max_updates : 10 * n * n;
  SolverReport report = smo.solve(options.tolerance, cap, options.record_objective);

  KernelExpansion p;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (smo.beta(i) != 0.0) rows.push_back(i);
  }
  p.support.resize(static_cast<Eigen::Index>(rows.size()), Z.cols());
  p.coef.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    p.support.row(static_cast<Eigen::Index>(k)) = Z.row(static_cast<Eigen::Index>(rows[k]));
    p.coef(static_cast<Eigen::Index>(k)) = smo.beta(rows[k]);
  }
  p.support_rows = std::move(rows);
  p.bias = -smo.rho();
  return TrainedModel(h, std::move(s), std::move(p), std::move(report));
}

}  // namespace fdr::ml
