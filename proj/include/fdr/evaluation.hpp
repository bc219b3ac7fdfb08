#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fdr/regression.hpp"

namespace fdr::ml {

/// ev and r2 are undefined (nullopt) when y_true is constant.
struct Scores {
  double mae = 0.0;
  double max_abs = 0.0;
  double rmse = 0.0;
  std::optional<double> ev;
  std::optional<double> r2;
};

/// e = y_true - y_pred, population variances. Throws LengthMismatch, or
/// TooFewRows for empty input.
Scores metrics(const Vector& y_true, const Vector& y_pred);

struct MetricReport {
  Scores scores;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

/// Monte-Carlo cross validation: `folds` independent shuffled splits.
struct CvPlan {
  int folds = 10;
  double train_fraction = 0.5;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument unless folds >= 2 and 0 < train_fraction < 1.
  void validate() const;
};

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Fold f shuffles 0..n-1 with a generator seeded from (seed, f); train is
/// the first ceil(n * t) rows. Throws TooFewRows unless train >= 2 and
/// test >= 1.
std::vector<Fold> cv_splits(std::size_t n, const CvPlan& plan);

struct FoldResult {
  MetricReport train;
  MetricReport test;
};

struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;  // folds that contributed
};

struct CvResult {
  std::vector<FoldResult> folds;
  Summary train_r2;  // over folds where r2 is defined
  Summary test_r2;
  Summary fit_seconds;
};

/// Called with every fold's split and the model fitted on its train rows.
using FoldObserver = std::function<void(std::size_t fold, const Fold&, const TrainedModel&)>;

/// Fits a fresh model (with a fresh standardiser) per fold.
CvResult cv_evaluate(const Dataset& data, const Hyperparams& hp, const CvPlan& plan,
                     const FoldObserver& observer = {});

struct Distribution {
  enum class Type { LogUniform, Uniform, Choice, IntRange };
  Type type = Type::Uniform;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::string> choices;
  bool include_zero = false;  // IntRange only: {0} u [lo, hi]

  static Distribution log_uniform(double lo, double hi) { return {Type::LogUniform, lo, hi, {}, false}; }
  static Distribution uniform(double lo, double hi) { return {Type::Uniform, lo, hi, {}, false}; }
  static Distribution int_range(int lo, int hi, bool include_zero = false) {
    return {Type::IntRange, static_cast<double>(lo), static_cast<double>(hi), {}, include_zero};
  }
  static Distribution choice(std::vector<std::string> items) { return {Type::Choice, 0, 0, std::move(items), false}; }

  bool contains(double v) const;
};

struct SearchParam {
  std::string name;  // k, metric, max_depth, max_leaf_nodes, min_samples_leaf,
                     // alpha, C, epsilon, kernel, gamma, degree, coef0
  Distribution dist;
};

struct SearchSpace {
  Hyperparams base;  // fixed values for everything not searched
  std::vector<SearchParam> params;
  std::size_t random_budget = 30;
  std::size_t grid_points = 3;
  double grid_span = 3.0;

  /// Throws InvalidArgument for empty budgets, lo >= hi, unknown names.
  void validate() const;
};

/// Default search space for a model kind and kernel.
SearchSpace default_space(const Hyperparams& base);

/// Sets a named hyperparameter. Choice values are passed by label.
void set_hyperparam(Hyperparams& hp, const std::string& name, double value);
void set_hyperparam(Hyperparams& hp, const std::string& name, const std::string& label);

struct Trial {
  std::size_t index = 0;
  int stage = 1;
  Hyperparams hp;
  CvResult cv;
  double score = -std::numeric_limits<double>::infinity();  // mean test r2
  std::string error;  // set when a fold failed
  double seconds = 0.0;
};

struct TuneOptions {
  double time_budget_seconds = 1800.0;
};

struct TuneResult {
  Hyperparams best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best_trial = 0;
  std::vector<Trial> trials;
  double seconds = 0.0;
};

/// Random search then a cartesian grid around the random-stage winner.
/// Selection is by mean test r2, ties to the earlier trial. A trial whose
/// folds throw is scored -inf and logged.
TuneResult tune(const Dataset& data, const SearchSpace& space, const CvPlan& plan, const TuneOptions& options = {});

/// One JSON object per trial. Wall-clock values are confined to the
/// "times" member.
void write_search_log(std::ostream& out, const TuneResult& result);

struct CurvePoint {
  double fraction = 0.0;
  std::size_t train_size = 0;
  Summary train;
  Summary test;
  Summary fit_seconds;
};

/// cv_evaluate at every train fraction. Throws TooFewRows when a fraction
/// leaves fewer than 2 train or 1 test rows.
std::vector<CurvePoint> learning_curve(const Dataset& data, const Hyperparams& hp, const std::vector<double>& fractions,
                                       const CvPlan& plan);

/// Columns: train size, train mean, train std, test mean, test std, fit
/// time mean, fit time std.
void write_learning_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace fdr::ml
