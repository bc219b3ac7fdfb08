#include "fdr/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "fdr/error.hpp"
#include "fdr/model_io.hpp"
#include "fdr/random.hpp"

namespace fdr::ml {

namespace {

constexpr std::uint64_t kSearchStream = 0x5EA2C4;

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Summary summarise(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

void bad_space(const std::string& what) { throw Error(Errc::InvalidArgument, "search space: " + what); }

}  // namespace

Scores metrics(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(Errc::LengthMismatch, fmt::format("{} targets vs {} predictions", y_true.size(), y_pred.size()));
  }
  if (y_true.size() == 0) throw Error(Errc::TooFewRows, "metrics of an empty vector");
  const auto n = static_cast<double>(y_true.size());
  double abs_sum = 0.0, sq_sum = 0.0, e_sum = 0.0, y_sum = 0.0, max_abs = 0.0;
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const double e = y_true(i) - y_pred(i);
    abs_sum += std::abs(e);
    sq_sum += e * e;
    e_sum += e;
    y_sum += y_true(i);
    max_abs = std::max(max_abs, std::abs(e));
  }
  const double e_mean = e_sum / n, y_mean = y_sum / n;
  double var_e = 0.0, var_y = 0.0;
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const double e = y_true(i) - y_pred(i);
    var_e += (e - e_mean) * (e - e_mean);
    var_y += (y_true(i) - y_mean) * (y_true(i) - y_mean);
  }
  Scores s;
  s.mae = abs_sum / n;
  s.max_abs = max_abs;
  s.rmse = std::sqrt(sq_sum / n);
  if (var_y > 0.0) {
    s.r2 = 1.0 - sq_sum / var_y;
    s.ev = 1.0 - var_e / var_y;
  }
  return s;
}

void CvPlan::validate() const {
  if (folds < 2) throw Error(Errc::InvalidArgument, "cv folds must be >= 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "cv train fraction must be in (0, 1)");
  }
}

std::vector<Fold> cv_splits(std::size_t n, const CvPlan& plan) {
  plan.validate();
  const auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * plan.train_fraction));
  if (n_train < 2 || n_train >= n) {
    throw Error(Errc::TooFewRows, fmt::format("{} rows at train fraction {} leave {} train / {} test rows", n,
                                              plan.train_fraction, n_train, n - std::min(n, n_train)));
  }
  std::vector<Fold> folds;
  for (int f = 0; f < plan.folds; ++f) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(f)));
    rng.shuffle(std::span(perm));
    Fold fold;
    fold.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    fold.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    folds.push_back(std::move(fold));
  }
  return folds;
}

CvResult cv_evaluate(const Dataset& data, const Hyperparams& hp, const CvPlan& plan, const FoldObserver& observer) {
  data.validate();
  const auto folds = cv_splits(data.rows(), plan);
  CvResult out;
  std::vector<double> train_r2, test_r2, fit_times;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const Dataset train = data.subset(folds[f].train);
    const Dataset test = data.subset(folds[f].test);
    const auto started = std::chrono::steady_clock::now();
    const TrainedModel model = fit(train, hp);
    FoldResult r;
    r.train.fit_seconds = r.test.fit_seconds = seconds_since(started);
    if (observer) observer(f, folds[f], model);
    const Prediction ptrain = predict(model, train.X);
    const Prediction ptest = predict(model, test.X);
    r.train.scores = metrics(train.y, ptrain.values);
    r.train.predict_seconds = ptrain.seconds;
    r.test.scores = metrics(test.y, ptest.values);
    r.test.predict_seconds = ptest.seconds;
    if (r.train.scores.r2) train_r2.push_back(*r.train.scores.r2);
    if (r.test.scores.r2) test_r2.push_back(*r.test.scores.r2);
    fit_times.push_back(r.train.fit_seconds);
    out.folds.push_back(r);
  }
  out.train_r2 = summarise(train_r2);
  out.test_r2 = summarise(test_r2);
  out.fit_seconds = summarise(fit_times);
  return out;
}

// ---------------------------------------------------------------------------

bool Distribution::contains(double v) const {
  switch (type) {
    case Type::Choice: return v >= 0.0 && v < static_cast<double>(choices.size()) && v == std::floor(v);
    case Type::IntRange:
      if (v != std::floor(v)) return false;
      return (include_zero && v == 0.0) || (v >= lo && v <= hi);
    default: return v >= lo && v <= hi;
  }
}

namespace {

const std::vector<std::string> kNumericParams{"k",     "max_depth", "max_leaf_nodes", "min_samples_leaf", "alpha",
                                              "C",     "epsilon",   "gamma",          "degree",           "coef0"};

int as_int(const std::string& name, double v) {
  if (v != std::floor(v)) throw Error(Errc::InvalidHyperparam, name + " must be an integer");
  return static_cast<int>(v);
}

}  // namespace

void set_hyperparam(Hyperparams& hp, const std::string& name, double value) {
  if (name == "k") hp.k = as_int(name, value);
  else if (name == "max_depth") hp.max_depth = as_int(name, value);
  else if (name == "max_leaf_nodes") hp.max_leaf_nodes = as_int(name, value);
  else if (name == "min_samples_leaf") hp.min_samples_leaf = as_int(name, value);
  else if (name == "alpha") hp.alpha = value;
  else if (name == "C") hp.C = value;
  else if (name == "epsilon") hp.epsilon = value;
  else if (name == "gamma") hp.kernel.gamma = value;
  else if (name == "degree") hp.kernel.degree = as_int(name, value);
  else if (name == "coef0") hp.kernel.coef0 = value;
  else throw Error(Errc::InvalidHyperparam, "unknown numeric hyperparameter '" + name + "'");
}

void set_hyperparam(Hyperparams& hp, const std::string& name, const std::string& label) {
  if (name == "metric") {
    auto m = metric_from_name(label);
    if (!m) throw Error(Errc::InvalidHyperparam, "unknown metric '" + label + "'");
    hp.metric = *m;
  } else if (name == "kernel") {
    auto k = kernel_kind_from_name(label);
    if (!k) throw Error(Errc::InvalidHyperparam, "unknown kernel '" + label + "'");
    hp.kernel.kind = *k;
  } else {
    throw Error(Errc::InvalidHyperparam, "unknown choice hyperparameter '" + name + "'");
  }
}

void SearchSpace::validate() const {
  if (random_budget < 1) bad_space("random budget must be >= 1");
  if (grid_points < 1) bad_space("grid points must be >= 1");
  if (!(grid_span >= 1.0)) bad_space("grid span factor must be >= 1");
  for (const auto& p : params) {
    const bool numeric = std::find(kNumericParams.begin(), kNumericParams.end(), p.name) != kNumericParams.end();
    if (p.dist.type == Distribution::Type::Choice) {
      if (p.name != "metric" && p.name != "kernel") bad_space("'" + p.name + "' cannot be a choice");
      if (p.dist.choices.empty()) bad_space("empty choice list for '" + p.name + "'");
      for (const auto& c : p.dist.choices) {
        Hyperparams probe = base;
        set_hyperparam(probe, p.name, c);
      }
      continue;
    }
    if (!numeric) bad_space("unknown hyperparameter '" + p.name + "'");
    if (!(p.dist.lo < p.dist.hi)) bad_space("'" + p.name + "' needs lo < hi");
    if (p.dist.type == Distribution::Type::LogUniform && !(p.dist.lo > 0.0)) {
      bad_space("log-uniform '" + p.name + "' needs lo > 0");
    }
  }
}

SearchSpace default_space(const Hyperparams& base) {
  SearchSpace s;
  s.base = base;
  auto add = [&](std::string name, Distribution d) { s.params.push_back({std::move(name), std::move(d)}); };
  auto add_kernel = [&] {
    if (base.kernel.kind == KernelKind::Linear) return;
    add("gamma", Distribution::log_uniform(1e-6, 1e3));
    if (base.kernel.kind == KernelKind::Polynomial) add("degree", Distribution::int_range(1, 6));
    if (base.kernel.kind != KernelKind::Rbf) add("coef0", Distribution::uniform(-1.0, 1.0));
  };
  switch (base.kind) {
    case ModelKind::Ols: break;
    case ModelKind::Knn:
      add("k", Distribution::int_range(1, 25));
      add("metric", Distribution::choice({"manhattan", "euclidean"}));
      break;
    case ModelKind::Tree:
      add("max_depth", Distribution::int_range(2, 64, true));
      add("max_leaf_nodes", Distribution::int_range(2, 64, true));
      add("min_samples_leaf", Distribution::int_range(2, 64, true));
      break;
    case ModelKind::KernelRidge:
      add("alpha", Distribution::log_uniform(1e-6, 1e3));
      add_kernel();
      break;
    case ModelKind::Svr:
      add("C", Distribution::log_uniform(1e-6, 1e3));
      add("epsilon", Distribution::uniform(0.0, 0.2));
      add_kernel();
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

// A point of the search: a numeric value per parameter (choice index for
// Choice parameters).
using Point = std::vector<double>;

Hyperparams apply(const SearchSpace& space, const Point& point) {
  Hyperparams hp = space.base;
  for (std::size_t i = 0; i < space.params.size(); ++i) {
    const auto& p = space.params[i];
    if (p.dist.type == Distribution::Type::Choice) {
      set_hyperparam(hp, p.name, p.dist.choices[static_cast<std::size_t>(point[i])]);
    } else {
      set_hyperparam(hp, p.name, point[i]);
    }
  }
  return hp;
}

double sample(const Distribution& d, Rng& rng) {
  switch (d.type) {
    case Distribution::Type::LogUniform: return std::exp(rng.uniform(std::log(d.lo), std::log(d.hi)));
    case Distribution::Type::Uniform: return rng.uniform(d.lo, d.hi);
    case Distribution::Type::Choice: return static_cast<double>(rng.below(d.choices.size()));
    case Distribution::Type::IntRange: {
      const auto lo = static_cast<std::int64_t>(d.lo) - (d.include_zero ? 1 : 0);
      const auto v = rng.between(lo, static_cast<std::int64_t>(d.hi));
      return d.include_zero && v == lo ? 0.0 : static_cast<double>(v);
    }
  }
  return 0.0;
}

// Grid values for one parameter around `best`, always inside the space.
std::vector<double> grid_axis(const Distribution& d, double best, std::size_t points, double span) {
  if (d.type == Distribution::Type::Choice || points == 1) return {best};
  if (d.type == Distribution::Type::IntRange && d.include_zero && best == 0.0) return {0.0};
  double a = 0.0, b = 0.0;
  if (best == 0.0) {
    const double half = (d.hi - d.lo) / (2.0 * span);
    a = best - half;
    b = best + half;
  } else {
    a = std::min(best / span, best * span);
    b = std::max(best / span, best * span);
  }
  a = std::clamp(a, d.lo, d.hi);
  b = std::clamp(b, d.lo, d.hi);
  std::vector<double> out;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    double v = d.type == Distribution::Type::LogUniform ? std::exp(std::log(a) + t * (std::log(b) - std::log(a)))
                                                        : a + t * (b - a);
    if (i == 0) v = a;
    if (i + 1 == points) v = b;
    if (d.type == Distribution::Type::IntRange) v = std::clamp(std::round(v), d.lo, d.hi);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

std::vector<Point> cartesian(const std::vector<std::vector<double>>& axes) {
  std::vector<Point> out{Point{}};
  for (const auto& axis : axes) {
    std::vector<Point> next;
    for (const auto& p : out) {
      for (double v : axis) {
        Point q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::size_t grid_size(const SearchSpace& space, const Point& best, std::size_t points) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < space.params.size(); ++i) {
    total *= grid_axis(space.params[i].dist, best[i], points, space.grid_span).size();
  }
  return total;
}

}  // namespace

TuneResult tune(const Dataset& data, const SearchSpace& space, const CvPlan& plan, const TuneOptions& options) {
  space.validate();
  plan.validate();
  const auto started = std::chrono::steady_clock::now();
  TuneResult result;
  result.best = space.base;
  std::vector<Point> points;
  Point best_point;

  auto run_trial = [&](const Point& point, int stage) {
    Trial t;
    t.index = result.trials.size();
    t.stage = stage;
    t.hp = apply(space, point);
    const auto trial_start = std::chrono::steady_clock::now();
    try {
      t.cv = cv_evaluate(data, t.hp, plan);
      if (t.cv.test_r2.count > 0) t.score = t.cv.test_r2.mean;
    } catch (const Error& e) {
      t.error = e.what();
      t.cv = {};
    }
    t.seconds = seconds_since(trial_start);
    if (result.trials.empty() || t.score > result.best_score) {
      result.best_score = t.score;
      result.best = t.hp;
      result.best_trial = t.index;
      best_point = point;
    }
    result.trials.push_back(std::move(t));
  };

  // Stage 1. The wall-clock cap ends this stage early if the remaining
  // time would not fit a grid of min(3, grid_points) points per axis.
  Rng rng(derive_seed(plan.seed, kSearchStream));
  const std::size_t min_points = std::min<std::size_t>(3, space.grid_points);
  for (std::size_t i = 0; i < space.random_budget; ++i) {
    Point p;
    for (const auto& param : space.params) p.push_back(sample(param.dist, rng));
    run_trial(p, 1);
    if (space.params.empty()) break;
    const double per_trial = seconds_since(started) / static_cast<double>(result.trials.size());
    const double grid_cost = per_trial * static_cast<double>(grid_size(space, best_point, min_points));
    if (seconds_since(started) + grid_cost > options.time_budget_seconds) break;
  }

  // Stage 2: shrink the grid only as far as min_points to honour the cap.
  if (!space.params.empty()) {
    const double per_trial = seconds_since(started) / static_cast<double>(result.trials.size());
    const double remaining = options.time_budget_seconds - seconds_since(started);
    std::size_t g = space.grid_points;
    while (g > min_points && per_trial * static_cast<double>(grid_size(space, best_point, g)) > remaining) --g;
    std::vector<std::vector<double>> axes;
    const Point centre = best_point;
    for (std::size_t i = 0; i < space.params.size(); ++i) {
      axes.push_back(grid_axis(space.params[i].dist, centre[i], g, space.grid_span));
    }
    for (const auto& p : cartesian(axes)) run_trial(p, 2);
  }
  result.seconds = seconds_since(started);
  return result;
}

void write_search_log(std::ostream& out, const TuneResult& result) {
  using nlohmann::json;
  for (const auto& t : result.trials) {
    json folds_train = json::array(), folds_test = json::array(), fit = json::array(), pred = json::array();
    for (const auto& f : t.cv.folds) {
      folds_train.push_back(f.train.scores.r2 ? json(*f.train.scores.r2) : json());
      folds_test.push_back(f.test.scores.r2 ? json(*f.test.scores.r2) : json());
      fit.push_back(f.train.fit_seconds);
      pred.push_back(f.test.predict_seconds);
    }
    json line{{"trial", t.index},
              {"stage", t.stage},
              {"kind", model_kind_name(t.hp.kind)},
              {"hp", json::parse(hyperparams_json(t.hp))},
              {"train_r2", folds_train},
              {"test_r2", folds_test},
              {"mean_test_r2", std::isfinite(t.score) ? json(t.score) : json()},
              {"best", t.index == result.best_trial}};
    if (!t.error.empty()) line["error"] = t.error;
    line["times"] = {{"trial_seconds", t.seconds}, {"fit_seconds", fit}, {"predict_seconds", pred}};
    out << line.dump() << '\n';
  }
}

std::vector<CurvePoint> learning_curve(const Dataset& data, const Hyperparams& hp, const std::vector<double>& fractions,
                                       const CvPlan& plan) {
  std::vector<CurvePoint> out;
  for (double f : fractions) {
    CvPlan p = plan;
    p.train_fraction = f;
    const CvResult cv = cv_evaluate(data, hp, p);
    CurvePoint point;
    point.fraction = f;
    point.train_size = cv_splits(data.rows(), p).front().train.size();
    point.train = cv.train_r2;
    point.test = cv.test_r2;
    point.fit_seconds = cv.fit_seconds;
    out.push_back(point);
  }
  return out;
}

void write_learning_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "train size,train mean,train std,test mean,test std,fit time mean,fit time std\n";
  for (const auto& p : curve) {
    out << fmt::format("{},{},{},{},{},{},{}\n", p.train_size, p.train.mean, p.train.std, p.test.mean, p.test.std,
                       p.fit_seconds.mean, p.fit_seconds.std);
  }
}

}  // namespace fdr::ml
