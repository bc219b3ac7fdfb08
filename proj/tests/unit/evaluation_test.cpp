#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fdr/error.hpp"
#include "fdr/evaluation.hpp"
#include "oracles/ml_oracles.hpp"

using namespace fdr;
using namespace fdr::ml;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Dataset random_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
  std::mt19937_64 rng(seed);
  Dataset out;
  out.X = oracle::random_matrix(rng, n, d);
  out.y = oracle::random_vector(rng, n);
  return out;
}

std::string log_without_times(const TuneResult& r) {
  std::ostringstream out;
  write_search_log(out, r);
  std::istringstream in(out.str());
  std::string line, stripped;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    j.erase("times");
    stripped += j.dump() + "\n";
  }
  return stripped;
}

}  // namespace

TEST_CASE("metrics") {
  SUBCASE("hand example") {
    Scores s = metrics(vec({0, 1}), vec({0.5, 0.5}));
    CHECK(s.mae == 0.5);
    CHECK(s.rmse == 0.5);
    CHECK(s.max_abs == 0.5);
    CHECK(*s.r2 == 0.0);
    CHECK(*s.ev == 0.0);
  }
  SUBCASE("perfect prediction") {
    Scores s = metrics(vec({0.1, 0.7, 0.3}), vec({0.1, 0.7, 0.3}));
    CHECK(s.mae == 0.0);
    CHECK(s.rmse == 0.0);
    CHECK(*s.r2 == 1.0);
    CHECK(*s.ev == 1.0);
  }
  SUBCASE("mean prediction scores zero") {
    Vector y = vec({0.2, 0.4, 0.9, 0.1});
    Scores s = metrics(y, Vector::Constant(4, y.mean()));
    CHECK(*s.r2 == doctest::Approx(0.0));
  }
  SUBCASE("constant targets leave ev and r2 undefined") {
    Scores s = metrics(vec({0.3, 0.3}), vec({0.1, 0.5}));
    CHECK_FALSE(s.r2.has_value());
    CHECK_FALSE(s.ev.has_value());
    CHECK(s.mae == doctest::Approx(0.2));
  }
  SUBCASE("errors") {
    try {
      (void)metrics(vec({1, 2}), vec({1}));
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::LengthMismatch);
    }
    CHECK_THROWS_AS((void)metrics(Vector(0), Vector(0)), Error);
  }
  SUBCASE("identities on random vectors") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 200; ++t) {
      const auto n = static_cast<Eigen::Index>(2 + t % 30);
      Vector y = oracle::random_vector(rng, n), p = oracle::random_vector(rng, n, -0.5, 1.5);
      Scores s = metrics(y, p);
      const Vector e = y - p;
      const double var_y = (y.array() - y.mean()).square().mean();
      CHECK(*s.ev - *s.r2 == doctest::Approx(e.mean() * e.mean() / var_y));
      CHECK(*s.ev >= *s.r2 - 1e-12);
      CHECK(s.mae <= s.rmse + 1e-15);
      CHECK(s.rmse <= s.max_abs + 1e-15);
    }
  }
}

TEST_CASE("cross-validation splits") {
  CvPlan plan{2, 0.5, 7};
  auto folds = cv_splits(10, plan);
  REQUIRE(folds.size() == 2);
  for (const auto& f : folds) {
    CHECK(f.train.size() == 5);
    CHECK(f.test.size() == 5);
    std::set<std::size_t> all(f.train.begin(), f.train.end());
    all.insert(f.test.begin(), f.test.end());
    CHECK(all.size() == 10);
  }
  CHECK(folds[0].train != folds[1].train);
  auto again = cv_splits(10, plan);
  CHECK(again[0].train == folds[0].train);
  CHECK(cv_splits(10, CvPlan{10, 0.5, 8})[0].train.size() == 5);
  CHECK(cv_splits(7, CvPlan{3, 0.5, 1})[0].train.size() == 4);

  CHECK_THROWS_AS((void)cv_splits(10, CvPlan{1, 0.5, 1}), Error);
  CHECK_THROWS_AS((void)cv_splits(10, CvPlan{2, 1.0, 1}), Error);
  try {
    (void)cv_splits(3, CvPlan{2, 0.3, 1});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooFewRows);
  }
  CHECK_THROWS_AS((void)cv_splits(10, CvPlan{2, 0.95, 1}), Error);
}

TEST_CASE("cv_evaluate") {
  Dataset data = random_dataset(3, 40, 3);
  Hyperparams tree;
  tree.kind = ModelKind::Tree;
  CvResult r = cv_evaluate(data, tree, CvPlan{4, 0.5, 2});
  REQUIRE(r.folds.size() == 4);
  for (const auto& f : r.folds) CHECK(std::abs(*f.train.scores.r2 - 1.0) <= 1e-12);
  CHECK(r.train_r2.mean == doctest::Approx(1.0));
  CHECK(r.train_r2.count == 4);

  SUBCASE("standardiser is fitted on train rows only") {
    std::vector<Vector> means;
    auto check = [&](std::size_t, const Fold& fold, const TrainedModel& model) {
      const Matrix Z = model.standardiser().transform(data.subset(fold.train).X);
      for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        CHECK(std::abs(Z.col(j).mean()) <= 1e-9);
        CHECK(std::abs(std::sqrt(Z.col(j).squaredNorm() / static_cast<double>(Z.rows())) - 1.0) <= 1e-9);
      }
      means.push_back(model.standardiser().mean());
    };
    (void)cv_evaluate(data, tree, CvPlan{3, 0.5, 5}, check);
    Dataset perturbed = data;
    const auto folds = cv_splits(data.rows(), CvPlan{3, 0.5, 5});
    for (auto r : folds[0].test) perturbed.X.row(static_cast<Eigen::Index>(r)).array() += 100.0;
    std::size_t seen = 0;
    (void)cv_evaluate(perturbed, tree, CvPlan{3, 0.5, 5}, [&](std::size_t f, const Fold&, const TrainedModel& m) {
      if (f == 0) CHECK(m.standardiser().mean() == means[0]);
      ++seen;
    });
    CHECK(seen == 3);
  }
}

TEST_CASE("tune") {
  Dataset data = random_dataset(11, 40, 3);
  data.y = (data.X.col(0).array() * 0.3 + 0.5).matrix();
  const CvPlan plan{3, 0.5, 4};

  SUBCASE("single-choice space") {
    SearchSpace s;
    s.base.kind = ModelKind::Knn;
    s.params.push_back({"metric", Distribution::choice({"manhattan"})});
    s.random_budget = 3;
    auto r = tune(data, s, plan);
    CHECK(r.best.metric == DistanceMetric::Manhattan);
    CHECK(r.best.k == 5);
  }
  SUBCASE("deterministic and inside the space") {
    SearchSpace s = default_space(Hyperparams{ModelKind::Svr, 5, DistanceMetric::Euclidean, 0, 0, 0, 1.0,
                                              KernelParams{KernelKind::Polynomial, 1.0, 3, 0.0}});
    s.random_budget = 4;
    s.grid_points = 2;
    auto a = tune(data, s, plan);
    auto b = tune(data, s, plan);
    CHECK(log_without_times(a) == log_without_times(b));
    CHECK(a.trials.size() == 4 + 32);
    for (const auto& t : a.trials) {
      CHECK(s.params[0].dist.contains(t.hp.C));
      CHECK(s.params[1].dist.contains(t.hp.epsilon));
      CHECK(s.params[2].dist.contains(t.hp.kernel.gamma));
      CHECK(s.params[3].dist.contains(t.hp.kernel.degree));
      CHECK(s.params[4].dist.contains(t.hp.kernel.coef0));
      CHECK(t.score <= a.best_score);
    }
    CHECK(a.trials[a.best_trial].hp == a.best);
  }
  SUBCASE("failing trials are scored -inf and logged") {
    SearchSpace s;
    s.base.kind = ModelKind::Knn;
    s.params.push_back({"k", Distribution::int_range(15, 25)});
    s.random_budget = 3;
    auto r = tune(data, s, plan);
    std::ostringstream log;
    write_search_log(log, r);
    CHECK(log.str().find("KTooLarge") != std::string::npos);
    for (const auto& t : r.trials) {
      if (t.hp.k > 20) CHECK(t.score == -std::numeric_limits<double>::infinity());
    }
    CHECK(r.best.k <= 20);
  }
  SUBCASE("time cap truncates the random stage but keeps a 3-point grid") {
    SearchSpace s = default_space(Hyperparams{ModelKind::KernelRidge, 5, DistanceMetric::Euclidean, 0, 0, 0, 1.0,
                                              KernelParams{KernelKind::Rbf, 1.0, 3, 0.0}});
    s.random_budget = 50;
    s.grid_points = 5;
    auto r = tune(data, s, plan, TuneOptions{0.0});
    std::size_t stage1 = 0, stage2 = 0;
    for (const auto& t : r.trials) (t.stage == 1 ? stage1 : stage2)++;
    CHECK(stage1 == 1);
    CHECK(stage2 >= 4);
    CHECK(stage2 <= 9);
  }
  SUBCASE("k-NN scale is recovered from a 3-NN ground truth") {
    std::mt19937_64 rng(12);
    const Matrix anchors = oracle::random_matrix(rng, 12, 2);
    const Vector anchor_y = oracle::random_vector(rng, 12);
    Dataset d;
    d.X = oracle::random_matrix(rng, 150, 2);
    d.y = oracle::knn_predict(anchors, anchor_y, d.X, 3, true);
    SearchSpace s;
    s.base.kind = ModelKind::Knn;
    s.params.push_back({"k", Distribution::int_range(1, 20)});
    s.params.push_back({"metric", Distribution::choice({"manhattan", "euclidean"})});
    s.random_budget = 20;
    auto r = tune(d, s, CvPlan{5, 0.5, 3});
    CHECK(r.best.k <= 6);
    CHECK(r.best_score > 0.8);
  }
}

TEST_CASE("learning curve") {
  Dataset data = random_dataset(21, 50, 3);
  Hyperparams tree;
  tree.kind = ModelKind::Tree;
  std::vector<double> sizes{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  auto curve = learning_curve(data, tree, sizes, CvPlan{4, 0.5, 1});
  REQUIRE(curve.size() == 9);
  for (const auto& p : curve) {
    CHECK(p.train.mean == doctest::Approx(1.0));
    CHECK(p.train.std >= 0.0);
    CHECK(p.test.std >= 0.0);
    CHECK(p.fit_seconds.std >= 0.0);
  }
  CHECK(curve[0].train_size == 5);
  CHECK(curve[8].train_size == 45);
  std::ostringstream out;
  write_learning_curve_csv(out, curve);
  CHECK(out.str().rfind("train size,train mean,train std,test mean,test std,fit time mean,fit time std\n5,1,0,", 0) ==
        0);
  CHECK_THROWS_AS((void)learning_curve(data, tree, {0.01}, CvPlan{2, 0.5, 1}), Error);
}
