#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <vector>

#include "fdr/regression.hpp"
#include "ml/internal.hpp"

namespace fdr::ml {

std::size_t TreeParams::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t TreeParams::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  // Children always have larger indices than their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

namespace {

constexpr double kPure = 1e-12;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;  // decrease of the summed squared error
  std::vector<std::size_t> left, right;
};

struct Pending {
  int node;
  std::size_t depth;
  std::vector<std::size_t> rows;
  Split split;
};

double mean_of(const Vector& y, const std::vector<std::size_t>& rows) {
  double s = 0.0;
  for (auto r : rows) s += y(static_cast<Eigen::Index>(r));
  return s / static_cast<double>(rows.size());
}

double sse_of(const Vector& y, const std::vector<std::size_t>& rows, double mean) {
  double s = 0.0;
  for (auto r : rows) {
    const double d = y(static_cast<Eigen::Index>(r)) - mean;
    s += d * d;
  }
  return s;
}

Split best_split(const Matrix& Z, const Vector& y, const std::vector<std::size_t>& rows, std::size_t min_leaf) {
  Split best;
  const std::size_t n = rows.size();
  if (n < 2 * min_leaf) return best;
  const double total = std::accumulate(rows.begin(), rows.end(), 0.0,
                                       [&](double a, std::size_t r) { return a + y(static_cast<Eigen::Index>(r)); });
  const double parent = total * total / static_cast<double>(n);
  double best_score = -1.0;

  std::vector<std::size_t> order(rows);
  for (Eigen::Index f = 0; f < Z.cols(); ++f) {
    order = rows;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return Z(static_cast<Eigen::Index>(a), f) < Z(static_cast<Eigen::Index>(b), f);
    });
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += y(static_cast<Eigen::Index>(order[i]));
      const double a = Z(static_cast<Eigen::Index>(order[i]), f);
      const double b = Z(static_cast<Eigen::Index>(order[i + 1]), f);
      const std::size_t nl = i + 1, nr = n - nl;
      if (a == b || nl < min_leaf || nr < min_leaf) continue;
      const double right_sum = total - left_sum;
      // Maximising sum_l^2/n_l + sum_r^2/n_r minimises the children's SSE.
      const double score = left_sum * left_sum / static_cast<double>(nl) + right_sum * right_sum / static_cast<double>(nr);
      const double tol = 1e-12 * std::max(1.0, std::abs(score));
      if (score > best_score + tol) {
        double t = a + (b - a) / 2.0;
        if (!(t >= a && t < b)) t = a;
        best_score = score;
        best.feature = static_cast<int>(f);
        best.threshold = t;
      }
    }
  }
  if (best.feature < 0) return best;
  best.gain = best_score - parent;
  for (auto r : rows) {
    (Z(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? best.left : best.right).push_back(r);
  }
  return best;
}

}  // namespace

TrainedModel fit_tree(const Dataset& train, const Hyperparams& hp) {
  Hyperparams h = hp;
  h.kind = ModelKind::Tree;
  h.validate();
  Matrix Z;
  Standardiser s = standardise(train, Z);
  const Vector& y = train.y;
  const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, h.min_samples_leaf));
  const std::size_t max_depth = h.max_depth > 0 ? static_cast<std::size_t>(h.max_depth) : SIZE_MAX;
  const std::size_t max_leaves = h.max_leaf_nodes > 0 ? static_cast<std::size_t>(h.max_leaf_nodes) : SIZE_MAX;

  TreeParams tree;
  auto make_node = [&](const std::vector<std::size_t>& rows) {
    TreeNode node;
    node.value = mean_of(y, rows);
    node.samples = rows.size();
    tree.nodes.push_back(node);
    return static_cast<int>(tree.nodes.size() - 1);
  };

  // Best-first growth: the open leaf with the largest gain is split next,
  // ties going to the earlier node.
  auto cmp = [](const Pending& a, const Pending& b) {
    if (a.split.gain != b.split.gain) return a.split.gain < b.split.gain;
    return a.node > b.node;
  };
  std::priority_queue<Pending, std::vector<Pending>, decltype(cmp)> open(cmp);
  auto consider = [&](int node, std::size_t depth, std::vector<std::size_t> rows) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (depth >= max_depth) return;
    if (sse_of(y, rows, n.value) / static_cast<double>(rows.size()) <= kPure) return;
    Split split = best_split(Z, y, rows, min_leaf);
    if (split.feature < 0) return;
    open.push(Pending{node, depth, std::move(rows), std::move(split)});
  };

  std::vector<std::size_t> all(train.rows());
  std::iota(all.begin(), all.end(), 0);
  consider(make_node(all), 0, all);
  std::size_t leaves = 1;
  while (!open.empty() && leaves < max_leaves) {
    Pending p = open.top();
    open.pop();
    const int l = make_node(p.split.left);
    const int r = make_node(p.split.right);
    TreeNode& parent = tree.nodes[static_cast<std::size_t>(p.node)];
    parent.feature = p.split.feature;
    parent.threshold = p.split.threshold;
    parent.left = l;
    parent.right = r;
    ++leaves;
    consider(l, p.depth + 1, std::move(p.split.left));
    consider(r, p.depth + 1, std::move(p.split.right));
  }
  return TrainedModel(h, std::move(s), std::move(tree));
}

Vector tree_predict(const TreeParams& params, const Matrix& queries) {
  Vector out(queries.rows());
  for (Eigen::Index r = 0; r < queries.rows(); ++r) {
    const TreeNode* n = &params.nodes.front();
    while (!n->is_leaf()) {
      n = &params.nodes[static_cast<std::size_t>(queries(r, n->feature) <= n->threshold ? n->left : n->right)];
    }
    out(r) = n->value;
  }
  return out;
}

}  // namespace fdr::ml
