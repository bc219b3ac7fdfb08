#include "fdr/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "fdr/error.hpp"

namespace fdr::ml {

using nlohmann::json;

namespace {

json vec(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

Matrix to_mat(const json& j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector r = to_vec(j[i]);
    if (r.size() != cols) throw Error(Errc::Syntax, "model matrix row has the wrong width");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

json kernel_json(const KernelParams& k) {
  json j{{"kernel", kernel_kind_name(k.kind)}, {"gamma", k.gamma}};
  if (k.kind == KernelKind::Polynomial) j["degree"] = k.degree;
  if (k.kind == KernelKind::Polynomial || k.kind == KernelKind::Sigmoid) j["coef0"] = k.coef0;
  return j;
}

json hp_json(const Hyperparams& hp) {
  json j;
  switch (hp.kind) {
    case ModelKind::Ols: j = json::object(); break;
    case ModelKind::Knn: j = {{"k", hp.k}, {"metric", metric_name(hp.metric)}}; break;
    case ModelKind::Tree:
      j = {{"max_depth", hp.max_depth}, {"max_leaf_nodes", hp.max_leaf_nodes}, {"min_samples_leaf", hp.min_samples_leaf}};
      break;
    case ModelKind::KernelRidge:
      j = kernel_json(hp.kernel);
      j["alpha"] = hp.alpha;
      break;
    case ModelKind::Svr:
      j = kernel_json(hp.kernel);
      j["C"] = hp.C;
      j["epsilon"] = hp.epsilon;
      break;
  }
  return j;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Hyperparams hp_from_json(ModelKind kind, const json& j) {
  Hyperparams hp;
  hp.kind = kind;
  read_opt(j, "k", hp.k);
  if (j.contains("metric")) {
    auto m = metric_from_name(j.at("metric").get<std::string>());
    if (!m) throw Error(Errc::Syntax, "unknown distance metric in model");
    hp.metric = *m;
  }
  read_opt(j, "max_depth", hp.max_depth);
  read_opt(j, "max_leaf_nodes", hp.max_leaf_nodes);
  read_opt(j, "min_samples_leaf", hp.min_samples_leaf);
  read_opt(j, "alpha", hp.alpha);
  read_opt(j, "C", hp.C);
  read_opt(j, "epsilon", hp.epsilon);
  if (j.contains("kernel")) {
    auto k = kernel_kind_from_name(j.at("kernel").get<std::string>());
    if (!k) throw Error(Errc::Syntax, "unknown kernel in model");
    hp.kernel.kind = *k;
  }
  read_opt(j, "gamma", hp.kernel.gamma);
  read_opt(j, "degree", hp.kernel.degree);
  read_opt(j, "coef0", hp.kernel.coef0);
  return hp;
}

json params_json(const TrainedModel::Params& params) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearParams>) {
          return {{"weights", vec(p.weights)}, {"bias", p.bias}};
        } else if constexpr (std::is_same_v<P, NeighborParams>) {
          return {{"rows", mat(p.X)}, {"targets", vec(p.y)}};
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          json nodes = json::array();
          for (const auto& n : p.nodes) {
            nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                             {"right", n.right}, {"value", n.value}, {"samples", n.samples}});
          }
          return {{"nodes", nodes}};
        } else {
          json j{{"support", mat(p.support)}, {"coef", vec(p.coef)}, {"bias", p.bias}, {"support_rows", p.support_rows}};
          if (p.coef_low.size() > 0) j["coef_low"] = vec(p.coef_low);
          return j;
        }
      },
      params);
}

TrainedModel::Params params_from_json(ModelKind kind, const json& j, Eigen::Index cols) {
  switch (kind) {
    case ModelKind::Ols: return LinearParams{to_vec(j.at("weights")), j.at("bias").get<double>()};
    case ModelKind::Knn: return NeighborParams{to_mat(j.at("rows"), cols), to_vec(j.at("targets"))};
    case ModelKind::Tree: {
      TreeParams t;
      for (const auto& n : j.at("nodes")) {
        t.nodes.push_back(TreeNode{n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(),
                                   n.at("right").get<int>(), n.at("value").get<double>(),
                                   n.at("samples").get<std::size_t>()});
      }
      if (t.nodes.empty()) throw Error(Errc::Syntax, "tree model has no nodes");
      return t;
    }
    case ModelKind::KernelRidge:
    case ModelKind::Svr: {
      KernelExpansion e;
      e.support = to_mat(j.at("support"), cols);
      e.coef = to_vec(j.at("coef"));
      if (j.contains("coef_low")) e.coef_low = to_vec(j.at("coef_low"));
      if (e.coef_low.size() > 0 && e.coef_low.size() != e.coef.size()) {
        throw Error(Errc::Syntax, "coef_low length differs from coef");
      }
      if (e.coef.size() != e.support.rows()) throw Error(Errc::Syntax, "coef length differs from support rows");
      e.bias = j.at("bias").get<double>();
      e.support_rows = j.at("support_rows").get<std::vector<std::size_t>>();
      return e;
    }
  }
  throw Error(Errc::Syntax, "unknown model kind");
}

}  // namespace

std::string hyperparams_json(const Hyperparams& hp) { return hp_json(hp).dump(); }

void save_model(std::ostream& out, const TrainedModel& model) {
  json doc{{"schema_version", kModelSchemaVersion},
           {"kind", model_kind_name(model.kind())},
           {"hyperparameters", hp_json(model.hyperparams())},
           {"standardiser", {{"mean", vec(model.standardiser().mean())}, {"scale", vec(model.standardiser().scale())}}},
           {"parameters", params_json(model.params())}};
  if (const auto& r = model.solver_report()) {
    doc["solver"] = {{"converged", r->converged}, {"kkt_violation", r->kkt_violation}, {"updates", r->updates}};
  }
  out << doc.dump(1) << '\n';
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  save_model(out, model);
}

TrainedModel load_model(std::istream& in) {
  try {
    const json doc = json::parse(in);
    if (doc.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw Error(Errc::Syntax, "unsupported model schema version " + doc.at("schema_version").dump());
    }
    const auto kind = model_kind_from_name(doc.at("kind").get<std::string>());
    if (!kind) throw Error(Errc::Syntax, "unknown model kind " + doc.at("kind").dump());
    Hyperparams hp = hp_from_json(*kind, doc.at("hyperparameters"));
    hp.validate();
    Standardiser s(to_vec(doc.at("standardiser").at("mean")), to_vec(doc.at("standardiser").at("scale")));
    if (s.mean().size() != s.scale().size()) throw Error(Errc::Syntax, "standardiser vectors differ in length");
    auto params = params_from_json(*kind, doc.at("parameters"), s.mean().size());
    std::optional<SolverReport> report;
    if (doc.contains("solver")) {
      const auto& r = doc.at("solver");
      report = SolverReport{r.at("converged").get<bool>(), r.at("kkt_violation").get<double>(),
                            r.at("updates").get<std::size_t>(), {}};
    }
    return TrainedModel(std::move(hp), std::move(s), std::move(params), std::move(report));
  } catch (const json::exception& e) {
    throw Error(Errc::Syntax, std::string("malformed model document: ") + e.what());
  }
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  return load_model(in);
}

}  // namespace fdr::ml
