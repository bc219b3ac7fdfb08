#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fdr/campaign.hpp"
#include "fdr/cli.hpp"
#include "fdr/config.hpp"
#include "fdr/demo.hpp"
#include "fdr/error.hpp"
#include "fdr/evaluation.hpp"
#include "fdr/features.hpp"
#include "fdr/model_io.hpp"
#include "fdr/netlist.hpp"
#include "fdr/regression.hpp"
#include "fdr/simulator.hpp"

namespace py = pybind11;
using namespace fdr;

namespace {

std::vector<std::string> net_names(const Netlist& net, const std::vector<NetId>& ids) {
  std::vector<std::string> out;
  for (auto id : ids) out.push_back(net.net_name(id));
  return out;
}

ml::Hyperparams hyperparams(const std::string& model, const py::kwargs& params) {
  ml::Hyperparams hp = model_base(model);
  for (const auto& [key, value] : params) {
    const auto name = py::cast<std::string>(key);
    if (py::isinstance<py::str>(value)) ml::set_hyperparam(hp, name, py::cast<std::string>(value));
    else ml::set_hyperparam(hp, name, py::cast<double>(value));
  }
  hp.validate();
  return hp;
}

ml::Dataset dataset(const ml::Matrix& X, const ml::Vector& y) {
  ml::Dataset d{X, y, {}};
  d.validate();
  return d;
}

py::dict summary(const ml::Summary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["std"] = s.std;
  d["count"] = s.count;
  return d;
}

py::object optional(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

}  // namespace

PYBIND11_MODULE(fdrsim, m) {
  m.doc() = "Functional de-rating prediction: netlist simulation, fault campaigns, features and regression.";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(error.ptr())(e.what());
      inst.attr("code") = std::string(errc_name(e.code()));
      inst.attr("line") = e.line();
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  py::class_<Netlist>(m, "Netlist")
      .def_property_readonly("name", &Netlist::name)
      .def_property_readonly("inputs", [](const Netlist& n) { return net_names(n, n.primary_inputs()); })
      .def_property_readonly("outputs", [](const Netlist& n) { return net_names(n, n.primary_outputs()); })
      .def_property_readonly("flip_flops",
                             [](const Netlist& n) {
                               std::vector<std::string> out;
                               for (std::size_t i = 0; i < n.flip_flop_count(); ++i) out.push_back(n.flip_flop(i).name);
                               return out;
                             })
      .def("__str__", &unparse_netlist);
  m.def("parse_netlist", &parse_netlist, py::arg("text"));

  py::class_<Stimulus>(m, "Stimulus")
      .def_readonly("total_cycles", &Stimulus::total_cycles)
      .def_property_readonly("active_window", [](const Stimulus& s) -> py::object {
        if (!s.active_window) return py::none();
        return py::make_tuple(s.active_window->start, s.active_window->end);
      });
  m.def("parse_stimulus", &parse_stimulus, py::arg("text"), py::arg("netlist"));

  m.def(
      "simulate",
      [](const Netlist& net, const Stimulus& stim, std::optional<std::pair<std::size_t, std::size_t>> fault) {
        std::optional<Fault> f;
        if (fault) f = Fault{fault->first, fault->second};
        const SimulationResult r = simulate(net, stim, f);
        py::array_t<std::uint8_t> trace({r.trace.cycles(), r.trace.width()});
        auto view = trace.mutable_unchecked<2>();
        for (std::size_t t = 0; t < r.trace.cycles(); ++t) {
          for (std::size_t o = 0; o < r.trace.width(); ++o) view(t, o) = r.trace.bit(t, o);
        }
        std::vector<std::size_t> toggles, ones;
        for (const auto& a : r.activity.per_ff) {
          toggles.push_back(a.toggle_count);
          ones.push_back(a.cycles_at_one);
        }
        py::dict d;
        d["trace"] = trace;
        d["toggles"] = toggles;
        d["cycles_at_one"] = ones;
        return d;
      },
      py::arg("netlist"), py::arg("stimulus"), py::arg("fault") = py::none(),
      "Output trace (cycles x outputs) and per flip-flop activity. fault = (ff ordinal, cycle).");

  m.def(
      "run_campaign",
      [](const Netlist& net, const Stimulus& stim, const std::vector<std::string>& payload, const std::string& valid,
         std::size_t injections_per_ff, std::uint64_t seed, bool exhaustive,
         std::optional<std::vector<std::string>> flip_flops, unsigned threads) {
        std::optional<std::vector<std::size_t>> targets;
        if (flip_flops) {
          targets.emplace();
          for (const auto& name : *flip_flops) {
            auto ff = net.find_flip_flop(name);
            if (!ff) throw Error(Errc::UnknownFlipFlop, "unknown flip-flop '" + name + "'");
            targets->push_back(*ff);
          }
        }
        const CampaignPlan plan = exhaustive ? plan_exhaustive(net, stim, targets)
                                             : plan_campaign(net, stim, injections_per_ff, seed, targets);
        py::list rows;
        for (const auto& r : run_campaign(net, stim, plan, make_checker(net, payload, valid), {threads}).records) {
          py::dict d;
          d["name"] = r.name;
          d["runs"] = r.runs;
          d["output_failures"] = r.output_failures;
          d["application_failures"] = r.application_failures;
          d["fdr_output"] = r.fdr_output();
          d["fdr_application"] = r.fdr_application();
          rows.append(d);
        }
        return rows;
      },
      py::arg("netlist"), py::arg("stimulus"), py::arg("payload"), py::arg("valid"),
      py::arg("injections_per_ff") = kDefaultInjectionsPerFf, py::arg("seed") = 0, py::arg("exhaustive") = false,
      py::arg("flip_flops") = py::none(), py::arg("threads") = 0);

  m.def(
      "extract_features",
      [](const Netlist& net, const Stimulus& stim) {
        const FeatureTable table = extract_features(net, simulate(net, stim).activity);
        ml::Matrix X(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(kFeatureCount));
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
          const auto v = table.rows[i].values();
          for (std::size_t j = 0; j < kFeatureCount; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
        }
        std::vector<std::string> names(feature_names().begin(), feature_names().end());
        py::dict d;
        d["flip_flops"] = table.ff_names;
        d["names"] = names;
        d["values"] = X;
        return d;
      },
      py::arg("netlist"), py::arg("stimulus"), "Feature matrix (flip-flops x features) from a golden run.");

  py::class_<ml::TrainedModel>(m, "Model")
      .def_property_readonly("kind", [](const ml::TrainedModel& t) { return std::string(ml::model_kind_name(t.kind())); })
      .def_property_readonly("hyperparameters",
                             [](const ml::TrainedModel& t) {
                               return py::module_::import("json").attr("loads")(ml::hyperparams_json(t.hyperparams()));
                             })
      .def_property_readonly("converged",
                             [](const ml::TrainedModel& t) -> py::object {
                               return t.solver_report() ? py::cast(t.solver_report()->converged) : py::none();
                             })
      .def("predict", [](const ml::TrainedModel& t, const ml::Matrix& X) { return t.predict(X); }, py::arg("X"))
      .def("predict_unclipped", &ml::TrainedModel::predict_unclipped, py::arg("X"))
      .def("to_json",
           [](const ml::TrainedModel& t) {
             std::ostringstream s;
             ml::save_model(s, t);
             return s.str();
           })
      .def_static(
          "from_json",
          [](const std::string& text) {
            std::istringstream s(text);
            return ml::load_model(s);
          },
          py::arg("text"));

  m.def("model_ids", &model_ids);
  m.def(
      "fit",
      [](const ml::Matrix& X, const ml::Vector& y, const std::string& model, const py::kwargs& params) {
        return ml::fit(dataset(X, y), hyperparams(model, params));
      },
      py::arg("X"), py::arg("y"), py::arg("model") = "ols",
      "Fits a model id (see model_ids()); keyword arguments set hyperparameters.");

  m.def(
      "metrics",
      [](const ml::Vector& y_true, const ml::Vector& y_pred) {
        const ml::Scores s = ml::metrics(y_true, y_pred);
        py::dict d;
        d["mae"] = s.mae;
        d["max_abs"] = s.max_abs;
        d["rmse"] = s.rmse;
        d["ev"] = optional(s.ev);
        d["r2"] = optional(s.r2);
        return d;
      },
      py::arg("y_true"), py::arg("y_pred"));

  m.def(
      "cv_evaluate",
      [](const ml::Matrix& X, const ml::Vector& y, const std::string& model, int folds, double train_fraction,
         std::uint64_t seed, const py::kwargs& params) {
        const ml::CvResult r =
            ml::cv_evaluate(dataset(X, y), hyperparams(model, params), ml::CvPlan{folds, train_fraction, seed});
        py::dict d;
        d["train_r2"] = summary(r.train_r2);
        d["test_r2"] = summary(r.test_r2);
        d["fit_seconds"] = summary(r.fit_seconds);
        return d;
      },
      py::arg("X"), py::arg("y"), py::arg("model") = "ols", py::arg("folds") = 10, py::arg("train_fraction") = 0.5,
      py::arg("seed") = 0);

  m.def(
      "generate_demo",
      [](std::uint64_t seed, std::size_t width, std::size_t stages, std::size_t cycles, std::size_t injections) {
        DemoOptions o;
        o.width = width;
        o.stages = stages;
        o.cycles = cycles;
        o.injections_per_ff = injections;
        const DemoFiles f = generate_demo(seed, o);
        py::dict d;
        d["netlist"] = f.netlist;
        d["stimulus"] = f.stimulus;
        d["config"] = f.config;
        return d;
      },
      py::arg("seed") = 1, py::arg("width") = DemoOptions{}.width, py::arg("stages") = DemoOptions{}.stages,
      py::arg("cycles") = DemoOptions{}.cycles, py::arg("injections") = DemoOptions{}.injections_per_ff);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "fdr");
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in process; returns (exit code, stdout, stderr).");
}
