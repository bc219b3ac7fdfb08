#include "fdr/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fdr/campaign.hpp"
#include "fdr/config.hpp"
#include "fdr/demo.hpp"
#include "fdr/error.hpp"
#include "fdr/evaluation.hpp"
#include "fdr/features.hpp"
#include "fdr/model_io.hpp"
#include "fdr/random.hpp"

namespace fdr {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSplitStream = 0x5B117;

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

// Re-raises a parse error with the file name in front.
template <typename F>
auto with_file(const fs::path& path, F&& f) {
  try {
    return f(read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail(), e.line());
  }
}

struct Design {
  RunConfig config;
  Netlist net;
  Stimulus stim;
};

Design load_design(const std::string& config_path, const Overrides& overrides) {
  RunConfig config = load_run_config(config_path, overrides);
  Netlist net = with_file(config.netlist_path(), [](const std::string& t) { return parse_netlist(t); });
  Stimulus stim =
      with_file(config.stimulus_path(), [&](const std::string& t) { return parse_stimulus(t, net); });
  fs::create_directories(config.out_path());
  write_text(config.out_path() / "effective-config.toml", effective_config(config));
  return {std::move(config), std::move(net), std::move(stim)};
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// ---------------------------------------------------------------------------

void cmd_golden(const Design& d, std::ostream& out) {
  const auto result = simulate(d.net, d.stim);
  const fs::path dir = d.config.out_path();
  auto trace = open_out(dir / "golden_trace.csv");
  write_trace_csv(trace, d.net, result.trace);
  auto activity = open_out(dir / "activity.csv");
  write_activity_csv(activity, d.net, result.activity);
  out << fmt::format("golden: {} cycles, {} outputs, {} flip-flops -> {}\n", d.stim.total_cycles,
                     d.net.primary_outputs().size(), d.net.flip_flop_count(), dir.string());
}

CheckerConfig checker_of(const Design& d) {
  if (d.config.valid.empty()) throw Error(Errc::Config, "[checker] valid is required");
  if (d.config.payload.empty()) throw Error(Errc::Config, "[checker] payload is required");
  return make_checker(d.net, d.config.payload, d.config.valid);
}

void cmd_campaign(const Design& d, std::ostream& out) {
  const CheckerConfig checker = checker_of(d);
  std::optional<std::vector<std::size_t>> targets;
  if (!d.config.flip_flops.empty()) {
    targets.emplace();
    for (const auto& name : d.config.flip_flops) {
      auto ord = d.net.find_flip_flop(name);
      if (!ord) throw Error(Errc::UnknownFlipFlop, "campaign flip-flop '" + name + "' is not in the netlist");
      targets->push_back(*ord);
    }
  }
  const auto plan = plan_campaign(d.net, d.stim, d.config.injections_per_ff, d.config.campaign_seed, targets);
  const auto result = run_campaign(d.net, d.stim, plan, checker, CampaignOptions{d.config.threads});
  auto file = open_out(d.config.out_path() / "fdr.csv");
  write_fdr_csv(file, result.records);
  out << fmt::format("campaign: {} flip-flops, {} runs in {:.2f} s -> {}\n", result.records.size(),
                     result.total_runs, result.wall_seconds, (d.config.out_path() / "fdr.csv").string());
}

FeatureTable features_of(const Design& d) { return extract_features(d.net, simulate(d.net, d.stim).activity); }

void cmd_features(const Design& d, std::ostream& out) {
  const FeatureTable table = features_of(d);
  auto file = open_out(d.config.out_path() / "features.csv");
  write_features_csv(file, table);
  out << fmt::format("features: {} flip-flops x {} features in {:.3f} s\n", table.rows.size(), kFeatureCount,
                     table.wall_seconds);
}

// Feature rows joined with the campaign's FDR table, in FDR-table order.
ml::Dataset fdr_dataset(const Design& d, Target target) {
  const fs::path fdr_path = d.config.out_path() / "fdr.csv";
  if (!fs::exists(fdr_path)) throw Error(Errc::Io, fdr_path.string() + " not found; run the campaign first");
  std::ifstream in(fdr_path);
  const auto records = read_fdr_csv(in, d.net);
  const FeatureTable table = features_of(d);
  ml::Dataset data;
  data.X.resize(static_cast<Eigen::Index>(records.size()), kFeatureCount);
  data.y.resize(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto values = table.rows[records[i].ff].values();
    for (std::size_t j = 0; j < kFeatureCount; ++j) data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[j];
    data.y(static_cast<Eigen::Index>(i)) =
        target == Target::Output ? records[i].fdr_output() : records[i].fdr_application();
    data.ids.push_back(records[i].name);
  }
  return data;
}

std::string optional_cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

void cmd_train_predict(const Design& d, std::ostream& out) {
  const RunConfig& c = d.config;
  const ml::Dataset data = fdr_dataset(d, c.target);
  const std::size_t n = data.rows();
  const auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * c.train_fraction));
  if (n - std::min(n, n_train) < 2) {
    throw Error(Errc::TooFewTest, fmt::format("train fraction {} of {} flip-flops leaves {} test rows",
                                              c.train_fraction, n, n - std::min(n, n_train)));
  }
  if (n_train < 2) throw Error(Errc::TooFewRows, fmt::format("only {} training flip-flops", n_train));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(c.seed, kSplitStream));
  rng.shuffle(std::span(perm));
  const std::vector<std::size_t> train_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<std::size_t> test_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  const ml::Dataset train = data.subset(train_rows), test = data.subset(test_rows);

  const fs::path dir = c.out_path();
  auto report = open_out(dir / "report.csv");
  report << "model,MAE,MAX,RMSE,EV,R2,trials,training time,fit time,prediction time\n";
  std::vector<ml::Vector> predictions;
  fs::create_directories(dir / "models");
  const auto started = std::chrono::steady_clock::now();
  for (std::size_t m = 0; m < c.models.size(); ++m) {
    const ModelConfig& model = c.models[m];
    const double left = std::max(0.0, c.time_budget_seconds - seconds_since(started));
    const ml::TuneResult tuned =
        ml::tune(train, model.space, c.cv, ml::TuneOptions{left / static_cast<double>(c.models.size() - m)});
    auto log = open_out(dir / "tuning" / (model.id + ".jsonl"));
    ml::write_search_log(log, tuned);

    const auto fit_start = std::chrono::steady_clock::now();
    const ml::TrainedModel fitted = ml::fit(train, tuned.best);
    const double fit_seconds = seconds_since(fit_start);
    ml::save_model(dir / "models" / (model.id + ".json"), fitted);
    const ml::Prediction pred = ml::predict(fitted, test.X);
    const ml::Scores s = ml::metrics(test.y, pred.values);
    report << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", model.id, s.mae, s.max_abs, s.rmse, optional_cell(s.ev),
                          optional_cell(s.r2), tuned.trials.size(), tuned.seconds, fit_seconds, pred.seconds);
    predictions.push_back(pred.values);
    out << fmt::format("train-predict: {:<12} r2 {:>8} after {} trials ({:.1f} s)\n", model.id,
                       s.r2 ? fmt::format("{:.4f}", *s.r2) : "n/a", tuned.trials.size(), tuned.seconds);
  }

  auto pred_file = open_out(dir / "predictions.csv");
  pred_file << "ff_name,actual";
  for (const auto& model : c.models) pred_file << ',' << model.id;
  pred_file << '\n';
  for (std::size_t i = 0; i < test.rows(); ++i) {
    pred_file << fmt::format("{},{}", test.ids[i], test.y(static_cast<Eigen::Index>(i)));
    for (const auto& p : predictions) pred_file << fmt::format(",{}", p(static_cast<Eigen::Index>(i)));
    pred_file << '\n';
  }
  out << fmt::format("train-predict: {} train / {} test flip-flops -> {}\n", train.rows(), test.rows(),
                     (dir / "report.csv").string());
}

void cmd_learning_curve(const Design& d, std::ostream& out) {
  const RunConfig& c = d.config;
  const ml::Dataset data = fdr_dataset(d, c.target);
  ml::Hyperparams hp = model_base(c.curve_model);
  for (const auto& m : c.models) {
    if (m.id == c.curve_model) hp = m.space.base;
  }
  // Prefer the tuned hyperparameters of an earlier train-predict run.
  const fs::path saved = c.out_path() / "models" / (c.curve_model + ".json");
  std::string source = "configured";
  if (fs::exists(saved)) {
    hp = ml::load_model(saved).hyperparams();
    source = "tuned";
  }
  const auto curve = ml::learning_curve(data, hp, c.curve_sizes, c.cv);
  auto file = open_out(c.out_path() / "learning_curve.csv");
  ml::write_learning_curve_csv(file, curve);
  out << fmt::format("learning-curve: {} ({} hyperparameters), {} sizes -> {}\n", c.curve_model, source,
                     curve.size(), (c.out_path() / "learning_curve.csv").string());
}

void cmd_gen_demo(std::uint64_t seed, const DemoOptions& options, const fs::path& dir, std::ostream& out) {
  const DemoFiles files = generate_demo(seed, options);
  fs::create_directories(dir);
  write_text(dir / "demo.net", files.netlist);
  write_text(dir / "demo.stim", files.stimulus);
  write_text(dir / "demo.toml", files.config);
  out << fmt::format("gen-demo: seed {} -> {}\n", seed, (dir / "demo.toml").string());
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flip-flop functional de-rating: fault campaigns and FDR prediction", "fdr"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> target;
  std::optional<double> train_fraction;
  DemoOptions demo;

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Design&, std::ostream&);
  };
  const Command commands[] = {
      {"golden", "fault-free simulation: golden trace and activity CSVs", cmd_golden},
      {"campaign", "fault-injection campaign: FDR table", cmd_campaign},
      {"features", "per-flip-flop feature table", cmd_features},
      {"train-predict", "tune, train and evaluate every configured model", cmd_train_predict},
      {"learning-curve", "learning curve of one model", cmd_learning_curve},
  };
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [paths] out)");
    sub->add_option("--seed", seed, "global seed override");
    if (std::string_view(cmd.name) == "train-predict" || std::string_view(cmd.name) == "learning-curve") {
      sub->add_option("--target", target, "output or application")->check(CLI::IsMember({"output", "application"}));
    }
    if (std::string_view(cmd.name) == "train-predict") {
      sub->add_option("--train-fraction", train_fraction, "fraction of flip-flops used for training");
    }
  }
  CLI::App* gen = app.add_subcommand("gen-demo", "write a demo netlist, stimulus and config");
  gen->add_option("--out", out_dir, "destination directory (default: current directory)");
  gen->add_option("--seed", seed, "generator seed (default 1)");
  gen->add_option("--width", demo.width, "payload width")->check(CLI::PositiveNumber);
  gen->add_option("--stages", demo.stages, "input pipeline stages")->check(CLI::PositiveNumber);
  gen->add_option("--cycles", demo.cycles, "stimulus length")->check(CLI::Range(20, 1000000));
  gen->add_option("--injections", demo.injections_per_ff, "campaign injections per flip-flop")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  if (!argv.empty()) argv.pop_back();  // program name
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) {
      cmd_gen_demo(seed.value_or(1), demo, out_dir.value_or("."), out);
      return 0;
    }
    for (const auto& cmd : commands) {
      if (!app.got_subcommand(cmd.name)) continue;
      const Design d = load_design(config_path, Overrides{out_dir, seed, target, train_fraction});
      cmd.run(d, out);
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::Config ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fdr
