#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdr/cli.hpp"
#include "fdr/demo.hpp"
#include "fdr/error.hpp"
#include "fdr/features.hpp"
#include "fdr/simulator.hpp"
#include "unit/fixtures.hpp"

using namespace fdr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("fdr_cli_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fdr");
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("demo generator") {
  DemoFiles a = generate_demo(4), b = generate_demo(4), c = generate_demo(5);
  CHECK(a.netlist == b.netlist);
  CHECK(a.stimulus == b.stimulus);
  CHECK(a.config == b.config);
  CHECK(a.stimulus != c.stimulus);
  Netlist net = parse_netlist(a.netlist);
  CHECK(net.flip_flop_count() == 79);
  for (auto p : proximity(net, ProximityDirection::ToPrimaryInput)) CHECK(p != kUnreachable);
  Stimulus stim = parse_stimulus(a.stimulus, net);
  CHECK(stim.total_cycles == 200);
  CHECK(generate_demo(1, DemoOptions{16, 4, 4, 64, 5}).netlist.find("stage3_data[15]") != std::string::npos);
  CHECK_THROWS_AS((void)generate_demo(1, DemoOptions{0, 1, 1, 64, 5}), Error);
}

TEST_CASE("command line") {
  TempDir tmp("commands");
  const std::string dir = tmp.path.string();
  REQUIRE(cli({"gen-demo", "--out", dir, "--seed", "2", "--injections", "10"}).code == 0);
  const std::string config = (tmp.path / "demo.toml").string();
  Netlist net = parse_netlist(fixtures::read_file((tmp.path / "demo.net").string()));

  SUBCASE("golden files have one column per output and one row per flip-flop") {
    Run r = cli({"golden", "--config", config});
    REQUIRE(r.code == 0);
    const std::string trace = fixtures::read_file((tmp.path / "results/golden_trace.csv").string());
    const std::string header = trace.substr(0, trace.find('\n'));
    CHECK(static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1 ==
          net.primary_outputs().size());
    CHECK(count_lines(trace) == 201);
    CHECK(count_lines(fixtures::read_file((tmp.path / "results/activity.csv").string())) == 80);
    CHECK(fs::exists(tmp.path / "results/effective-config.toml"));
    const std::string first = trace;
    REQUIRE(cli({"golden", "--config", config}).code == 0);
    CHECK(fixtures::read_file((tmp.path / "results/golden_trace.csv").string()) == first);
  }
  SUBCASE("campaign subset of three flip-flops at 170 injections") {
    std::string text = fixtures::read_file(config);
    text.replace(text.find("injections_per_ff = 10"), 22,
                 "injections_per_ff = 170\nflip_flops = [\"stage0_valid\", \"checksum[3]\", \"counter[0]\"]");
    write(tmp.path / "subset.toml", text);
    Run r = cli({"campaign", "--config", (tmp.path / "subset.toml").string(), "--out", "sub"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("3 flip-flops, 510 runs") != std::string::npos);
    const std::string fdr = fixtures::read_file((tmp.path / "sub/fdr.csv").string());
    CHECK(count_lines(fdr) == 4);
    CHECK(fdr.find("\ncounter[0],170,0,0,0,0\n") != std::string::npos);
  }
  SUBCASE("train-predict and learning curve") {
    std::string text = fixtures::read_file(config);
    text.replace(text.find("[train]"), 7, "[train]\nmodels = [\"ols\", \"knn\", \"tree\"]");
    write(tmp.path / "small.toml", text);
    const std::string small = (tmp.path / "small.toml").string();
    CHECK(cli({"train-predict", "--config", small}).code == 1);  // no campaign yet
    REQUIRE(cli({"campaign", "--config", small}).code == 0);
    Run r = cli({"train-predict", "--config", small});
    REQUIRE(r.code == 0);
    const std::string report = fixtures::read_file((tmp.path / "results/report.csv").string());
    CHECK(count_lines(report) == 4);
    CHECK(report.rfind("model,MAE,MAX,RMSE,EV,R2,trials,training time,fit time,prediction time\nols,", 0) == 0);
    CHECK(fs::exists(tmp.path / "results/models/knn.json"));
    CHECK(fs::exists(tmp.path / "results/tuning/tree.jsonl"));
    CHECK(count_lines(fixtures::read_file((tmp.path / "results/predictions.csv").string())) == 40);

    Run too_few = cli({"train-predict", "--config", small, "--train-fraction", "0.999"});
    CHECK(too_few.code == 1);
    CHECK(too_few.err.find("TooFewTest") != std::string::npos);

    REQUIRE(cli({"learning-curve", "--config", small, "--target", "application"}).code == 0);
    CHECK(count_lines(fixtures::read_file((tmp.path / "results/learning_curve.csv").string())) == 10);
  }
  SUBCASE("exit codes") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"simulate"}).code == 2);
    CHECK(cli({"golden"}).code == 2);
    CHECK(cli({"golden", "--config", (tmp.path / "nope.toml").string()}).code == 2);
    std::string text = fixtures::read_file(config);
    text.replace(text.find("demo.stim"), 9, "missing.stim");
    write(tmp.path / "broken.toml", text);
    Run r = cli({"golden", "--config", (tmp.path / "broken.toml").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("stimulus not found") != std::string::npos);
    CHECK(cli({"train-predict", "--config", config, "--target", "both"}).code == 2);
    write(tmp.path / "bad.net", "module m\ninput a\noutput b\ncell g AND2 1 b a\nendmodule\n");
    text = fixtures::read_file(config);
    text.replace(text.find("demo.net"), 8, "bad.net");
    write(tmp.path / "badnet.toml", text);
    r = cli({"golden", "--config", (tmp.path / "badnet.toml").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("bad.net") != std::string::npos);
    CHECK(r.err.find("line 4") != std::string::npos);
  }
}
