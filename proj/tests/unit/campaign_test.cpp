#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "fdr/campaign.hpp"
#include "fdr/error.hpp"
#include "unit/fixtures.hpp"

using namespace fdr;

namespace {

// Shift register with a valid strobe output that is always 1.
constexpr const char* kShiftStrobed = R"(
module shiftv
input in v
output q2 vout
wire q0 q1
dff ff0 1 q0 in
dff ff1 1 q1 q0
dff ff2 1 q2 q1
cell vb BUF 1 vout v
endmodule
)";

OutputTrace make_trace(std::size_t cycles, std::size_t width, const std::vector<std::vector<int>>& rows) {
  OutputTrace t(cycles, width);
  for (std::size_t c = 0; c < rows.size(); ++c) {
    for (std::size_t i = 0; i < width; ++i) t.row(c)[i] = static_cast<std::uint8_t>(rows[c][i]);
  }
  return t;
}

std::map<std::string, FdrRecord> by_name(const CampaignResult& r) {
  std::map<std::string, FdrRecord> out;
  for (const auto& rec : r.records) out[rec.name] = rec;
  return out;
}

}  // namespace

TEST_CASE("plan_campaign") {
  Netlist net = parse_netlist(fixtures::kShift3);
  Stimulus stim = parse_stimulus("cycles 50\nactive 10 40\n", net);

  SUBCASE("deterministic per seed and within the window") {
    auto a = plan_campaign(net, stim, 170, 42);
    auto b = plan_campaign(net, stim, 170, 42);
    CHECK(a.injection_cycles == b.injection_cycles);
    CHECK(a.total_runs() == 510);
    for (const auto& cycles : a.injection_cycles) {
      CHECK(cycles.size() == 170);
      for (auto c : cycles) CHECK((c >= 10 && c <= 40));
    }
    auto c = plan_campaign(net, stim, 170, 43);
    CHECK(c.injection_cycles != a.injection_cycles);
  }
  SUBCASE("per-flip-flop streams ignore target order") {
    auto all = plan_campaign(net, stim, 30, 7);
    auto sub = plan_campaign(net, stim, 30, 7, std::vector<std::size_t>{2, 0});
    CHECK(sub.injection_cycles[0] == all.injection_cycles[2]);
    CHECK(sub.injection_cycles[1] == all.injection_cycles[0]);
  }
  SUBCASE("single-cycle window") {
    Stimulus one = parse_stimulus("cycles 10\nactive 5 5\n", net);
    for (const auto& cycles : plan_campaign(net, one, 20, 1).injection_cycles) {
      CHECK(std::all_of(cycles.begin(), cycles.end(), [](std::size_t c) { return c == 5; }));
    }
  }
  SUBCASE("errors") {
    Stimulus empty = parse_stimulus("cycles 0\n", net);
    try {
      (void)plan_campaign(net, empty, 10, 1);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::EmptyActiveWindow);
    }
    CHECK_THROWS_AS((void)plan_campaign(net, stim, 0, 1), Error);
    CHECK_THROWS_AS((void)plan_campaign(net, stim, 1, 1, std::vector<std::size_t>{3}), Error);
  }
}

TEST_CASE("classify_run") {
  // outputs: payload p0 p1, status s, valid v
  CheckerConfig checker{{0, 1}, 3};
  const auto golden = make_trace(4, 4, {{0, 0, 0, 0}, {1, 0, 0, 1}, {0, 1, 1, 0}, {1, 1, 0, 1}});

  CHECK(classify_run(golden, golden, checker, 0) == FailureClass::None);

  auto payload = golden;
  payload.row(1)[0] = 0;
  CHECK(classify_run(golden, payload, checker, 0) == FailureClass::OutputAndApplication);

  auto status = golden;
  status.row(2)[2] = 0;
  CHECK(classify_run(golden, status, checker, 0) == FailureClass::Output);

  auto idle_payload = golden;  // payload changes while valid = 0: not accepted
  idle_payload.row(2)[1] = 0;
  CHECK(classify_run(golden, idle_payload, checker, 0) == FailureClass::Output);

  auto stalled = golden;  // last word never accepted
  stalled.row(3)[3] = 0;
  CHECK(classify_run(golden, stalled, checker, 0) == FailureClass::OutputAndApplication);

  auto extra = golden;  // spurious accept
  extra.row(2)[3] = 1;
  CHECK(classify_run(golden, extra, checker, 0) == FailureClass::OutputAndApplication);

  // Differences before the injection cycle are not counted.
  CHECK(classify_run(golden, payload, checker, 2) == FailureClass::None);

  CHECK_THROWS_AS((void)classify_run(golden, OutputTrace(3, 4), checker, 0), Error);
  CHECK_THROWS_AS((void)classify_run(golden, golden, CheckerConfig{{7}, 0}, 0), Error);
}

TEST_CASE("FDR arithmetic") {
  FdrRecord r;
  r.runs = 170;
  r.output_failures = 17;
  r.application_failures = 0;
  CHECK(r.fdr_output() == 0.1);
  CHECK(r.fdr_application() == 0.0);
}

TEST_CASE("unobservable flip-flops have zero FDR") {
  Netlist net = parse_netlist(fixtures::kRing3);
  Stimulus stim = parse_stimulus("cycles 40\nactive 0 39\n@3 unused=1\n", net);
  auto checker = make_checker(net, {}, "probe");
  auto result = run_campaign(net, stim, plan_campaign(net, stim, 50, 3), checker);
  for (const auto& r : result.records) {
    CHECK(r.runs == 50);
    CHECK(r.output_failures == 0);
    CHECK(r.fdr_output() == 0.0);
  }
}

TEST_CASE("shift register exhaustive campaign matches hand count") {
  Netlist net = parse_netlist(kShiftStrobed);
  Stimulus stim = parse_stimulus("cycles 20\n@0 v=1\n", net);
  auto checker = make_checker(net, {"q2"}, "vout");
  auto result = run_campaign(net, stim, plan_exhaustive(net, stim), checker);
  // A flip of ff_k at t shows on q2 at cycle t + 3 - k, which must be < 20.
  auto rec = by_name(result);
  CHECK(rec["ff0"].output_failures == 17);
  CHECK(rec["ff1"].output_failures == 18);
  CHECK(rec["ff2"].output_failures == 19);
  for (auto& [name, r] : rec) {
    CHECK(r.runs == 20);
    CHECK(r.application_failures == r.output_failures);
  }
  CHECK(result.total_runs == 60);
}

TEST_CASE("campaign table is independent of execution order and thread count") {
  Netlist net = parse_netlist(fixtures::read_file(fixtures::data_path("fixture6.net")));
  Stimulus stim = parse_stimulus(fixtures::read_file(fixtures::data_path("fixture6.stim")), net);
  auto checker = make_checker(net, {"dout"}, "valid");
  auto plan = plan_campaign(net, stim, 40, 11);
  auto base = by_name(run_campaign(net, stim, plan, checker, {1}));

  CampaignPlan permuted = plan;
  std::reverse(permuted.target_ffs.begin(), permuted.target_ffs.end());
  std::reverse(permuted.injection_cycles.begin(), permuted.injection_cycles.end());
  for (auto& cycles : permuted.injection_cycles) std::reverse(cycles.begin(), cycles.end());
  CHECK(by_name(run_campaign(net, stim, permuted, checker, {3})) == base);

  for (const auto& [name, r] : base) CHECK(r.application_failures <= r.output_failures);

  auto other_seed = run_campaign(net, stim, plan_campaign(net, stim, 40, 12), checker);
  CHECK(other_seed.records.size() == base.size());
}

TEST_CASE("FDR CSV round trip") {
  Netlist net = parse_netlist(fixtures::kShift3);
  std::vector<FdrRecord> recs{{0, "ff0", 10, 4, 1}, {2, "ff2", 10, 10, 7}};
  std::stringstream ss;
  write_fdr_csv(ss, recs);
  CHECK(ss.str() ==
        "ff_name,runs,output_failures,application_failures,fdr_output,fdr_application\n"
        "ff0,10,4,1,0.4,0.1\nff2,10,10,7,1,0.7\n");
  CHECK(read_fdr_csv(ss, net) == recs);
}
