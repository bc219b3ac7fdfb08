#include <doctest.h>

#include <regex>
#include <sstream>

#include "fdr/error.hpp"
#include "fdr/features.hpp"
#include "unit/fixtures.hpp"

using namespace fdr;

namespace {

FeatureTable features_of(const Netlist& net, std::size_t cycles = 16) {
  auto stim = parse_stimulus("cycles " + std::to_string(cycles) + "\n", net);
  return extract_features(net, simulate(net, stim).activity);
}

}  // namespace

TEST_CASE("isolated pass-through flip-flop") {
  Netlist net = parse_netlist(fixtures::kPassThrough);
  const FeatureVector f = features_of(net).rows.at(0);
  CHECK(f.ff_fanin == 1);
  CHECK(f.ff_fanout == 1);
  CHECK(f.conn_from_ffs == 0);
  CHECK(f.conn_to_ffs == 0);
  CHECK(f.comb_depth == 0);
  CHECK(f.comb_fanin == 0);
  CHECK(f.pi_proximity == 0);
  CHECK(f.po_proximity == 0);
  CHECK(f.from_pi);
  CHECK(f.to_po);
  CHECK_FALSE(f.has_feedback);
  CHECK(f.feedback_depth == 0);
  CHECK(f.drive_strength == 2);
}

TEST_CASE("ring of three has feedback depth three") {
  Netlist net = parse_netlist(fixtures::kRing3);
  for (const auto& f : features_of(net).rows) {
    CHECK(f.has_feedback);
    CHECK(f.feedback_depth == 3);
    CHECK(f.po_proximity == kUnreachable);
    CHECK_FALSE(f.to_po);
    CHECK_FALSE(f.from_pi);
    CHECK(f.comb_fanin == 1);
    CHECK(f.comb_fanout == 1);
    CHECK(f.conn_from_ffs == 1);
    CHECK(f.conn_to_ffs == 1);
  }
}

TEST_CASE("self loop and AND tree") {
  const FeatureVector lfsr = features_of(parse_netlist(fixtures::kLfsr)).rows.at(0);
  CHECK(lfsr.has_feedback);
  CHECK(lfsr.feedback_depth == 1);
  CHECK(lfsr.ff_fanin == 2);
  CHECK(lfsr.conn_from_ffs == 1);
  CHECK(lfsr.ff_fanout == 2);  // itself and the output
  CHECK(lfsr.comb_depth == 1);

  const FeatureVector tree = features_of(parse_netlist(fixtures::kAndTree)).rows.at(0);
  CHECK(tree.comb_fanin == 3);
  CHECK(tree.comb_depth == 3);
  CHECK(tree.ff_fanin == 4);
  CHECK(tree.drive_strength == 4);
}

TEST_CASE("proximity along a pipeline") {
  Netlist net = parse_netlist(fixtures::kShift3);
  auto to_pi = proximity(net, ProximityDirection::ToPrimaryInput);
  auto to_po = proximity(net, ProximityDirection::ToPrimaryOutput);
  CHECK(to_pi == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(to_po == std::vector<std::uint32_t>{2, 1, 0});
}

TEST_CASE("bus detection") {
  CHECK(bus_detect({"q[0]", "q[1]"}) == std::vector<BusInfo>{{true, 0, 2}, {true, 1, 2}});
  CHECK(bus_detect({"q[0]"}) == std::vector<BusInfo>{{false, 0, 1}});
  CHECK(bus_detect({"a[0]", "a[2]", "a[7]"}) == std::vector<BusInfo>{{true, 0, 3}, {true, 2, 3}, {true, 7, 3}});
  CHECK(bus_detect({"x", "b[1]", "c[1]", "b[3]"}) ==
        std::vector<BusInfo>{{false, 0, 1}, {true, 1, 2}, {false, 0, 1}, {true, 3, 2}});

  std::vector<std::string> data;
  for (int i = 0; i < 8; ++i) data.push_back("data[" + std::to_string(i) + "]");
  CHECK(bus_detect(data)[5] == BusInfo{true, 5, 8});
}

TEST_CASE("missing activity is reported") {
  Netlist net = parse_netlist(fixtures::kShift3);
  ActivityStats stats{10, {{}, {}}};
  try {
    (void)extract_features(net, stats);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingActivity);
    CHECK(std::string(e.what()).find("ff2") != std::string::npos);
  }
}

TEST_CASE("property: feature invariants on random circuits") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Netlist net = fixtures::random_netlist(seed, 3, 8, 30, 4);
    std::string stim_text = "cycles 40\n@0 pi0=1\n@4 pi1=1\n@9 pi0=0 pi2=1\n@21 pi1=0\n";
    auto activity = simulate(net, parse_stimulus(stim_text, net)).activity;
    FeatureTable t = extract_features(net, activity);
    REQUIRE(t.rows.size() == net.flip_flop_count());
    std::uint64_t to_sum = 0, from_sum = 0;
    for (const auto& f : t.rows) {
      CHECK(f.conn_from_ffs <= f.ff_fanin);
      CHECK(f.conn_to_ffs <= f.ff_fanout);
      CHECK(f.has_feedback == (f.feedback_depth >= 1));
      CHECK((f.comb_depth == 0) == (f.comb_fanin == 0));
      CHECK(f.time_at_0 + f.time_at_1 == 1.0);
      CHECK(f.from_pi == (f.pi_proximity != kUnreachable));
      CHECK(f.to_po == (f.po_proximity != kUnreachable));
      if (f.in_bus) CHECK(f.bus_length >= 2);
      to_sum += f.conn_to_ffs;
      from_sum += f.conn_from_ffs;
    }
    CHECK(to_sum == from_sum);
    CHECK(extract_features(net, activity).rows == t.rows);

    // Renaming (non-bus) instances only touches bus fields.
    const std::string text = unparse_netlist(net);
    auto renamed = [&](const std::string& prefix) {
      return parse_netlist(std::regex_replace(text, std::regex(R"(r\[([0-9]+)\])"), prefix + "$1"));
    };
    Netlist a = renamed("x_"), b = renamed("reg");
    auto fa = extract_features(a, activity).rows, fb = extract_features(b, activity).rows;
    CHECK(fa == fb);
    for (std::size_t i = 0; i < fa.size(); ++i) {
      FeatureVector orig = t.rows[i];
      orig.in_bus = false;
      orig.bus_position = 0;
      orig.bus_length = 1;
      CHECK(orig == fa[i]);
    }
  }
}

TEST_CASE("feature CSV layout") {
  Netlist net = parse_netlist(fixtures::kPassThrough);
  std::ostringstream out;
  write_features_csv(out, features_of(net, 4));
  const std::string s = out.str();
  CHECK(s.rfind("ff_name,ff_fanin,ff_fanout,conn_from_ffs,conn_to_ffs,from_pi,pi_proximity,to_po,po_proximity,"
                "in_bus,bus_position,bus_length,has_feedback,feedback_depth,drive_strength,comb_fanin,"
                "comb_fanout,comb_depth,toggle_count,time_at_0,time_at_1\n",
                0) == 0);
  CHECK(s.find("\nr,1,1,0,0,1,0,1,0,0,0,1,0,0,2,0,0,0,0,1,0\n") != std::string::npos);
}
