#include "fdr/features.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <map>
#include <ostream>
#include <regex>

#include <fmt/format.h>

#include "fdr/error.hpp"

namespace fdr {

namespace {

struct FlipFlopGraph {
  std::vector<Cone> fanin;
  std::vector<Cone> fanout;
  std::vector<std::vector<std::size_t>> succ;  // src -> DFFs whose D cone contains src
  std::vector<std::vector<std::size_t>> pred;
};

FlipFlopGraph build_graph(const Netlist& net) {
  const std::size_t n = net.flip_flop_count();
  FlipFlopGraph g;
  g.fanin.reserve(n);
  g.fanout.reserve(n);
  g.succ.assign(n, {});
  g.pred.assign(n, {});
  for (std::size_t ff = 0; ff < n; ++ff) {
    g.fanin.push_back(fanin_cone(net, ff));
    g.fanout.push_back(fanout_cone(net, ff));
  }
  for (std::size_t dst = 0; dst < n; ++dst) {
    for (const Endpoint& e : g.fanin[dst].boundary) {
      if (e.kind != Endpoint::Kind::FlipFlop) continue;
      g.pred[dst].push_back(e.index);
      g.succ[e.index].push_back(dst);
    }
  }
  return g;
}

bool touches(const Cone& cone, Endpoint::Kind kind) {
  return std::any_of(cone.boundary.begin(), cone.boundary.end(), [&](const Endpoint& e) { return e.kind == kind; });
}

std::vector<std::uint32_t> multi_source_bfs(const std::vector<bool>& seeds,
                                            const std::vector<std::vector<std::size_t>>& edges) {
  std::vector<std::uint32_t> dist(seeds.size(), kUnreachable);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (seeds[i]) {
      dist[i] = 0;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : edges[u]) {
      if (dist[v] != kUnreachable) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

std::vector<std::uint32_t> proximity_from(const Netlist& net, const FlipFlopGraph& g, ProximityDirection dir) {
  const std::size_t n = net.flip_flop_count();
  std::vector<bool> seeds(n);
  for (std::size_t ff = 0; ff < n; ++ff) {
    seeds[ff] = dir == ProximityDirection::ToPrimaryInput ? touches(g.fanin[ff], Endpoint::Kind::PrimaryInput)
                                                          : touches(g.fanout[ff], Endpoint::Kind::PrimaryOutput);
  }
  // Stages to a PI grow along data flow; stages to a PO grow against it.
  return multi_source_bfs(seeds, dir == ProximityDirection::ToPrimaryInput ? g.succ : g.pred);
}

/// Shortest cycle through `ff` in the flip-flop graph, 0 if none.
std::uint32_t shortest_cycle(const FlipFlopGraph& g, std::size_t ff) {
  std::vector<std::uint32_t> dist(g.succ.size(), kUnreachable);
  std::deque<std::size_t> queue;
  for (std::size_t v : g.succ[ff]) {
    if (v == ff) return 1;
    if (dist[v] == kUnreachable) {
      dist[v] = 1;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : g.succ[u]) {
      if (v == ff) return dist[u] + 1;
      if (dist[v] != kUnreachable) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  return 0;
}

}  // namespace

std::array<double, kFeatureCount> FeatureVector::values() const {
  auto d = [](auto v) { return static_cast<double>(v); };
  return {d(ff_fanin),        d(ff_fanout),     d(conn_from_ffs), d(conn_to_ffs),  d(from_pi),
          d(pi_proximity),    d(to_po),         d(po_proximity),  d(in_bus),       d(bus_position),
          d(bus_length),      d(has_feedback),  d(feedback_depth), d(drive_strength), d(comb_fanin),
          d(comb_fanout),     d(comb_depth),    d(toggle_count),  time_at_0,       time_at_1};
}

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names{
      "ff_fanin",      "ff_fanout",    "conn_from_ffs", "conn_to_ffs",    "from_pi",
      "pi_proximity",  "to_po",        "po_proximity",  "in_bus",         "bus_position",
      "bus_length",    "has_feedback", "feedback_depth", "drive_strength", "comb_fanin",
      "comb_fanout",   "comb_depth",   "toggle_count",  "time_at_0",      "time_at_1"};
  return names;
}

std::vector<BusInfo> bus_detect(const std::vector<std::string>& ff_names) {
  static const std::regex pattern(R"(^(.+)\[([0-9]+)\]$)");
  std::vector<BusInfo> out(ff_names.size());
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::uint32_t> index(ff_names.size(), 0);
  for (std::size_t i = 0; i < ff_names.size(); ++i) {
    std::smatch m;
    if (!std::regex_match(ff_names[i], m, pattern) || m[2].length() > 9) continue;
    index[i] = static_cast<std::uint32_t>(std::stoul(m[2].str()));
    groups[m[1].str()].push_back(i);
  }
  for (const auto& [base, members] : groups) {
    if (members.size() < 2) continue;
    for (std::size_t i : members) out[i] = {true, index[i], static_cast<std::uint32_t>(members.size())};
  }
  return out;
}

std::vector<std::uint32_t> proximity(const Netlist& net, ProximityDirection direction) {
  return proximity_from(net, build_graph(net), direction);
}

FeatureTable extract_features(const Netlist& net, const ActivityStats& stats) {
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n = net.flip_flop_count();
  if (stats.per_ff.size() < n) {
    throw Error(Errc::MissingActivity, "no activity for flip-flop '" + net.flip_flop(stats.per_ff.size()).name + "'");
  }

  const FlipFlopGraph g = build_graph(net);
  const auto pi_prox = proximity_from(net, g, ProximityDirection::ToPrimaryInput);
  const auto po_prox = proximity_from(net, g, ProximityDirection::ToPrimaryOutput);

  // Combinational level of each cell: 1 + deepest combinational driver.
  std::vector<std::uint32_t> level(net.cells().size(), 0);
  for (CellId c : topo_order(net)) {
    std::uint32_t deepest = 0;
    for (NetId in : net.cell(c).inputs) {
      const Driver& d = net.driver(in);
      if (d.kind == Driver::Kind::Cell && !net.cell(d.index).is_flip_flop()) deepest = std::max(deepest, level[d.index]);
    }
    level[c] = deepest + 1;
  }

  FeatureTable table;
  table.ff_names.reserve(n);
  for (std::size_t ff = 0; ff < n; ++ff) table.ff_names.push_back(net.flip_flop(ff).name);
  const auto buses = bus_detect(table.ff_names);
  const auto fractions = stats.total_cycles > 0 ? activity_fractions(stats, stats.total_cycles)
                                                : std::vector<ActivityFraction>(n, ActivityFraction{0, 1.0, 0.0});

  table.rows.reserve(n);
  for (std::size_t ff = 0; ff < n; ++ff) {
    const Cell& cell = net.flip_flop(ff);
    const Cone& in = g.fanin[ff];
    const Cone& out = g.fanout[ff];
    FeatureVector f;
    f.ff_fanin = static_cast<std::uint32_t>(in.boundary.size());
    f.ff_fanout = static_cast<std::uint32_t>(out.boundary.size());
    f.conn_from_ffs = static_cast<std::uint32_t>(g.pred[ff].size());
    f.conn_to_ffs = static_cast<std::uint32_t>(g.succ[ff].size());
    f.pi_proximity = pi_prox[ff];
    f.from_pi = pi_prox[ff] != kUnreachable;
    f.po_proximity = po_prox[ff];
    f.to_po = po_prox[ff] != kUnreachable;
    f.in_bus = buses[ff].in_bus;
    f.bus_position = buses[ff].position;
    f.bus_length = buses[ff].length;
    f.feedback_depth = shortest_cycle(g, ff);
    f.has_feedback = f.feedback_depth > 0;
    f.drive_strength = static_cast<std::uint32_t>(cell.drive_strength);
    f.comb_fanin = static_cast<std::uint32_t>(in.cells.size());
    f.comb_fanout = static_cast<std::uint32_t>(out.cells.size());
    const Driver& d = net.driver(cell.inputs[0]);
    f.comb_depth = (d.kind == Driver::Kind::Cell && !net.cell(d.index).is_flip_flop()) ? level[d.index] : 0;
    f.toggle_count = fractions[ff].toggles;
    f.time_at_0 = fractions[ff].time_at_0;
    f.time_at_1 = fractions[ff].time_at_1;
    table.rows.push_back(f);
  }
  table.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return table;
}

void write_features_csv(std::ostream& out, const FeatureTable& table) {
  out << "ff_name";
  for (auto name : feature_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out << table.ff_names[i];
    for (double v : table.rows[i].values()) out << ',' << fmt::format("{}", v);
    out << '\n';
  }
}

}  // namespace fdr
