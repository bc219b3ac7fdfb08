#include "fdr/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "fdr/error.hpp"

namespace fdr {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t parse_count(std::string_view tok, std::size_t line) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(Errc::Syntax, "expected a non-negative integer, got '" + std::string(tok) + "'", line);
  }
  return value;
}

inline std::uint8_t eval(CellKind kind, std::uint8_t a, std::uint8_t b, std::uint8_t c) {
  switch (kind) {
    case CellKind::Buf: return a;
    case CellKind::Not: return a ^ 1u;
    case CellKind::And2: return a & b;
    case CellKind::And3: return a & b & c;
    case CellKind::Or2: return a | b;
    case CellKind::Or3: return a | b | c;
    case CellKind::Nand2: return (a & b) ^ 1u;
    case CellKind::Nor2: return (a | b) ^ 1u;
    case CellKind::Xor2: return a ^ b;
    case CellKind::Xnor2: return (a ^ b) ^ 1u;
    case CellKind::Mux2: return a ? c : b;  // (sel, a, b)
    case CellKind::Dff: break;
  }
  return 0;
}

}  // namespace

Stimulus parse_stimulus(std::string_view text, const Netlist& net) {
  Stimulus stim;
  bool have_cycles = false;
  std::optional<ActiveWindow> window;
  std::vector<std::pair<std::size_t, std::size_t>> assignment_lines;  // (cycle, line)
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "cycles") {
      if (tok.size() != 2) throw Error(Errc::Syntax, "expected 'cycles <N>'", line_no);
      if (have_cycles) throw Error(Errc::Syntax, "duplicate 'cycles' line", line_no);
      stim.total_cycles = parse_count(tok[1], line_no);
      have_cycles = true;
    } else if (tok[0] == "active") {
      if (tok.size() != 3) throw Error(Errc::Syntax, "expected 'active <t_start> <t_end>'", line_no);
      if (window) throw Error(Errc::Syntax, "duplicate 'active' line", line_no);
      window = ActiveWindow{parse_count(tok[1], line_no), parse_count(tok[2], line_no)};
      if (window->start > window->end) throw Error(Errc::Syntax, "active window start after end", line_no);
    } else if (tok[0].front() == '@') {
      std::size_t cycle = parse_count(tok[0].substr(1), line_no);
      auto& slot = stim.assignments[cycle];
      assignment_lines.emplace_back(cycle, line_no);
      for (std::size_t i = 1; i < tok.size(); ++i) {
        auto eq = tok[i].find('=');
        if (eq == std::string_view::npos || eq + 2 != tok[i].size() ||
            (tok[i][eq + 1] != '0' && tok[i][eq + 1] != '1')) {
          throw Error(Errc::Syntax, "expected <net>=<0|1>, got '" + std::string(tok[i]) + "'", line_no);
        }
        std::string name(tok[i].substr(0, eq));
        auto id = net.find_net(name);
        if (!id || net.driver(*id).kind != Driver::Kind::PrimaryInput) {
          throw Error(Errc::UnknownStimulusNet, "'" + name + "' is not a primary input", line_no);
        }
        slot.emplace_back(*id, tok[i][eq + 1] == '1');
      }
    } else {
      throw Error(Errc::Syntax, "unknown statement '" + std::string(tok[0]) + "'", line_no);
    }
  }
  if (!have_cycles) throw Error(Errc::Syntax, "missing 'cycles <N>' line");
  for (auto [cycle, line] : assignment_lines) {
    if (cycle >= stim.total_cycles) {
      throw Error(Errc::Syntax, "assignment at cycle " + std::to_string(cycle) + " beyond total cycles", line);
    }
  }
  if (window) {
    if (window->end >= stim.total_cycles) throw Error(Errc::Syntax, "active window ends past the last cycle");
    stim.active_window = window;
  } else if (stim.total_cycles > 0) {
    stim.active_window = ActiveWindow{0, stim.total_cycles - 1};
  }
  return stim;
}

std::string unparse_stimulus(const Stimulus& stim, const Netlist& net) {
  std::ostringstream out;
  out << "cycles " << stim.total_cycles << '\n';
  if (stim.active_window) out << "active " << stim.active_window->start << ' ' << stim.active_window->end << '\n';
  for (const auto& [cycle, assigns] : stim.assignments) {
    if (assigns.empty()) continue;
    out << '@' << cycle;
    for (auto [id, v] : assigns) out << ' ' << net.net_name(id) << '=' << (v ? '1' : '0');
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

Simulator::Simulator(const Netlist& net, const Stimulus& stim) : net_(net), cycles_(stim.total_cycles) {
  for (CellId id : topo_order(net)) {
    const Cell& c = net.cell(id);
    Op op{c.kind, c.output, c.inputs[0], c.inputs[0], c.inputs[0]};
    if (c.inputs.size() > 1) op.b = c.inputs[1];
    if (c.inputs.size() > 2) op.c = c.inputs[2];
    program_.push_back(op);
  }
  const auto& pis = net.primary_inputs();
  std::vector<int> pi_pos(net.net_count(), -1);
  for (std::size_t i = 0; i < pis.size(); ++i) pi_pos[pis[i]] = static_cast<int>(i);

  inputs_.assign(cycles_ * pis.size(), 0);
  std::vector<std::uint8_t> current(pis.size(), 0);
  auto it = stim.assignments.begin();
  for (std::size_t c = 0; c < cycles_; ++c) {
    for (; it != stim.assignments.end() && it->first <= c; ++it) {
      if (it->first < c) continue;
      for (auto [id, v] : it->second) {
        if (id >= net.net_count() || pi_pos[id] < 0) {
          throw Error(Errc::UnknownStimulusNet, "stimulus drives a net that is not a primary input");
        }
        current[static_cast<std::size_t>(pi_pos[id])] = v ? 1 : 0;
      }
    }
    std::copy(current.begin(), current.end(), inputs_.begin() + static_cast<std::ptrdiff_t>(c * pis.size()));
  }
  if (it != stim.assignments.end()) {
    throw Error(Errc::UnknownStimulusNet, "stimulus assignment beyond the last cycle");
  }
}

void Simulator::check_fault(const Fault& fault) const {
  if (fault.ff >= net_.flip_flop_count()) {
    throw Error(Errc::UnknownFlipFlop, "fault targets flip-flop ordinal " + std::to_string(fault.ff));
  }
  if (fault.cycle >= cycles_) {
    throw Error(Errc::FaultCycleOutOfRange, "fault cycle " + std::to_string(fault.cycle) +
                                                " outside [0, " + std::to_string(cycles_) + ")");
  }
}

void Simulator::load_inputs(std::size_t cycle, std::vector<std::uint8_t>& values) const {
  const auto& pis = net_.primary_inputs();
  const std::uint8_t* row = inputs_.data() + cycle * pis.size();
  for (std::size_t i = 0; i < pis.size(); ++i) values[pis[i]] = row[i];
}

void Simulator::step(std::size_t cycle, std::span<const std::uint8_t> state, std::vector<std::uint8_t>& values,
                     std::span<std::uint8_t> outputs, std::span<std::uint8_t> next_state) const {
  load_inputs(cycle, values);
  const auto& ffs = net_.flip_flops();
  for (std::size_t i = 0; i < ffs.size(); ++i) values[net_.cell(ffs[i]).output] = state[i];
  for (const Op& op : program_) values[op.out] = eval(op.kind, values[op.a], values[op.b], values[op.c]);
  const auto& pos = net_.primary_outputs();
  for (std::size_t i = 0; i < pos.size(); ++i) outputs[i] = values[pos[i]];
  for (std::size_t i = 0; i < ffs.size(); ++i) next_state[i] = values[net_.cell(ffs[i]).inputs[0]];
}

SimulationResult Simulator::run(std::optional<Fault> fault) const {
  if (fault) check_fault(*fault);
  const std::size_t nff = net_.flip_flop_count();
  SimulationResult result{OutputTrace(cycles_, net_.primary_outputs().size()), {}};
  result.activity.total_cycles = cycles_;
  result.activity.per_ff.assign(nff, {});

  std::vector<std::uint8_t> values(net_.net_count(), 0);
  std::vector<std::uint8_t> state(nff, 0), next(nff, 0);
  for (std::size_t c = 0; c < cycles_; ++c) {
    for (std::size_t i = 0; i < nff; ++i) {
      auto& act = result.activity.per_ff[i];
      act.cycles_at_one += state[i];
      if (c > 0 && state[i] != values[net_.flip_flop(i).output]) ++act.toggle_count;
    }
    step(c, state, values, result.trace.row(c), next);
    if (fault && fault->cycle == c) next[fault->ff] ^= 1u;
    state.swap(next);
  }
  return result;
}

SimulationResult simulate(const Netlist& net, const Stimulus& stim, std::optional<Fault> fault) {
  return Simulator(net, stim).run(fault);
}

std::vector<ActivityFraction> activity_fractions(const ActivityStats& stats, std::size_t total_cycles) {
  if (total_cycles == 0) throw Error(Errc::ZeroCycles, "activity over zero cycles");
  std::vector<ActivityFraction> out;
  out.reserve(stats.per_ff.size());
  const auto n = static_cast<double>(total_cycles);
  for (const auto& a : stats.per_ff) {
    const double one = static_cast<double>(a.cycles_at_one) / n;
    // 1 - x is exact or rounds so that (1 - x) + x == 1 for x in [0, 1].
    out.push_back({a.toggle_count, 1.0 - one, one});
  }
  return out;
}

// ---------------------------------------------------------------------------

GoldenRun::GoldenRun(const Simulator& sim) : sim_(sim) {
  const std::size_t nff = sim.net_.flip_flop_count();
  const std::size_t cycles = sim.cycles_;
  result_ = sim.run();
  states_.assign((cycles + 1) * nff, 0);
  std::vector<std::uint8_t> values(sim.net_.net_count(), 0);
  std::vector<std::uint8_t> scratch(sim.net_.primary_outputs().size());
  for (std::size_t c = 0; c < cycles; ++c) {
    std::span<const std::uint8_t> cur(states_.data() + c * nff, nff);
    std::span<std::uint8_t> next(states_.data() + (c + 1) * nff, nff);
    sim.step(c, cur, values, scratch, next);
  }
}

OutputTrace GoldenRun::replay(const Fault& fault) const {
  sim_.check_fault(fault);
  const std::size_t nff = sim_.net_.flip_flop_count();
  const std::size_t cycles = sim_.cycles_;
  OutputTrace trace = result_.trace;

  std::vector<std::uint8_t> state(states_.begin() + static_cast<std::ptrdiff_t>((fault.cycle + 1) * nff),
                                  states_.begin() + static_cast<std::ptrdiff_t>((fault.cycle + 2) * nff));
  state[fault.ff] ^= 1u;
  std::vector<std::uint8_t> next(nff), values(sim_.net_.net_count(), 0);
  for (std::size_t c = fault.cycle + 1; c < cycles; ++c) {
    sim_.step(c, state, values, trace.row(c), next);
    // Same state as golden at the next boundary: the remaining cycles
    // replay the golden trace, already copied.
    if (std::equal(next.begin(), next.end(), states_.begin() + static_cast<std::ptrdiff_t>((c + 1) * nff))) break;
    state.swap(next);
  }
  return trace;
}

// ---------------------------------------------------------------------------

void write_trace_csv(std::ostream& out, const Netlist& net, const OutputTrace& trace) {
  const auto& pos = net.primary_outputs();
  for (std::size_t i = 0; i < pos.size(); ++i) out << (i ? "," : "") << net.net_name(pos[i]);
  out << '\n';
  for (std::size_t c = 0; c < trace.cycles(); ++c) {
    for (std::size_t i = 0; i < trace.width(); ++i) out << (i ? "," : "") << (trace.bit(c, i) ? '1' : '0');
    out << '\n';
  }
}

void write_activity_csv(std::ostream& out, const Netlist& net, const ActivityStats& stats) {
  out << "ff_name,toggle_count,time_at_0,time_at_1\n";
  if (stats.total_cycles == 0) {
    for (std::size_t i = 0; i < stats.per_ff.size(); ++i) out << net.flip_flop(i).name << ",0,,\n";
    return;
  }
  const auto fractions = activity_fractions(stats, stats.total_cycles);
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    out << fmt::format("{},{},{},{}\n", net.flip_flop(i).name, fractions[i].toggles, fractions[i].time_at_0,
                       fractions[i].time_at_1);
  }
}

}  // namespace fdr
