#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "fdr/netlist.hpp"

namespace fdr {

struct ActiveWindow {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  std::size_t length() const { return end - start + 1; }
  bool operator==(const ActiveWindow&) const = default;
};

struct Stimulus {
  std::size_t total_cycles = 0;
  /// cycle -> (primary input net, value). Unassigned inputs hold their
  /// previous value, starting from 0.
  std::map<std::size_t, std::vector<std::pair<NetId, bool>>> assignments;
  /// Empty only when total_cycles == 0.
  std::optional<ActiveWindow> active_window;
};

/// Reads `cycles N`, `active a b` and `@cycle net=0|1 ...` lines. Without an
/// `active` line the window spans all cycles.
Stimulus parse_stimulus(std::string_view text, const Netlist& net);
std::string unparse_stimulus(const Stimulus& stim, const Netlist& net);

/// Primary-output bits per cycle, sampled after combinational settling and
/// before the clock edge.
class OutputTrace {
 public:
  OutputTrace() = default;
  OutputTrace(std::size_t cycles, std::size_t width)
      : cycles_(cycles), width_(width), bits_(cycles * width, 0) {}

  std::size_t cycles() const { return cycles_; }
  std::size_t width() const { return width_; }
  bool bit(std::size_t cycle, std::size_t output) const { return bits_[cycle * width_ + output] != 0; }
  std::span<const std::uint8_t> row(std::size_t cycle) const {
    return {bits_.data() + cycle * width_, width_};
  }
  std::span<std::uint8_t> row(std::size_t cycle) { return {bits_.data() + cycle * width_, width_}; }

  bool operator==(const OutputTrace&) const = default;

 private:
  std::size_t cycles_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

using GoldenTrace = OutputTrace;

struct FlipFlopActivity {
  std::size_t toggle_count = 0;
  std::size_t cycles_at_one = 0;

  bool operator==(const FlipFlopActivity&) const = default;
};

/// Per flip-flop Q statistics over a run, indexed by flip-flop ordinal.
struct ActivityStats {
  std::size_t total_cycles = 0;
  std::vector<FlipFlopActivity> per_ff;

  bool operator==(const ActivityStats&) const = default;
};

struct Fault {
  std::size_t ff = 0;     // flip-flop ordinal
  std::size_t cycle = 0;  // stored value inverted right after this cycle's clock edge
};

struct SimulationResult {
  OutputTrace trace;
  ActivityStats activity;
};

/// Two-valued cycle simulation with all DFFs starting at 0. Each cycle:
/// apply inputs, settle combinational logic, sample outputs, clock, then
/// apply the fault if it is scheduled for this cycle.
SimulationResult simulate(const Netlist& net, const Stimulus& stim,
                          std::optional<Fault> fault = std::nullopt);

struct ActivityFraction {
  std::size_t toggles = 0;
  double time_at_0 = 0.0;
  double time_at_1 = 0.0;
};

/// Throws ZeroCycles when total_cycles == 0.
std::vector<ActivityFraction> activity_fractions(const ActivityStats& stats, std::size_t total_cycles);

/// Compiled simulator for one (netlist, stimulus) pair. Holds no mutable
/// state, so one instance may be shared by concurrent runs.
class Simulator {
 public:
  Simulator(const Netlist& net, const Stimulus& stim);

  SimulationResult run(std::optional<Fault> fault = std::nullopt) const;

  const Netlist& netlist() const { return net_; }
  std::size_t total_cycles() const { return cycles_; }

 private:
  friend class GoldenRun;

  struct Op {
    CellKind kind;
    NetId out;
    NetId a, b, c;
  };

  void check_fault(const Fault& fault) const;
  void load_inputs(std::size_t cycle, std::vector<std::uint8_t>& values) const;
  /// Settles logic for one cycle from `state`, writes the sampled outputs
  /// and the next state.
  void step(std::size_t cycle, std::span<const std::uint8_t> state, std::vector<std::uint8_t>& values,
            std::span<std::uint8_t> outputs, std::span<std::uint8_t> next_state) const;

  const Netlist& net_;
  std::size_t cycles_;
  std::vector<Op> program_;
  std::vector<std::uint8_t> inputs_;  // cycles x |PI|, hold semantics resolved
};

/// Fault-free run plus the DFF state at every cycle boundary, so faulty
/// runs can resume at the injection point.
class GoldenRun {
 public:
  explicit GoldenRun(const Simulator& sim);

  const GoldenTrace& trace() const { return result_.trace; }
  const ActivityStats& activity() const { return result_.activity; }

  /// Output trace of sim.run(fault), computed from the injection cycle on
  /// and cut short once the faulty state rejoins the golden state.
  OutputTrace replay(const Fault& fault) const;

 private:
  const Simulator& sim_;
  SimulationResult result_;
  std::vector<std::uint8_t> states_;  // (cycles + 1) x |FF|; row c = state during cycle c
};

void write_trace_csv(std::ostream& out, const Netlist& net, const OutputTrace& trace);
void write_activity_csv(std::ostream& out, const Netlist& net, const ActivityStats& stats);

}  // namespace fdr
