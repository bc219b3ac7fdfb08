#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fdr {

enum class CellKind : std::uint8_t {
  Buf,
  Not,
  And2,
  And3,
  Or2,
  Or3,
  Nand2,
  Nor2,
  Xor2,
  Xnor2,
  Mux2,
  Dff,
};

std::string_view cell_kind_name(CellKind kind);
std::optional<CellKind> cell_kind_from_name(std::string_view name);
/// Number of input pins; MUX2 is (sel, a, b), DFF is (D).
std::size_t cell_arity(CellKind kind);

using NetId = std::uint32_t;
using CellId = std::uint32_t;

struct Cell {
  std::string name;
  CellKind kind = CellKind::Buf;
  int drive_strength = 1;
  NetId output = 0;
  std::vector<NetId> inputs;

  bool is_flip_flop() const { return kind == CellKind::Dff; }
};

/// Who drives a net: a primary input or a cell output.
struct Driver {
  enum class Kind : std::uint8_t { PrimaryInput, Cell };
  Kind kind = Kind::PrimaryInput;
  std::uint32_t index = 0;  // position in primary_inputs() or cell id
};

/// A boundary point of a combinational cone: a primary input or output
/// net, or a flip-flop (by ordinal in flip_flops()).
struct Endpoint {
  enum class Kind : std::uint8_t { PrimaryInput, FlipFlop, PrimaryOutput };
  Kind kind = Kind::PrimaryInput;
  std::uint32_t index = 0;

  auto operator<=>(const Endpoint&) const = default;
};

/// Validated gate-level circuit. Immutable once built by parse_netlist.
class Netlist {
 public:
  const std::string& name() const { return name_; }

  std::size_t net_count() const { return net_names_.size(); }
  const std::string& net_name(NetId net) const { return net_names_[net]; }
  std::optional<NetId> find_net(std::string_view name) const;

  const std::vector<NetId>& primary_inputs() const { return primary_inputs_; }
  const std::vector<NetId>& primary_outputs() const { return primary_outputs_; }

  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(CellId id) const { return cells_[id]; }

  /// DFF cell ids in declaration order; a flip-flop's ordinal is its index here.
  const std::vector<CellId>& flip_flops() const { return flip_flops_; }
  std::size_t flip_flop_count() const { return flip_flops_.size(); }
  const Cell& flip_flop(std::size_t ordinal) const { return cells_[flip_flops_[ordinal]]; }
  std::optional<std::size_t> find_flip_flop(std::string_view instance) const;
  /// Ordinal of a DFF cell, or nullopt for combinational cells.
  std::optional<std::size_t> flip_flop_ordinal(CellId id) const;

  const Driver& driver(NetId net) const { return drivers_[net]; }
  /// Cells reading the net, in cell-id order (a cell appears once per pin).
  const std::vector<CellId>& readers(NetId net) const { return readers_[net]; }
  bool is_primary_output(NetId net) const { return po_position_[net] >= 0; }
  /// Position of net in primary_outputs(), or -1.
  int primary_output_position(NetId net) const { return po_position_[net]; }

  /// Compares by names, so two netlists with different net numbering but
  /// identical structure are equal.
  bool operator==(const Netlist& other) const;

 private:
  friend class NetlistBuilder;

  std::string name_;
  std::vector<std::string> net_names_;
  std::unordered_map<std::string, NetId> net_index_;
  std::vector<NetId> primary_inputs_;
  std::vector<NetId> primary_outputs_;
  std::vector<Cell> cells_;
  std::vector<CellId> flip_flops_;
  std::vector<int> ff_ordinal_;
  std::unordered_map<std::string, std::size_t> ff_index_;
  std::vector<Driver> drivers_;
  std::vector<std::vector<CellId>> readers_;
  std::vector<int> po_position_;
};

/// Programmatic construction with the same validation as the text parser.
class NetlistBuilder {
 public:
  explicit NetlistBuilder(std::string name);

  NetId add_input(const std::string& net);
  NetId add_output(const std::string& net);
  NetId add_wire(const std::string& net);
  CellId add_cell(const std::string& instance, CellKind kind, int drive_strength,
                  const std::string& output, const std::vector<std::string>& inputs,
                  std::size_t line = 0);

  /// Checks single drivers, declared nets and loop freedom.
  Netlist build() &&;

 private:
  NetId declare(const std::string& net, std::size_t line);
  NetId lookup(const std::string& net, std::size_t line) const;

  Netlist net_;
  std::vector<bool> declared_as_signal_;
  std::set<std::string> instances_;
};

Netlist parse_netlist(std::string_view text);
/// Text form accepted by parse_netlist.
std::string unparse_netlist(const Netlist& net);

/// Combinational cell ids such that every cell follows the cells driving
/// its inputs. DFF outputs and primary inputs are sources.
std::vector<CellId> topo_order(const Netlist& net);

struct Cone {
  std::set<CellId> cells;
  std::set<Endpoint> boundary;
};

/// Backward cone from the D input of flip-flop `ff` (an ordinal). Boundary
/// holds PrimaryInput and FlipFlop endpoints only.
Cone fanin_cone(const Netlist& net, std::size_t ff);

/// Forward cone from the Q output of flip-flop `ff`, through combinational
/// cells only. Boundary holds FlipFlop sinks (DFFs whose D is reached) and
/// PrimaryOutput endpoints (index = position in primary_outputs()).
Cone fanout_cone(const Netlist& net, std::size_t ff);

}  // namespace fdr
