#include "fdr/netlist.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <deque>
#include <sstream>

#include "fdr/error.hpp"

namespace fdr {

namespace {

struct KindInfo {
  CellKind kind;
  std::string_view name;
  std::size_t arity;
};

constexpr std::array<KindInfo, 12> kKinds{{
    {CellKind::Buf, "BUF", 1},
    {CellKind::Not, "NOT", 1},
    {CellKind::And2, "AND2", 2},
    {CellKind::And3, "AND3", 3},
    {CellKind::Or2, "OR2", 2},
    {CellKind::Or3, "OR3", 3},
    {CellKind::Nand2, "NAND2", 2},
    {CellKind::Nor2, "NOR2", 2},
    {CellKind::Xor2, "XOR2", 2},
    {CellKind::Xnor2, "XNOR2", 2},
    {CellKind::Mux2, "MUX2", 3},
    {CellKind::Dff, "DFF", 1},
}};

const KindInfo& info(CellKind kind) { return kKinds[static_cast<std::size_t>(kind)]; }

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

int parse_drive(std::string_view token, std::size_t line) {
  int value = 0;
  if (token.empty() || token.size() > 9 ||
      !std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error(Errc::Syntax, "drive strength must be a positive integer, got '" +
                                  std::string(token) + "'", line);
  }
  for (char c : token) value = value * 10 + (c - '0');
  if (value < 1) throw Error(Errc::Syntax, "drive strength must be >= 1", line);
  return value;
}

}  // namespace

std::string_view cell_kind_name(CellKind kind) { return info(kind).name; }

std::optional<CellKind> cell_kind_from_name(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

std::size_t cell_arity(CellKind kind) { return info(kind).arity; }

std::optional<NetId> Netlist::find_net(std::string_view name) const {
  auto it = net_index_.find(std::string(name));
  if (it == net_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Netlist::find_flip_flop(std::string_view instance) const {
  auto it = ff_index_.find(std::string(instance));
  if (it == ff_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Netlist::flip_flop_ordinal(CellId id) const {
  if (ff_ordinal_[id] < 0) return std::nullopt;
  return static_cast<std::size_t>(ff_ordinal_[id]);
}

bool Netlist::operator==(const Netlist& other) const {
  auto names = [](const Netlist& n, const std::vector<NetId>& ids) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (NetId id : ids) out.push_back(n.net_name(id));
    return out;
  };
  if (name_ != other.name_) return false;
  if (names(*this, primary_inputs_) != names(other, other.primary_inputs_)) return false;
  if (names(*this, primary_outputs_) != names(other, other.primary_outputs_)) return false;
  std::vector<std::string> mine = net_names_, theirs = other.net_names_;
  std::sort(mine.begin(), mine.end());
  std::sort(theirs.begin(), theirs.end());
  if (mine != theirs) return false;
  if (cells_.size() != other.cells_.size()) return false;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Cell& a = cells_[i];
    const Cell& b = other.cells_[i];
    if (a.name != b.name || a.kind != b.kind || a.drive_strength != b.drive_strength) return false;
    if (net_name(a.output) != other.net_name(b.output)) return false;
    if (names(*this, a.inputs) != names(other, b.inputs)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

NetlistBuilder::NetlistBuilder(std::string name) { net_.name_ = std::move(name); }

NetId NetlistBuilder::declare(const std::string& net, std::size_t line) {
  if (net.empty()) throw Error(Errc::Syntax, "empty net name", line);
  auto it = net_.net_index_.find(net);
  if (it != net_.net_index_.end()) return it->second;
  const auto id = static_cast<NetId>(net_.net_names_.size());
  net_.net_names_.push_back(net);
  net_.net_index_.emplace(net, id);
  declared_as_signal_.push_back(false);
  net_.po_position_.push_back(-1);
  return id;
}

NetId NetlistBuilder::lookup(const std::string& net, std::size_t line) const {
  auto it = net_.net_index_.find(net);
  if (it == net_.net_index_.end()) throw Error(Errc::Syntax, "undeclared net '" + net + "'", line);
  return it->second;
}

NetId NetlistBuilder::add_input(const std::string& net) {
  NetId id = declare(net, 0);
  if (declared_as_signal_[id]) throw Error(Errc::Syntax, "net '" + net + "' declared twice");
  declared_as_signal_[id] = true;
  net_.primary_inputs_.push_back(id);
  return id;
}

NetId NetlistBuilder::add_output(const std::string& net) {
  NetId id = declare(net, 0);
  if (net_.po_position_[id] >= 0) throw Error(Errc::Syntax, "output '" + net + "' declared twice");
  net_.po_position_[id] = static_cast<int>(net_.primary_outputs_.size());
  net_.primary_outputs_.push_back(id);
  return id;
}

NetId NetlistBuilder::add_wire(const std::string& net) {
  NetId id = declare(net, 0);
  if (declared_as_signal_[id]) throw Error(Errc::Syntax, "net '" + net + "' declared twice");
  declared_as_signal_[id] = true;
  return id;
}

CellId NetlistBuilder::add_cell(const std::string& instance, CellKind kind, int drive_strength,
                                const std::string& output, const std::vector<std::string>& inputs,
                                std::size_t line) {
  if (!instances_.insert(instance).second) {
    throw Error(Errc::Syntax, "duplicate instance '" + instance + "'", line);
  }
  if (drive_strength < 1) throw Error(Errc::Syntax, "drive strength must be >= 1", line);
  if (inputs.size() != cell_arity(kind)) {
    throw Error(Errc::ArityMismatch,
                "cell '" + instance + "' of kind " + std::string(cell_kind_name(kind)) +
                    " expects " + std::to_string(cell_arity(kind)) + " inputs, got " +
                    std::to_string(inputs.size()),
                line);
  }
  Cell cell;
  cell.name = instance;
  cell.kind = kind;
  cell.drive_strength = drive_strength;
  cell.output = lookup(output, line);
  for (const auto& in : inputs) cell.inputs.push_back(lookup(in, line));
  net_.cells_.push_back(std::move(cell));
  return static_cast<CellId>(net_.cells_.size() - 1);
}

Netlist NetlistBuilder::build() && {
  Netlist& n = net_;
  const std::size_t nets = n.net_names_.size();
  std::vector<int> driver_count(nets, 0);
  n.drivers_.assign(nets, Driver{});
  for (std::size_t i = 0; i < n.primary_inputs_.size(); ++i) {
    NetId id = n.primary_inputs_[i];
    ++driver_count[id];
    n.drivers_[id] = {Driver::Kind::PrimaryInput, static_cast<std::uint32_t>(i)};
  }
  n.readers_.assign(nets, {});
  n.ff_ordinal_.assign(n.cells_.size(), -1);
  for (CellId c = 0; c < n.cells_.size(); ++c) {
    const Cell& cell = n.cells_[c];
    if (++driver_count[cell.output] > 1) {
      throw Error(Errc::MultipleDrivers, "net '" + n.net_names_[cell.output] + "' has multiple drivers");
    }
    n.drivers_[cell.output] = {Driver::Kind::Cell, c};
    for (NetId in : cell.inputs) n.readers_[in].push_back(c);
    if (cell.is_flip_flop()) {
      n.ff_ordinal_[c] = static_cast<int>(n.flip_flops_.size());
      n.ff_index_.emplace(cell.name, n.flip_flops_.size());
      n.flip_flops_.push_back(c);
    }
  }
  for (NetId id = 0; id < nets; ++id) {
    if (driver_count[id] > 1) {
      throw Error(Errc::MultipleDrivers, "net '" + n.net_names_[id] + "' has multiple drivers");
    }
    if (driver_count[id] == 0) {
      throw Error(Errc::UndrivenNet, "net '" + n.net_names_[id] + "' has no driver");
    }
  }

  // Loop freedom: every combinational cell must be placed by a topological sort.
  const auto order = topo_order(n);
  std::size_t comb = n.cells_.size() - n.flip_flops_.size();
  if (order.size() != comb) {
    std::vector<bool> placed(n.cells_.size(), false);
    for (CellId c : order) placed[c] = true;
    auto stuck = [&](CellId c) { return !n.cells_[c].is_flip_flop() && !placed[c]; };
    // Every unplaced cell has an unplaced combinational predecessor, so
    // walking backwards must revisit a cell.
    CellId cur = 0;
    while (!stuck(cur)) ++cur;
    std::vector<int> seen_at(n.cells_.size(), -1);
    std::vector<CellId> walk;
    while (seen_at[cur] < 0) {
      seen_at[cur] = static_cast<int>(walk.size());
      walk.push_back(cur);
      for (NetId in : n.cells_[cur].inputs) {
        const Driver& d = n.drivers_[in];
        if (d.kind == Driver::Kind::Cell && stuck(d.index)) {
          cur = d.index;
          break;
        }
      }
    }
    std::vector<std::string> members;
    for (std::size_t i = static_cast<std::size_t>(seen_at[cur]); i < walk.size(); ++i) {
      members.push_back(n.cells_[walk[i]].name);
    }
    std::reverse(members.begin(), members.end());
    std::string list;
    for (const auto& m : members) list += (list.empty() ? "" : " -> ") + m;
    throw Error(Errc::CombinationalLoop, "combinational cycle through " + list);
  }
  return std::move(n);
}

// ---------------------------------------------------------------------------

Netlist parse_netlist(std::string_view text) {
  std::optional<NetlistBuilder> builder;
  bool ended = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tok = tokenize(line);
    if (tok.empty()) continue;

    const std::string_view kw = tok[0];
    if (ended) throw Error(Errc::Syntax, "content after endmodule", line_no);
    if (kw == "module") {
      if (builder) throw Error(Errc::Syntax, "only one module per file", line_no);
      if (tok.size() != 2) throw Error(Errc::Syntax, "expected 'module <name>'", line_no);
      builder.emplace(std::string(tok[1]));
      continue;
    }
    if (!builder) throw Error(Errc::Syntax, "expected 'module' before '" + std::string(kw) + "'", line_no);

    auto with_line = [&](auto&& fn) {
      try {
        fn();
      } catch (const Error& e) {
        if (e.line() != 0) throw;
        throw Error(e.code(), e.detail(), line_no);
      }
    };

    if (kw == "input" || kw == "output" || kw == "wire") {
      if (tok.size() < 2) throw Error(Errc::Syntax, "'" + std::string(kw) + "' needs at least one net", line_no);
      for (std::size_t i = 1; i < tok.size(); ++i) {
        std::string net(tok[i]);
        with_line([&] {
          if (kw == "input") builder->add_input(net);
          else if (kw == "output") builder->add_output(net);
          else builder->add_wire(net);
        });
      }
    } else if (kw == "cell") {
      if (tok.size() < 5) throw Error(Errc::Syntax, "expected 'cell <inst> <KIND> <drive> <out> <in>...'", line_no);
      auto kind = cell_kind_from_name(tok[2]);
      if (!kind) throw Error(Errc::Syntax, "unknown cell kind '" + std::string(tok[2]) + "'", line_no);
      int drive = parse_drive(tok[3], line_no);
      std::vector<std::string> ins(tok.begin() + 5, tok.end());
      with_line([&] { builder->add_cell(std::string(tok[1]), *kind, drive, std::string(tok[4]), ins, line_no); });
    } else if (kw == "dff") {
      if (tok.size() != 5) throw Error(Errc::Syntax, "expected 'dff <inst> <drive> <q> <d>'", line_no);
      int drive = parse_drive(tok[2], line_no);
      with_line([&] {
        builder->add_cell(std::string(tok[1]), CellKind::Dff, drive, std::string(tok[3]),
                          {std::string(tok[4])}, line_no);
      });
    } else if (kw == "endmodule") {
      if (tok.size() != 1) throw Error(Errc::Syntax, "unexpected tokens after endmodule", line_no);
      ended = true;
    } else {
      throw Error(Errc::Syntax, "unknown statement '" + std::string(kw) + "'", line_no);
    }
  }
  if (!builder) throw Error(Errc::Syntax, "no module found");
  if (!ended) throw Error(Errc::Syntax, "missing endmodule", line_no);
  return std::move(*builder).build();
}

std::string unparse_netlist(const Netlist& net) {
  std::ostringstream out;
  out << "module " << net.name() << '\n';
  auto emit_list = [&](std::string_view kw, const std::vector<NetId>& ids) {
    if (ids.empty()) return;
    out << kw;
    for (NetId id : ids) out << ' ' << net.net_name(id);
    out << '\n';
  };
  emit_list("input", net.primary_inputs());
  emit_list("output", net.primary_outputs());
  std::vector<NetId> wires;
  for (NetId id = 0; id < net.net_count(); ++id) {
    if (net.driver(id).kind == Driver::Kind::Cell) wires.push_back(id);
  }
  emit_list("wire", wires);
  for (const Cell& c : net.cells()) {
    if (c.is_flip_flop()) {
      out << "dff " << c.name << ' ' << c.drive_strength << ' ' << net.net_name(c.output) << ' '
          << net.net_name(c.inputs[0]) << '\n';
      continue;
    }
    out << "cell " << c.name << ' ' << cell_kind_name(c.kind) << ' ' << c.drive_strength << ' '
        << net.net_name(c.output);
    for (NetId in : c.inputs) out << ' ' << net.net_name(in);
    out << '\n';
  }
  out << "endmodule\n";
  return out.str();
}

std::vector<CellId> topo_order(const Netlist& net) {
  const auto& cells = net.cells();
  std::vector<std::size_t> pending(cells.size(), 0);
  std::deque<CellId> ready;
  for (CellId c = 0; c < cells.size(); ++c) {
    if (cells[c].is_flip_flop()) continue;
    for (NetId in : cells[c].inputs) {
      const Driver& d = net.driver(in);
      if (d.kind == Driver::Kind::Cell && !cells[d.index].is_flip_flop()) ++pending[c];
    }
    if (pending[c] == 0) ready.push_back(c);
  }
  std::vector<CellId> order;
  order.reserve(cells.size());
  while (!ready.empty()) {
    CellId c = ready.front();
    ready.pop_front();
    order.push_back(c);
    for (CellId r : net.readers(cells[c].output)) {
      if (cells[r].is_flip_flop()) continue;
      if (--pending[r] == 0) ready.push_back(r);
    }
  }
  return order;
}

namespace {

void check_ff(const Netlist& net, std::size_t ff) {
  if (ff >= net.flip_flop_count()) {
    throw Error(Errc::UnknownFlipFlop, "flip-flop ordinal " + std::to_string(ff) + " out of range");
  }
}

}  // namespace

Cone fanin_cone(const Netlist& net, std::size_t ff) {
  check_ff(net, ff);
  Cone cone;
  std::vector<bool> seen(net.net_count(), false);
  std::vector<NetId> stack{net.flip_flop(ff).inputs[0]};
  while (!stack.empty()) {
    NetId n = stack.back();
    stack.pop_back();
    if (seen[n]) continue;
    seen[n] = true;
    const Driver& d = net.driver(n);
    if (d.kind == Driver::Kind::PrimaryInput) {
      cone.boundary.insert({Endpoint::Kind::PrimaryInput, d.index});
      continue;
    }
    if (auto ord = net.flip_flop_ordinal(d.index)) {
      cone.boundary.insert({Endpoint::Kind::FlipFlop, static_cast<std::uint32_t>(*ord)});
      continue;
    }
    cone.cells.insert(d.index);
    for (NetId in : net.cell(d.index).inputs) stack.push_back(in);
  }
  return cone;
}

Cone fanout_cone(const Netlist& net, std::size_t ff) {
  check_ff(net, ff);
  Cone cone;
  std::vector<bool> seen(net.net_count(), false);
  std::vector<NetId> stack{net.flip_flop(ff).output};
  while (!stack.empty()) {
    NetId n = stack.back();
    stack.pop_back();
    if (seen[n]) continue;
    seen[n] = true;
    if (int po = net.primary_output_position(n); po >= 0) {
      cone.boundary.insert({Endpoint::Kind::PrimaryOutput, static_cast<std::uint32_t>(po)});
    }
    for (CellId r : net.readers(n)) {
      if (auto ord = net.flip_flop_ordinal(r)) {
        cone.boundary.insert({Endpoint::Kind::FlipFlop, static_cast<std::uint32_t>(*ord)});
        continue;
      }
      cone.cells.insert(r);
      stack.push_back(net.cell(r).output);
    }
  }
  return cone;
}

}  // namespace fdr
