#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "fdr/netlist.hpp"
#include "fdr/random.hpp"

namespace fixtures {

// Q -> NOT -> D, Q observed.
inline constexpr const char* kOscillator = R"(
module osc
output q
wire d
dff f 1 q d
cell n NOT 1 d q
endmodule
)";

// in -> ff0 -> ff1 -> ff2 -> out
inline constexpr const char* kShift3 = R"(
module shift3
input in
output q2
wire q0 q1
dff ff0 1 q0 in
dff ff1 1 q1 q0
dff ff2 2 q2 q1
endmodule
)";

// One-bit LFSR-style accumulator: D = XOR(Q, in).
inline constexpr const char* kLfsr = R"(
module lfsr
input in
output q
wire d
dff acc 1 q d
cell x XOR2 1 d q in
endmodule
)";

// ff0 -> NOT -> ff1 -> NOT -> ff2 -> NOT -> ff0, nothing observed.
inline constexpr const char* kRing3 = R"(
module ring3
input unused
output probe
wire q0 q1 q2 d0 d1 d2
dff ff0 1 q0 d0
dff ff1 1 q1 d1
dff ff2 1 q2 d2
cell n0 NOT 1 d1 q0
cell n1 NOT 1 d2 q1
cell n2 NOT 1 d0 q2
cell b BUF 1 probe unused
endmodule
)";

// D = AND(AND(AND(a, b), c), d): three levels deep.
inline constexpr const char* kAndTree = R"(
module andtree
input a b c d
output q
wire t1 t2 t3
cell g1 AND2 1 t1 a b
cell g2 AND2 1 t2 t1 c
cell g3 AND2 1 t3 t2 d
dff r 4 q t3
endmodule
)";

// Isolated DFF: D tied to a PI, Q to a PO.
inline constexpr const char* kPassThrough = R"(
module pass
input a
output q
dff r 2 q a
endmodule
)";

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string data_path(const std::string& name) { return std::string(FDR_TEST_DATA) + "/" + name; }

/// Random loop-free netlist: combinational cells only read PIs, DFF outputs
/// and earlier cells; DFF D pins read any net.
inline fdr::Netlist random_netlist(std::uint64_t seed, std::size_t n_pi = 3, std::size_t n_ff = 5,
                                   std::size_t n_cells = 12, std::size_t n_po = 3) {
  using fdr::CellKind;
  fdr::Rng rng(seed);
  fdr::NetlistBuilder b("rand" + std::to_string(seed));
  std::vector<std::string> sources;
  for (std::size_t i = 0; i < n_pi; ++i) {
    sources.push_back("pi" + std::to_string(i));
    b.add_input(sources.back());
  }
  std::vector<std::string> qs;
  for (std::size_t i = 0; i < n_ff; ++i) {
    qs.push_back("q[" + std::to_string(i) + "]");
    b.add_wire(qs.back());
    sources.push_back(qs.back());
  }
  const CellKind kinds[] = {CellKind::Buf,  CellKind::Not,  CellKind::And2,  CellKind::And3,
                            CellKind::Or2,  CellKind::Or3,  CellKind::Nand2, CellKind::Nor2,
                            CellKind::Xor2, CellKind::Xnor2, CellKind::Mux2};
  for (std::size_t i = 0; i < n_cells; ++i) {
    const CellKind k = kinds[rng.below(std::size(kinds))];
    std::vector<std::string> ins;
    for (std::size_t p = 0; p < fdr::cell_arity(k); ++p) ins.push_back(sources[rng.below(sources.size())]);
    std::string out = "n" + std::to_string(i);
    b.add_wire(out);
    b.add_cell("g" + std::to_string(i), k, static_cast<int>(1 + rng.below(4)), out, ins);
    sources.push_back(out);
  }
  for (std::size_t i = 0; i < n_ff; ++i) {
    b.add_cell("r[" + std::to_string(i) + "]", CellKind::Dff, static_cast<int>(1 + rng.below(4)), qs[i],
               {sources[rng.below(sources.size())]});
  }
  std::vector<bool> used(sources.size(), false);
  for (std::size_t i = 0; i < n_po; ++i) {
    std::size_t pick = n_pi + rng.below(sources.size() - n_pi);
    if (used[pick]) continue;
    used[pick] = true;
    b.add_output(sources[pick]);
  }
  return std::move(b).build();
}

}  // namespace fixtures
