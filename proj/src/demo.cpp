#include "fdr/demo.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "fdr/error.hpp"
#include "fdr/random.hpp"

namespace fdr {

namespace {

class Writer {
 public:
  explicit Writer(Rng& rng) : rng_(rng) {}

  void cell(const std::string& name, const char* kind, const std::string& out, std::initializer_list<std::string> in) {
    body_ += fmt::format("cell {} {} {} {}", name, kind, drive(), out);
    for (const auto& i : in) body_ += " " + i;
    body_ += "\n";
    wire(out);
  }
  void dff(const std::string& name, const std::string& q, const std::string& d) {
    body_ += fmt::format("dff  {} {} {} {}\n", name, drive(), q, d);
    wire(q);
  }
  void output(const std::string& net) { outputs_.push_back(net); }
  void input(const std::string& net) { inputs_.push_back(net); }

  std::string text(const std::string& module) const {
    std::string out = "# Generated strobed packet pipeline.\nmodule " + module + "\n";
    out += "input " + join(inputs_) + "\n";
    out += "output " + join(outputs_) + "\n";
    std::vector<std::string> wires;
    for (const auto& w : wires_) {
      if (std::find(outputs_.begin(), outputs_.end(), w) == outputs_.end()) wires.push_back(w);
    }
    out += "wire " + join(wires) + "\n\n" + body_ + "endmodule\n";
    return out;
  }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : " ") + s;
    return out;
  }
  void wire(const std::string& net) { wires_.push_back(net); }
  int drive() { return 1 << rng_.below(3); }

  Rng& rng_;
  std::string body_;
  std::vector<std::string> inputs_, outputs_, wires_;
};

}  // namespace

DemoFiles generate_demo(std::uint64_t seed, const DemoOptions& o) {
  if (o.width < 1 || o.stages < 1) throw Error(Errc::InvalidArgument, "demo width and stages must be >= 1");
  if (o.cycles < 20) throw Error(Errc::InvalidArgument, "demo needs at least 20 cycles");
  if (o.injections_per_ff < 1) throw Error(Errc::InvalidArgument, "demo injections must be >= 1");
  Rng rng(derive_seed(seed, 0xDE30));
  Writer w(rng);
  const std::size_t W = o.width;
  auto idx = [](const std::string& base, std::size_t i) { return fmt::format("{}[{}]", base, i); };

  w.input("stall");
  w.input("in_valid");
  for (std::size_t i = 0; i < W; ++i) w.input(idx("in_data", i));
  for (std::size_t i = 0; i < W; ++i) w.output(idx("out_data", i));
  w.output("out_valid");
  w.output("status");

  w.cell("adv_gen", "NOT", "adv", {"stall"});

  // Held input stages: a stage loads its predecessor when the pipe advances.
  std::string prev_valid = "in_valid";
  std::vector<std::string> prev(W);
  for (std::size_t i = 0; i < W; ++i) prev[i] = idx("in_data", i);
  for (std::size_t s = 0; s < o.stages; ++s) {
    for (std::size_t i = 0; i < W; ++i) {
      const std::string q = idx(fmt::format("s{}_q", s), i), d = idx(fmt::format("s{}_d", s), i);
      w.cell(idx(fmt::format("stage{}_hold", s), i), "MUX2", d, {"adv", q, prev[i]});
      w.dff(idx(fmt::format("stage{}_data", s), i), q, d);
      prev[i] = q;
    }
    const std::string vq = fmt::format("v{}_q", s), vd = fmt::format("v{}_d", s);
    w.cell(fmt::format("stage{}_vhold", s), "MUX2", vd, {"adv", vq, prev_valid});
    w.dff(fmt::format("stage{}_valid", s), vq, vd);
    prev_valid = vq;
  }

  // Payload output registers load only accepted words.
  w.cell("out_enable", "AND2", "out_en", {prev_valid, "adv"});
  for (std::size_t i = 0; i < W; ++i) {
    const std::string d = idx("out_d", i);
    w.cell(idx("out_hold", i), "MUX2", d, {"out_en", idx("out_data", i), prev[i]});
    w.dff(idx("out_reg", i), idx("out_data", i), d);
  }
  w.dff("out_valid_reg", "out_valid", "out_en");

  // Checksum ring: valid words are folded into a rotating register that
  // clears whenever the last stage holds no valid word.
  for (std::size_t i = 0; i < W; ++i) {
    w.cell(idx("ck_mix", i), "XOR2", idx("ck_x", i), {idx("ck_q", (i + W - 1) % W), prev[i]});
    w.cell(idx("ck_clear", i), "AND2", idx("ck_d", i), {idx("ck_x", i), prev_valid});
    w.dff(idx("checksum", i), idx("ck_q", i), idx("ck_d", i));
  }
  w.cell("status_buf", "BUF", "status", {idx("ck_q", W - 1)});

  // Packet counter with no observable output.
  std::string carry = "in_valid";
  for (std::size_t i = 0; i < o.counter_bits; ++i) {
    w.cell(idx("cnt_sum", i), "XOR2", idx("cnt_d", i), {idx("cnt_q", i), carry});
    if (i + 1 < o.counter_bits) {
      w.cell(idx("cnt_carry", i), "AND2", idx("cnt_c", i), {idx("cnt_q", i), carry});
      carry = idx("cnt_c", i);
    }
    w.dff(idx("counter", i), idx("cnt_q", i), idx("cnt_d", i));
  }

  DemoFiles files;
  files.netlist = w.text("demo_pipeline");

  std::string& stim = files.stimulus;
  stim = fmt::format("# Random traffic with occasional stalls.\ncycles {}\nactive {} {}\n", o.cycles, o.stages + 2,
                     o.cycles - 1 - o.stages - 2);
  Rng traffic(derive_seed(seed, 0x57131));
  for (std::size_t c = 0; c < o.cycles; ++c) {
    stim += fmt::format("@{} stall={} in_valid={}", c, traffic.below(100) < 15 ? 1 : 0,
                        traffic.below(100) < 70 ? 1 : 0);
    for (std::size_t i = 0; i < W; ++i) stim += fmt::format(" {}={}", idx("in_data", i), traffic.below(2));
    stim += "\n";
  }

  std::string payload;
  for (std::size_t i = 0; i < W; ++i) payload += fmt::format("{}\"{}\"", i ? ", " : "", idx("out_data", i));
  files.config = fmt::format(R"(# Demo run configuration.
seed = {}

[paths]
netlist = "demo.net"
stimulus = "demo.stim"
out = "results"

[checker]
payload = [{}]
valid = "out_valid"

[campaign]
injections_per_ff = {}

[cv]
folds = 10
train_fraction = 0.5

[train]
target = "output"
train_fraction = 0.5
random_budget = 20
grid_points = 3
grid_span = 3.0

[learning_curve]
model = "tree"
sizes = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
)",
                             seed, payload, o.injections_per_ff);
  return files;
}

}  // namespace fdr
