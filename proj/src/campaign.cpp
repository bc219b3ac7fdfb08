#include "fdr/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <exception>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "fdr/error.hpp"
#include "fdr/random.hpp"

namespace fdr {

namespace {

std::vector<std::size_t> resolve_targets(const Netlist& net, std::optional<std::vector<std::size_t>> targets) {
  if (!targets) {
    std::vector<std::size_t> all(net.flip_flop_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  for (std::size_t ff : *targets) {
    if (ff >= net.flip_flop_count()) {
      throw Error(Errc::UnknownFlipFlop, "campaign target ordinal " + std::to_string(ff));
    }
  }
  return std::move(*targets);
}

const ActiveWindow& require_window(const Stimulus& stim) {
  if (!stim.active_window) throw Error(Errc::EmptyActiveWindow, "stimulus has no active cycles");
  return *stim.active_window;
}

}  // namespace

std::size_t CampaignPlan::total_runs() const {
  std::size_t n = 0;
  for (const auto& cycles : injection_cycles) n += cycles.size();
  return n;
}

CampaignPlan plan_campaign(const Netlist& net, const Stimulus& stim, std::size_t injections_per_ff,
                           std::uint64_t seed, std::optional<std::vector<std::size_t>> targets) {
  if (injections_per_ff < 1) throw Error(Errc::InvalidArgument, "injections_per_ff must be >= 1");
  const ActiveWindow& window = require_window(stim);
  CampaignPlan plan;
  plan.injections_per_ff = injections_per_ff;
  plan.seed = seed;
  plan.target_ffs = resolve_targets(net, std::move(targets));
  for (std::size_t ff : plan.target_ffs) {
    Rng rng(derive_seed(seed, ff));
    std::vector<std::size_t> cycles(injections_per_ff);
    for (auto& c : cycles) c = window.start + static_cast<std::size_t>(rng.below(window.length()));
    plan.injection_cycles.push_back(std::move(cycles));
  }
  return plan;
}

CampaignPlan plan_exhaustive(const Netlist& net, const Stimulus& stim,
                             std::optional<std::vector<std::size_t>> targets) {
  const ActiveWindow& window = require_window(stim);
  CampaignPlan plan;
  plan.injections_per_ff = window.length();
  plan.target_ffs = resolve_targets(net, std::move(targets));
  std::vector<std::size_t> cycles(window.length());
  for (std::size_t i = 0; i < cycles.size(); ++i) cycles[i] = window.start + i;
  plan.injection_cycles.assign(plan.target_ffs.size(), cycles);
  return plan;
}

CheckerConfig make_checker(const Netlist& net, const std::vector<std::string>& payload_outputs,
                           const std::string& valid_output) {
  auto position = [&](const std::string& name) {
    auto id = net.find_net(name);
    if (!id || !net.is_primary_output(*id)) {
      throw Error(Errc::InvalidArgument, "checker signal '" + name + "' is not a primary output");
    }
    return static_cast<std::size_t>(net.primary_output_position(*id));
  };
  CheckerConfig cfg;
  for (const auto& name : payload_outputs) cfg.payload.push_back(position(name));
  cfg.valid = position(valid_output);
  return cfg;
}

FailureClass classify_run(const GoldenTrace& golden, const OutputTrace& faulty, const CheckerConfig& checker,
                          std::size_t injection_cycle) {
  if (golden.cycles() != faulty.cycles() || golden.width() != faulty.width()) {
    throw Error(Errc::DimensionMismatch, "golden and faulty traces differ in shape");
  }
  const std::size_t width = golden.width();
  if (checker.valid >= width ||
      std::any_of(checker.payload.begin(), checker.payload.end(), [&](std::size_t p) { return p >= width; })) {
    throw Error(Errc::DimensionMismatch, "checker references an output beyond the trace width");
  }

  bool output_failure = false;
  for (std::size_t c = injection_cycle; c < golden.cycles() && !output_failure; ++c) {
    auto g = golden.row(c);
    auto f = faulty.row(c);
    output_failure = !std::equal(g.begin(), g.end(), f.begin());
  }
  if (!output_failure) return FailureClass::None;

  // Walk both accepted-word streams in lockstep.
  std::size_t gc = injection_cycle, fc = injection_cycle;
  const std::size_t end = golden.cycles();
  for (;;) {
    while (gc < end && !golden.bit(gc, checker.valid)) ++gc;
    while (fc < end && !faulty.bit(fc, checker.valid)) ++fc;
    if (gc == end || fc == end) {
      return (gc == end && fc == end) ? FailureClass::Output : FailureClass::OutputAndApplication;
    }
    for (std::size_t p : checker.payload) {
      if (golden.bit(gc, p) != faulty.bit(fc, p)) return FailureClass::OutputAndApplication;
    }
    ++gc;
    ++fc;
  }
}

CampaignResult run_campaign(const Netlist& net, const Stimulus& stim, const CampaignPlan& plan,
                            const CheckerConfig& checker, const CampaignOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  if (plan.injection_cycles.size() != plan.target_ffs.size()) {
    throw Error(Errc::InvalidArgument, "plan cycle lists do not match its targets");
  }
  for (std::size_t ff : plan.target_ffs) {
    if (ff >= net.flip_flop_count()) throw Error(Errc::UnknownFlipFlop, "plan targets ordinal " + std::to_string(ff));
  }

  const Simulator sim(net, stim);
  const GoldenRun golden(sim);

  const std::size_t tasks = plan.target_ffs.size();
  std::vector<FdrRecord> records(tasks);
  std::vector<std::exception_ptr> failures(tasks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t ff = plan.target_ffs[t];
      FdrRecord& rec = records[t];
      rec.ff = ff;
      rec.name = net.flip_flop(ff).name;
      try {
        for (std::size_t cycle : plan.injection_cycles[t]) {
          try {
            const OutputTrace faulty = golden.replay({ff, cycle});
            const FailureClass cls = classify_run(golden.trace(), faulty, checker, cycle);
            ++rec.runs;
            if (cls != FailureClass::None) ++rec.output_failures;
            if (cls == FailureClass::OutputAndApplication) ++rec.application_failures;
          } catch (const Error& e) {
            throw Error(e.code(), "run (ff " + rec.name + ", cycle " + std::to_string(cycle) + "): " + e.detail());
          }
        }
      } catch (...) {
        failures[t] = std::current_exception();
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(tasks, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  CampaignResult result;
  result.records = std::move(records);
  result.total_runs = plan.total_runs();
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void write_fdr_csv(std::ostream& out, const std::vector<FdrRecord>& records) {
  out << "ff_name,runs,output_failures,application_failures,fdr_output,fdr_application\n";
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{},{},{}\n", r.name, r.runs, r.output_failures, r.application_failures,
                       r.fdr_output(), r.fdr_application());
  }
}

std::vector<FdrRecord> read_fdr_csv(std::istream& in, const Netlist& net) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("ff_name,runs,output_failures,application_failures", 0) != 0) {
    throw Error(Errc::Syntax, "FDR table header missing", 1);
  }
  std::vector<FdrRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cols.push_back(cell);
    if (cols.size() != 6) throw Error(Errc::Syntax, "expected 6 columns", line_no);
    auto count = [&](const std::string& s) {
      std::size_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw Error(Errc::Syntax, "bad count '" + s + "'", line_no);
      return v;
    };
    FdrRecord r;
    r.name = cols[0];
    auto ff = net.find_flip_flop(r.name);
    if (!ff) throw Error(Errc::UnknownFlipFlop, "FDR table names unknown flip-flop '" + r.name + "'", line_no);
    r.ff = *ff;
    r.runs = count(cols[1]);
    r.output_failures = count(cols[2]);
    r.application_failures = count(cols[3]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace fdr
