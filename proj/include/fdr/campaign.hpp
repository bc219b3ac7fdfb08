#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdr/netlist.hpp"
#include "fdr/simulator.hpp"

namespace fdr {

/// Default number of injections per flip-flop.
inline constexpr std::size_t kDefaultInjectionsPerFf = 170;

struct CampaignPlan {
  std::size_t injections_per_ff = kDefaultInjectionsPerFf;
  std::uint64_t seed = 0;
  std::vector<std::size_t> target_ffs;                   // flip-flop ordinals
  std::vector<std::vector<std::size_t>> injection_cycles;  // parallel to target_ffs

  std::size_t total_runs() const;
};

/// Injection cycles drawn uniformly (with replacement) from the active
/// window. The stream of flip-flop i depends only on (seed, i), so a
/// flip-flop's cycles do not depend on which other targets are planned.
/// `targets` defaults to every flip-flop in declaration order.
CampaignPlan plan_campaign(const Netlist& net, const Stimulus& stim, std::size_t injections_per_ff,
                           std::uint64_t seed, std::optional<std::vector<std::size_t>> targets = std::nullopt);

/// One injection at every cycle of the active window per target.
CampaignPlan plan_exhaustive(const Netlist& net, const Stimulus& stim,
                             std::optional<std::vector<std::size_t>> targets = std::nullopt);

/// Payload and valid strobe given as positions in the primary output list.
struct CheckerConfig {
  std::vector<std::size_t> payload;
  std::size_t valid = 0;
};

CheckerConfig make_checker(const Netlist& net, const std::vector<std::string>& payload_outputs,
                           const std::string& valid_output);

enum class FailureClass { None, Output, OutputAndApplication };

/// Output failure: any output differs at a cycle >= injection_cycle.
/// Application failure: the payload words accepted (valid == 1) from
/// injection_cycle on differ from golden, in value or in count.
FailureClass classify_run(const GoldenTrace& golden, const OutputTrace& faulty, const CheckerConfig& checker,
                          std::size_t injection_cycle);

struct FdrRecord {
  std::size_t ff = 0;
  std::string name;
  std::size_t runs = 0;
  std::size_t output_failures = 0;
  std::size_t application_failures = 0;

  double fdr_output() const { return runs ? static_cast<double>(output_failures) / static_cast<double>(runs) : 0.0; }
  double fdr_application() const {
    return runs ? static_cast<double>(application_failures) / static_cast<double>(runs) : 0.0;
  }
  bool operator==(const FdrRecord&) const = default;
};

struct CampaignResult {
  std::vector<FdrRecord> records;  // in plan target order
  std::size_t total_runs = 0;
  double wall_seconds = 0.0;
};

struct CampaignOptions {
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Executes every planned injection against the golden run. Counts are
/// reduced per flip-flop, so the table does not depend on thread count or
/// execution order.
CampaignResult run_campaign(const Netlist& net, const Stimulus& stim, const CampaignPlan& plan,
                            const CheckerConfig& checker, const CampaignOptions& options = {});

void write_fdr_csv(std::ostream& out, const std::vector<FdrRecord>& records);
std::vector<FdrRecord> read_fdr_csv(std::istream& in, const Netlist& net);

}  // namespace fdr
