#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fdr/netlist.hpp"
#include "fdr/simulator.hpp"

namespace fdr {

inline constexpr std::size_t kFeatureCount = 20;

/// Stage count used for "no path" in pi_proximity / po_proximity.
inline constexpr std::uint32_t kUnreachable = 65535;

struct FeatureVector {
  std::uint32_t ff_fanin = 0;       // distinct DFF + PI sources of the D cone
  std::uint32_t ff_fanout = 0;      // distinct DFF + PO sinks of the Q cone
  std::uint32_t conn_from_ffs = 0;
  std::uint32_t conn_to_ffs = 0;
  bool from_pi = false;
  std::uint32_t pi_proximity = kUnreachable;
  bool to_po = false;
  std::uint32_t po_proximity = kUnreachable;
  bool in_bus = false;
  std::uint32_t bus_position = 0;
  std::uint32_t bus_length = 1;
  bool has_feedback = false;
  std::uint32_t feedback_depth = 0;
  std::uint32_t drive_strength = 1;
  std::uint32_t comb_fanin = 0;
  std::uint32_t comb_fanout = 0;
  std::uint32_t comb_depth = 0;
  std::uint64_t toggle_count = 0;
  double time_at_0 = 1.0;
  double time_at_1 = 0.0;

  /// Values in feature_names() order.
  std::array<double, kFeatureCount> values() const;
  bool operator==(const FeatureVector&) const = default;
};

const std::array<std::string_view, kFeatureCount>& feature_names();

struct BusInfo {
  bool in_bus = false;
  std::uint32_t position = 0;
  std::uint32_t length = 1;
  bool operator==(const BusInfo&) const = default;
};

/// Groups names of the form `base[index]`; groups of two or more are buses.
/// Position is the parsed index, length the member count.
std::vector<BusInfo> bus_detect(const std::vector<std::string>& ff_names);

enum class ProximityDirection { ToPrimaryInput, ToPrimaryOutput };

/// Minimum number of flip-flop stages between each flip-flop and any
/// primary input (or output); 0 when connected through combinational logic
/// only, kUnreachable when no path exists.
std::vector<std::uint32_t> proximity(const Netlist& net, ProximityDirection direction);

struct FeatureTable {
  std::vector<std::string> ff_names;
  std::vector<FeatureVector> rows;
  double wall_seconds = 0.0;
};

/// Throws MissingActivity if `stats` does not cover every flip-flop.
FeatureTable extract_features(const Netlist& net, const ActivityStats& stats);

void write_features_csv(std::ostream& out, const FeatureTable& table);

}  // namespace fdr
