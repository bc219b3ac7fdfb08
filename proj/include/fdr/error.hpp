#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fdr {

enum class Errc {
  Syntax,
  MultipleDrivers,
  UndrivenNet,
  CombinationalLoop,
  ArityMismatch,
  UnknownFlipFlop,
  FaultCycleOutOfRange,
  UnknownStimulusNet,
  ZeroCycles,
  EmptyActiveWindow,
  DimensionMismatch,
  MissingActivity,
  KTooLarge,
  InvalidHyperparam,
  SingularSystem,
  LengthMismatch,
  TooFewRows,
  TooFewTest,
  InvalidArgument,
  Io,
  Config,
};

std::string_view errc_name(Errc code);

/// Domain error carrying a machine-readable code. `line()` is 1-based and
/// only set for errors raised while reading a text file (0 otherwise).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::size_t line = 0);

  Errc code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  /// Message without the code/line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::size_t line_;
  std::string detail_;
};

}  // namespace fdr
