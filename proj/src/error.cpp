#include "fdr/error.hpp"

namespace fdr {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::Syntax: return "SyntaxError";
    case Errc::MultipleDrivers: return "MultipleDrivers";
    case Errc::UndrivenNet: return "UndrivenNet";
    case Errc::CombinationalLoop: return "CombinationalLoop";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::UnknownFlipFlop: return "UnknownFlipFlop";
    case Errc::FaultCycleOutOfRange: return "FaultCycleOutOfRange";
    case Errc::UnknownStimulusNet: return "StimulusReferencesUnknownNet";
    case Errc::ZeroCycles: return "ZeroCycles";
    case Errc::EmptyActiveWindow: return "EmptyActiveWindow";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::MissingActivity: return "MissingActivity";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::InvalidHyperparam: return "InvalidHyperparam";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::TooFewTest: return "TooFewTest";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "IoError";
    case Errc::Config: return "ConfigError";
  }
  return "Error";
}

namespace {

std::string decorate(Errc code, const std::string& message, std::size_t line) {
  std::string out(errc_name(code));
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::size_t line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line), detail_(message) {}

}  // namespace fdr
