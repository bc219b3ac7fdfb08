#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace fdr {

/// Strobed packet pipeline: `stages` held input stages of `width` bits with
/// a valid pipeline, payload output registers with an out_valid strobe, an
/// XOR checksum ring driving a status output, and an unobserved packet
/// counter. Flip-flops: stages * (width + 1) + 2 * width + 1 + counter_bits.
struct DemoOptions {
  std::size_t width = 8;
  std::size_t stages = 6;
  std::size_t counter_bits = 8;
  std::size_t cycles = 200;
  std::size_t injections_per_ff = 170;
};

struct DemoFiles {
  std::string netlist;   // demo.net
  std::string stimulus;  // demo.stim
  std::string config;    // demo.toml, refers to the two files above
};

/// Deterministic per seed. Throws InvalidArgument for width, stages or
/// cycles below 1 (cycles below 20).
DemoFiles generate_demo(std::uint64_t seed, const DemoOptions& options = {});

}  // namespace fdr
