#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fdr/evaluation.hpp"

namespace fdr {

/// Scalar or flat array value of the key/value config format.
struct ConfigValue {
  using Scalar = std::variant<bool, std::int64_t, double, std::string>;
  std::variant<Scalar, std::vector<Scalar>> value;
  std::size_t line = 0;

  bool is_array() const { return value.index() == 1; }
};

/// A TOML subset: `[section]` headers (dotted names allowed), `key = value`
/// lines, strings, integers, floats, booleans, one-line arrays, `#`
/// comments. Keys before the first header belong to section "".
class ConfigDocument {
 public:
  using Section = std::map<std::string, ConfigValue>;

  /// Throws Config (with line) on malformed input or duplicate keys.
  static ConfigDocument parse(std::string_view text);

  const std::map<std::string, Section>& sections() const { return sections_; }

 private:
  std::map<std::string, Section> sections_;
};

struct ModelConfig {
  std::string id;
  ml::SearchSpace space;
};

/// The 11 model ids: ols, knn, tree, krr-{linear,poly,rbf,sigmoid},
/// svr-{linear,poly,rbf,sigmoid}.
const std::vector<std::string>& model_ids();
/// Base hyperparameters for a model id; throws Config for unknown ids.
ml::Hyperparams model_base(const std::string& id);

enum class Target { Output, Application };

struct RunConfig {
  std::filesystem::path base_dir;  // directory of the config file
  std::string netlist;
  std::string stimulus;
  std::string out = "results";
  std::uint64_t seed = 1;

  std::vector<std::string> payload;
  std::string valid;

  std::size_t injections_per_ff = 170;
  std::uint64_t campaign_seed = 1;
  std::vector<std::string> flip_flops;  // empty = all
  unsigned threads = 0;

  ml::CvPlan cv;

  Target target = Target::Output;
  double train_fraction = 0.5;
  double time_budget_seconds = 1800.0;
  std::vector<ModelConfig> models;

  std::string curve_model = "tree";
  std::vector<double> curve_sizes{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

  std::filesystem::path netlist_path() const { return base_dir / netlist; }
  std::filesystem::path stimulus_path() const { return base_dir / stimulus; }
  std::filesystem::path out_path() const { return base_dir / out; }
};

struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> target;
  std::optional<double> train_fraction;
};

/// Parses and resolves a config. Section seeds default to the global seed.
/// Throws Config for unknown keys, bad values and missing input files.
RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides = {});
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           const Overrides& overrides = {});

/// Every resolved setting in the config syntax; parses back to an equal
/// configuration.
std::string effective_config(const RunConfig& config);

/// "loguniform lo hi", "uniform lo hi", "int lo hi", "int0 lo hi" (adds 0).
ml::Distribution parse_distribution(std::string_view text);
std::string describe_distribution(const ml::Distribution& d);

}  // namespace fdr
