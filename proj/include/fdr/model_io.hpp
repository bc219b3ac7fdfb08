#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fdr/regression.hpp"

namespace fdr::ml {

inline constexpr int kModelSchemaVersion = 1;

/// Compact single-line JSON object of the hyperparameters the kind uses.
std::string hyperparams_json(const Hyperparams& hp);

void save_model(std::ostream& out, const TrainedModel& model);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
/// Throws Syntax for malformed documents or an unknown schema version.
TrainedModel load_model(std::istream& in);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace fdr::ml
