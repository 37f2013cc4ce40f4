#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "klsh/classifier.hpp"
#include "klsh/hashfn.hpp"
#include "klsh/optimizer.hpp"
#include "klsh/synth.hpp"

namespace klsh {

inline constexpr int kModelFormatVersion = 1;

/// Everything `fit` persists.
struct ModelFile {
  int format_version = kModelFormatVersion;
  HashEnsemble ensemble;
  LearnConfig learn_config;
  std::optional<std::string> truncation_warning;
  std::optional<Forest> forest;
  /// Points re-marked TEST for inductive fitting; kept out of classifier
  /// training unless requested.
  std::vector<std::string> pseudo_test_ids;
};

/// Deterministic text form of a JSON value: sorted keys, two-space indent,
/// floating-point numbers with 17 significant digits.
std::string canonical_dump(const nlohmann::json& j);

std::string serialize_model(const ModelFile& model);
/// Throws ValidationError on an unknown format_version, unresolved reference
/// ids, or malformed content.
ModelFile deserialize_model(const std::string& text);

ModelFile load_model(const std::string& path);
void save_model(const std::string& path, const ModelFile& model);

// Config (de)serialization. Readers reject unknown fields and name the
// offending field in their error.
nlohmann::json to_json(const KernelConfig& c);
KernelConfig kernel_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LearnConfig& c);
LearnConfig learn_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ForestConfig& c);
ForestConfig forest_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Forest& f);
Forest forest_from_json(const nlohmann::json& j);

nlohmann::json payload_to_json(const Payload& p);
Payload payload_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace klsh
