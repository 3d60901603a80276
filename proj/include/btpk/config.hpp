#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "btpk/announce.hpp"
#include "btpk/brnn.hpp"

namespace btpk {

/// Flat JSON run configuration. Every key is optional; unknown keys are
/// rejected. Model defaults: batch 32, learning rate 1e-4, dims 128.
struct RunConfig {
  std::optional<std::string> data;
  std::optional<std::string> model;
  std::optional<std::string> out;
  ModelConfig model_config;
  std::size_t max_len = 3;
  std::vector<Side> sides{Side::Both, Side::Forward, Side::Backward};
  double dev_fraction = 0.1;
  std::size_t min_freq = 1;
  std::optional<std::vector<std::string>> tags;

  AnnounceOptions announce_options() const;
  /// The effective configuration, every field spelled out.
  nlohmann::ordered_json to_json() const;
};

/// Throws DataError naming the offending key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace btpk
