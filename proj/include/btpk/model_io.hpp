#pragma once

// model.bin layout (little endian):
//   8 bytes   magic "BTPKMODL"
//   u32       format version
//   u64       header length, then that many bytes of JSON:
//             {config, vocab, tags, param_count, meta}
//   u64       parameter count, then that many IEEE-754 doubles

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "btpk/brnn.hpp"

namespace btpk {

inline constexpr std::uint32_t kModelFormatVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c);
/// Strict: unknown keys throw DataError. Missing keys keep their defaults.
ModelConfig config_from_json(const nlohmann::json& j);

/// `meta` is stored verbatim in the header (run config, seed, ...).
void save_model(const BrnnModel& model, std::ostream& out, const nlohmann::json& meta = {});
void save_model(const BrnnModel& model, const std::filesystem::path& path,
                const nlohmann::json& meta = {});

struct LoadedModel {
  BrnnModel model;
  nlohmann::json meta;
};

/// Throws DataError on bad magic, version mismatch or truncation.
LoadedModel load_model(std::istream& in);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace btpk
