#include "btpk/config.hpp"

#include <fstream>

#include "btpk/error.hpp"
#include "btpk/model_io.hpp"

namespace btpk {

AnnounceOptions RunConfig::announce_options() const {
  AnnounceOptions o;
  o.max_len = max_len;
  o.sides = sides;
  return o;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  if (data) j["data"] = *data;
  if (model) j["model"] = *model;
  if (out) j["out"] = *out;
  const nlohmann::json mc = config_to_json(model_config);
  for (const auto& [k, v] : mc.items()) j[k] = v;
  j["max_len"] = max_len;
  std::vector<std::string> side_names;
  for (Side s : sides) side_names.emplace_back(to_string(s));
  j["sides"] = side_names;
  j["dev_fraction"] = dev_fraction;
  j["min_freq"] = min_freq;
  if (tags) j["tags"] = *tags;
  return j;
}

RunConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw DataError("config must be a JSON object");
  RunConfig c;
  nlohmann::json model_keys = nlohmann::json::object();
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "data") c.data = value.get<std::string>();
      else if (key == "model") c.model = value.get<std::string>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "max_len") c.max_len = value.get<std::size_t>();
      else if (key == "dev_fraction") c.dev_fraction = value.get<double>();
      else if (key == "min_freq") c.min_freq = value.get<std::size_t>();
      else if (key == "tags") c.tags = value.get<std::vector<std::string>>();
      else if (key == "sides") {
        c.sides.clear();
        for (const auto& s : value) c.sides.push_back(parse_side(s.get<std::string>()));
      } else if (key == "embedding_dim" || key == "hidden_dim" || key == "learning_rate" ||
                 key == "batch_size" || key == "epochs" || key == "seed" ||
                 key == "mask_propagation") {
        model_keys[key] = value;
      } else {
        throw DataError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad config value: ") + e.what());
  } catch (const ContractError& e) {
    throw DataError(std::string("bad config value: ") + e.what());
  }
  c.model_config = config_from_json(model_keys);
  try {
    c.model_config.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("bad config value: ") + e.what());
  }
  if (c.max_len < 1) throw DataError("config key 'max_len' must be at least 1");
  if (c.sides.empty()) throw DataError("config key 'sides' must not be empty");
  if (c.min_freq < 1) throw DataError("config key 'min_freq' must be at least 1");
  if (!(c.dev_fraction >= 0.0 && c.dev_fraction < 1.0))
    throw DataError("config key 'dev_fraction' must lie in [0, 1)");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace btpk
