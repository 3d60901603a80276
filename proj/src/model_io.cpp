#include "btpk/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "btpk/error.hpp"

namespace btpk {

namespace {

constexpr char kMagic[8] = {'B', 'T', 'P', 'K', 'M', 'O', 'D', 'L'};

static_assert(std::endian::native == std::endian::little,
              "model files are written in host order; big-endian hosts need byte swapping");

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("model file truncated");
  return v;
}

}  // namespace

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["embedding_dim"] = c.embedding_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["mask_propagation"] = std::string(to_string(c.mask_propagation));
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("model config must be a JSON object");
  ModelConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "embedding_dim") c.embedding_dim = value.get<std::size_t>();
      else if (key == "hidden_dim") c.hidden_dim = value.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "mask_propagation")
        c.mask_propagation = parse_mask_propagation(value.get<std::string>());
      else throw DataError("unknown model config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model config value: ") + e.what());
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return c;
}

void save_model(const BrnnModel& model, std::ostream& out, const nlohmann::json& meta) {
  nlohmann::ordered_json header;
  header["config"] = config_to_json(model.config());
  header["vocab"] = model.vocab().tokens();
  header["tags"] = model.tagset().tags();
  header["param_count"] = model.params().size();
  header["meta"] = meta;
  const std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kModelFormatVersion);
  write_pod(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_pod(out, static_cast<std::uint64_t>(model.params().size()));
  out.write(reinterpret_cast<const char*>(model.params().data()),
            static_cast<std::streamsize>(model.params().size() * sizeof(double)));
  if (!out) throw DataError("failed to write model");
}

void save_model(const BrnnModel& model, const std::filesystem::path& path,
                const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  save_model(model, out, meta);
}

LoadedModel load_model(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a BTPK model file");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kModelFormatVersion)
    throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  const auto header_len = read_pod<std::uint64_t>(in);
  if (header_len > (1ULL << 30)) throw DataError("model header too large");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len)))
    throw DataError("model file truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt model header: ") + e.what());
  }
  if (!header.contains("config") || !header.contains("vocab") || !header.contains("tags"))
    throw DataError("model header misses config, vocab or tags");
  ModelConfig config = config_from_json(header["config"]);
  std::optional<BrnnModel> model;
  try {
    model.emplace(config, Vocab(header["vocab"].get<std::vector<std::string>>()),
                  Tagset(header["tags"].get<std::vector<std::string>>()));
  } catch (const ContractError& e) {
    throw DataError(std::string("invalid model header: ") + e.what());
  }
  const auto count = read_pod<std::uint64_t>(in);
  if (count != model->params().size())
    throw DataError("parameter count " + std::to_string(count) + " does not match shapes (" +
                    std::to_string(model->params().size()) + ")");
  if (!in.read(reinterpret_cast<char*>(model->params().data()),
               static_cast<std::streamsize>(count * sizeof(double))))
    throw DataError("model file truncated");
  return {std::move(*model), header.value("meta", nlohmann::json{})};
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path.string() + "'");
  return load_model(in);
}

}  // namespace btpk
