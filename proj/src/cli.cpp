#include "btpk/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "btpk/config.hpp"
#include "btpk/corpus.hpp"
#include "btpk/error.hpp"
#include "btpk/explain.hpp"
#include "btpk/logic.hpp"
#include "btpk/model_io.hpp"
#include "btpk/pipeline.hpp"

namespace btpk::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

fs::path model_path(const std::string& m) {
  fs::path p(m);
  return fs::is_directory(p) ? p / "model.bin" : p;
}

std::size_t parse_index(std::string_view s, const std::string& what) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) throw UsageError("bad " + what + " '" + std::string(s) + "'");
  return v;
}

GramSpan parse_entity(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw UsageError("--entity expects a:b (0-based, inclusive)");
  const GramSpan g{parse_index(std::string_view(s).substr(0, colon), "entity start"),
                   parse_index(std::string_view(s).substr(colon + 1), "entity end")};
  if (g.start > g.end) throw UsageError("--entity start must not exceed its end");
  return g;
}

// "s3" / "3" -> id 3; "s_3" -> trunk state at height 3; "s'_3" -> primed.
std::size_t parse_state(const BtpkModel& m, const std::string& s) {
  auto by_height = [&](std::string_view h, bool primed) {
    const auto id = m.state_at(parse_index(h, "state height"), primed);
    if (!id) throw DataError("no state " + s + " in the model");
    return *id;
  };
  if (s.rfind("s'_", 0) == 0) return by_height(std::string_view(s).substr(3), true);
  if (s.rfind("s_", 0) == 0) return by_height(std::string_view(s).substr(2), false);
  const std::string_view digits = s.rfind('s', 0) == 0 ? std::string_view(s).substr(1) : s;
  const std::size_t id = parse_index(digits, "state");
  if (id >= m.states.size()) throw DataError("no state " + s + " in the model");
  return id;
}

std::string join(const std::vector<std::string>& xs, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

// ---------------------------------------------------------------- train

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& out_dir, std::ostream& out, std::ostream& err) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  const auto data = parse_conll(read_file(data_path));
  if (data.empty()) throw DataError("no sentences in '" + data_path + "'");

  Tagset tagset = cfg.tags ? Tagset(*cfg.tags) : Tagset::infer(data);
  std::size_t bad_adjacency = 0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    for (const auto& v : validate_bio(data[s], tagset)) {
      if (!tagset.contains(data[s].labels.at(v.position)))
        throw DataError("sentence " + std::to_string(s + 1) + ", token " +
                        std::to_string(v.position + 1) + ": " + v.reason);
      ++bad_adjacency;
    }
  }
  if (bad_adjacency > 0)
    err << "warning: " << bad_adjacency << " BIO adjacency violation(s) in training data\n";

  Split split{data, {}};
  if (cfg.dev_fraction > 0.0 && data.size() > 1)
    split = split_dataset(data, cfg.dev_fraction, cfg.model_config.seed);
  const Vocab vocab = build_vocab(split.train, cfg.min_freq);
  BrnnModel model = init_model(cfg.model_config, vocab, tagset);
  const auto history = train(model, split.train, split.test);

  nlohmann::ordered_json log;
  log["config"] = cfg.to_json();
  log["seed"] = cfg.model_config.seed;
  log["train_sequences"] = split.train.size();
  log["dev_sequences"] = split.test.size();
  log["history"] = nlohmann::ordered_json::array();
  for (const auto& r : history) {
    nlohmann::ordered_json e;
    e["epoch"] = r.epoch;
    e["train_loss"] = r.train_loss;
    e["dev_accuracy"] = r.dev_accuracy ? nlohmann::ordered_json(*r.dev_accuracy) : nullptr;
    log["history"].push_back(e);
  }
  fs::create_directories(out_dir);
  nlohmann::json meta;
  meta["config"] = cfg.to_json();
  meta["seed"] = cfg.model_config.seed;
  save_model(model, fs::path(out_dir) / "model.bin", meta);
  write_file(fs::path(out_dir) / "train_log.json", log.dump(2) + "\n");

  const auto& last = history.back();
  out << "trained " << history.size() << " epochs on " << split.train.size()
      << " sequences; final loss " << last.train_loss;
  if (last.dev_accuracy) out << ", dev token accuracy " << *last.dev_accuracy;
  out << "\nwrote " << (fs::path(out_dir) / "model.bin").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- tag

int cmd_tag(const std::string& model_file, const std::string& input, std::ostream& out) {
  const auto loaded = load_model(model_path(model_file));
  auto data = parse_tokens(read_file(input));
  for (auto& seq : data) seq.labels = predict_tags(loaded.model, seq.tokens);
  out << render_conll(data);
  return kOk;
}

// ---------------------------------------------------------------- explain

int cmd_explain(const std::string& model_file, const std::string& input,
                const std::string& entity, std::size_t sentence, const std::string& config_path,
                const std::string& out_dir, std::ostream& out) {
  const auto loaded = load_model(model_path(model_file));
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  else if (loaded.meta.is_object() && loaded.meta.contains("config"))
    cfg = parse_config(loaded.meta["config"]);

  const auto data = parse_tokens(read_file(input));
  if (sentence >= data.size())
    throw DataError("input has " + std::to_string(data.size()) + " sentence(s); --sentence " +
                    std::to_string(sentence) + " is out of range");
  std::optional<GramSpan> target;
  if (!entity.empty()) target = parse_entity(entity);
  const SentenceAnalysis a =
      analyze_sentence(loaded.model, data[sentence].tokens, target, cfg.announce_options());

  const std::uint64_t seed = loaded.model.config().seed;
  nlohmann::ordered_json meta;
  meta["config"] = cfg.to_json();
  meta["seed"] = seed;

  std::ostringstream text;
  text << "# seed: " << seed << "\n";
  text << "# config: " << meta["config"].dump() << "\n";
  text << "Sentence: " << join(a.tokens, " ") << "\n";
  text << "Predicted: " << join(a.predicted, " ") << "\n";
  text << "Branch points:";
  for (std::size_t p : a.branch_points) text << ' ' << p;
  text << "\n";
  if (a.explanations.empty()) text << "\nNo entity was predicted in this sentence.\n";
  for (const auto& e : a.explanations) text << "\n" << explanation_to_text(e);

  nlohmann::ordered_json ej;
  ej["meta"] = meta;
  ej["tokens"] = a.tokens;
  ej["predicted"] = a.predicted;
  ej["branch_points"] = a.branch_points;
  ej["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : a.reports) ej["reports"].push_back(report_to_json(r));
  ej["explanations"] = nlohmann::ordered_json::array();
  for (const auto& e : a.explanations) ej["explanations"].push_back(explanation_to_json(e));

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_file(dir / "explanation.txt", text.str());
  write_file(dir / "explanation.json", ej.dump(2) + "\n");
  write_file(dir / "btpk.json", export_json(a.btpk, a.tokens, meta));
  write_file(dir / "tree.dot", "// seed: " + std::to_string(seed) + "\n" + export_dot(a.btpk, a.tokens));
  out << text.str();
  return kOk;
}

// ---------------------------------------------------------------- check / export

int cmd_check(const std::string& btpk_path, const std::string& formula_text,
              const std::string& state, bool all, const std::vector<std::string>& defines,
              std::ostream& out) {
  if (all == !state.empty()) throw UsageError("check needs exactly one of --state or --all");
  const BtpkDocument doc = import_json(read_file(btpk_path));
  std::map<std::string, Formula> defs;
  for (const auto& d : defines) {
    const auto eq = d.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--define expects name=formula");
    defs.emplace(d.substr(0, eq), parse_formula(d.substr(eq + 1)));
  }
  const Formula f = substitute_atoms(parse_formula(formula_text), defs);
  if (all) {
    const auto states = check_all(doc.model, f);
    std::vector<std::string> names;
    for (std::size_t s : states) names.push_back("s" + std::to_string(s));
    out << "{" << join(names, ", ") << "}\n";
    return kOk;
  }
  const std::size_t s = parse_state(doc.model, state);
  const bool verdict = check(doc.model, s, f);
  out << (verdict ? "true" : "false") << "\n";
  return verdict ? kOk : kVerdictFalse;
}

int cmd_export(const std::string& btpk_path, const std::string& format, std::ostream& out) {
  const BtpkDocument doc = import_json(read_file(btpk_path));
  if (format == "dot") out << export_dot(doc.model, doc.tokens);
  else if (format == "json") out << export_json(doc.model, doc.tokens, doc.meta);
  else throw UsageError("--format must be dot or json");
  return kOk;
}

int cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out_file,
              std::ostream& out) {
  SyntheticSpec spec = SyntheticSpec::default_spec();
  if (!spec_path.empty()) {
    try {
      spec = SyntheticSpec::from_json(nlohmann::json::parse(read_file(spec_path)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("synthetic spec is not valid JSON: " + std::string(e.what()));
    }
  }
  const auto data = generate_synthetic(spec, seed);
  write_file(out_file, render_conll(data));
  out << "wrote " << data.size() << " sequences (seed " << seed << ") to " << out_file << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"BTPK: explain bidirectional RNN NER decisions with public announcements"};
  app.name("btpk");
  app.require_subcommand(1);

  std::string data, config, out_path, model, input, entity, btpk_file, formula, state, format,
      spec;
  std::size_t sentence = 0;
  std::uint64_t seed = 42;
  bool all = false;
  std::vector<std::string> defines;

  auto* train_cmd = app.add_subcommand("train", "train a tagger and write <out>/model.bin");
  train_cmd->add_option("--data", data, "CoNLL training file")->required();
  train_cmd->add_option("--config", config, "JSON run config");
  train_cmd->add_option("--out", out_path, "output directory")->required();

  auto* tag_cmd = app.add_subcommand("tag", "print predicted BIO tags");
  tag_cmd->add_option("--model", model, "model.bin or its directory")->required();
  tag_cmd->add_option("--input", input, "tokens, one per line")->required();

  auto* explain_cmd = app.add_subcommand("explain", "extract announcements and explain entities");
  explain_cmd->add_option("--model", model, "model.bin or its directory")->required();
  explain_cmd->add_option("--input", input, "tokens, one per line")->required();
  explain_cmd->add_option("--entity", entity, "target span a:b (0-based, inclusive)");
  explain_cmd->add_option("--sentence", sentence, "sentence index in the input (default 0)");
  explain_cmd->add_option("--config", config, "JSON run config (announcement settings)");
  explain_cmd->add_option("--out", out_path, "output directory (default .)");

  auto* check_cmd = app.add_subcommand("check", "model-check a formula on a BTPK JSON file");
  check_cmd->add_option("--btpk", btpk_file, "BTPK JSON")->required();
  check_cmd->add_option("--formula", formula, "formula text")->required();
  check_cmd->add_option("--state", state, "state: s<id>, <id>, s_<h> or s'_<h>");
  check_cmd->add_flag("--all", all, "print every satisfying state");
  check_cmd->add_option("--define", defines, "atom alias, e.g. q=label(video)");

  auto* export_cmd = app.add_subcommand("export", "render a BTPK JSON file");
  export_cmd->add_option("--btpk", btpk_file, "BTPK JSON")->required();
  export_cmd->add_option("--format", format, "dot or json")->required();

  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic disambiguation corpus");
  synth_cmd->add_option("--spec", spec, "JSON synthetic spec (default built in)");
  synth_cmd->add_option("--seed", seed, "generator seed")->required();
  synth_cmd->add_option("--out", out_path, "output CoNLL file")->required();

  std::vector<const char*> argv{"btpk"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kOk;
    if (app.get_subcommands().empty()) err << app.help();
    return kUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(data, config, out_path, out, err);
    if (tag_cmd->parsed()) return cmd_tag(model, input, out);
    if (explain_cmd->parsed())
      return cmd_explain(model, input, entity, sentence, config,
                         out_path.empty() ? std::string(".") : out_path, out);
    if (check_cmd->parsed()) return cmd_check(btpk_file, formula, state, all, defines, out);
    if (export_cmd->parsed()) return cmd_export(btpk_file, format, out);
    if (synth_cmd->parsed()) return cmd_synth(spec, seed, out_path, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormulaParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  err << app.help();
  return kUsage;
}

}  // namespace btpk::cli
