#include "btpk/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "btpk/error.hpp"
#include "btpk/rng.hpp"

namespace btpk {

namespace {

bool has_bio_prefix(std::string_view tag, char head) {
  return tag.size() > 2 && tag[0] == head && (tag[1] == '_' || tag[1] == '-');
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<std::string> split_spaces(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

template <typename OnLine>
std::vector<TaggedSequence> parse_blocks(std::string_view text, OnLine on_line) {
  std::vector<TaggedSequence> out;
  TaggedSequence current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (!current.tokens.empty()) out.push_back(std::move(current));
      current = {};
    } else {
      on_line(line, line_no, current);
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  if (!current.tokens.empty()) out.push_back(std::move(current));
  return out;
}

}  // namespace

std::optional<std::string> tag_type(std::string_view tag) {
  if (tag == "O") return std::string("O");
  if (has_bio_prefix(tag, 'B') || has_bio_prefix(tag, 'I')) return std::string(tag.substr(2));
  return std::nullopt;
}

bool is_begin_tag(std::string_view tag) { return has_bio_prefix(tag, 'B'); }
bool is_inside_tag(std::string_view tag) { return has_bio_prefix(tag, 'I'); }

// ---------------------------------------------------------------- Tagset

Tagset::Tagset(std::vector<std::string> tags) : tags_(std::move(tags)) {
  std::set<std::string> begins, insides;
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    const std::string& t = tags_[i];
    if (!index_.emplace(t, i).second) throw ContractError("duplicate tag '" + t + "'");
    if (t == "O") continue;
    if (is_begin_tag(t)) {
      begins.insert(t.substr(2));
      if (std::find(types_.begin(), types_.end(), t.substr(2)) == types_.end())
        types_.push_back(t.substr(2));
    } else if (is_inside_tag(t)) {
      insides.insert(t.substr(2));
    } else {
      throw ContractError("tag '" + t + "' is neither O nor B_/I_ prefixed");
    }
  }
  if (!index_.contains("O")) throw ContractError("tagset must contain O");
  if (begins != insides) throw ContractError("every entity type needs both B and I tags");
}

Tagset Tagset::default_tagset() {
  return Tagset({"O", "B_book", "I_book", "B_video", "I_video", "B_music", "I_music"});
}

Tagset Tagset::infer(const std::vector<TaggedSequence>& data) {
  std::map<std::string, char> seps;
  for (const auto& seq : data) {
    for (const auto& label : seq.labels) {
      if (label == "O") continue;
      if (is_begin_tag(label) || is_inside_tag(label)) seps.emplace(label.substr(2), label[1]);
      else throw DataError("label '" + label + "' is not a BIO tag");
    }
  }
  std::vector<std::string> tags{"O"};
  for (const auto& [type, sep] : seps) {
    tags.push_back(std::string("B") + sep + type);
    tags.push_back(std::string("I") + sep + type);
  }
  return Tagset(std::move(tags));
}

bool Tagset::contains(std::string_view tag) const { return index_.contains(std::string(tag)); }

std::size_t Tagset::id(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  if (it == index_.end()) throw ContractError("unknown tag '" + std::string(tag) + "'");
  return it->second;
}

std::string Tagset::coarse(std::string_view tag) const {
  if (!contains(tag)) throw ContractError("unknown tag '" + std::string(tag) + "'");
  return *tag_type(tag);
}

// ---------------------------------------------------------------- Vocab

Vocab::Vocab() {
  add(std::string(kUnkToken));
  add(std::string(kStartToken));
}

Vocab::Vocab(std::vector<std::string> id_to_token) {
  if (id_to_token.size() < 2 || id_to_token[kUnk] != kUnkToken ||
      id_to_token[kStart] != kStartToken)
    throw DataError("vocabulary must start with <UNK> and <S>");
  for (auto& t : id_to_token) {
    if (index_.contains(t)) throw DataError("duplicate vocabulary entry '" + t + "'");
    add(std::move(t));
  }
}

void Vocab::add(std::string token) {
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

std::size_t Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.contains(std::string(token)); }

std::vector<std::size_t> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

// ---------------------------------------------------------------- CoNLL

std::vector<TaggedSequence> parse_conll(std::string_view text) {
  return parse_blocks(text, [](std::string_view line, std::size_t line_no, TaggedSequence& seq) {
    auto fields = split_fields(line);
    if (fields.size() != 2)
      throw ConllError(line_no, "expected 2 tab-separated fields, got " +
                                    std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty()) throw ConllError(line_no, "empty field");
    seq.tokens.push_back(std::move(fields[0]));
    seq.labels.push_back(std::move(fields[1]));
  });
}

std::vector<TaggedSequence> parse_tokens(std::string_view text) {
  return parse_blocks(text, [](std::string_view line, std::size_t line_no, TaggedSequence& seq) {
    auto fields = split_fields(line);
    if (fields.size() > 2 || fields[0].empty())
      throw ConllError(line_no, "expected a token and an optional label");
    seq.tokens.push_back(std::move(fields[0]));
    seq.labels.push_back(fields.size() == 2 ? std::move(fields[1]) : std::string("O"));
  });
}

std::string render_conll(const std::vector<TaggedSequence>& data) {
  std::string out;
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (s > 0) out += '\n';
    for (std::size_t i = 0; i < data[s].size(); ++i) {
      out += data[s].tokens[i];
      out += '\t';
      out += data[s].labels[i];
      out += '\n';
    }
  }
  return out;
}

std::vector<BioViolation> validate_bio(const TaggedSequence& seq, const Tagset& tagset) {
  std::vector<BioViolation> out;
  if (seq.tokens.size() != seq.labels.size())
    out.push_back({0, "token/label length mismatch"});
  if (seq.labels.empty()) out.push_back({0, "empty sequence"});
  for (std::size_t i = 0; i < seq.labels.size(); ++i) {
    const std::string& label = seq.labels[i];
    if (!tagset.contains(label)) {
      out.push_back({i, "label '" + label + "' not in tagset"});
      continue;
    }
    if (!is_inside_tag(label)) continue;
    const std::string type = label.substr(2);
    if (i == 0) {
      out.push_back({i, "'" + label + "' opens the sequence"});
      continue;
    }
    const std::string& prev = seq.labels[i - 1];
    if (prev == "O") {
      out.push_back({i, "'" + label + "' follows O"});
    } else if (auto prev_type = tag_type(prev); !prev_type || *prev_type != type) {
      out.push_back({i, "'" + label + "' follows '" + prev + "'"});
    }
  }
  return out;
}

Vocab build_vocab(const std::vector<TaggedSequence>& data, std::size_t min_freq) {
  if (data.empty()) throw ContractError("cannot build a vocabulary from an empty dataset");
  if (min_freq < 1) throw ContractError("min_freq must be at least 1");
  std::map<std::string, std::size_t> freq;
  for (const auto& seq : data)
    for (const auto& t : seq.tokens) ++freq[t];
  std::vector<std::string> tokens{std::string(Vocab::kUnkToken), std::string(Vocab::kStartToken)};
  for (const auto& [token, n] : freq) {
    if (n < min_freq || token == Vocab::kUnkToken || token == Vocab::kStartToken) continue;
    tokens.push_back(token);
  }
  return Vocab(std::move(tokens));
}

Split split_dataset(const std::vector<TaggedSequence>& data, double test_fraction,
                    std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ContractError("test_fraction must lie in (0, 1)");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  const auto n_test = static_cast<std::size_t>(
      std::llround(static_cast<double>(data.size()) * test_fraction));
  const std::size_t n_train = data.size() - n_test;
  Split split;
  split.train.reserve(n_train);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_train ? split.train : split.test).push_back(data[order[i]]);
  return split;
}

// ---------------------------------------------------------------- synthetic

SyntheticSpec SyntheticSpec::default_spec() {
  const std::vector<std::string> shared{"Hobbits", "Dune", "Heat", "Frozen", "Gravity", "Red"};
  SyntheticSpec spec;
  spec.types = {
      {"video", {"movie"}, shared, {"Titanic"}},
      {"book", {"book"}, shared, {"Ulysses"}},
      {"music", {"song"}, shared, {"Bolero"}},
  };
  spec.templates = {
      "I really like the {K} {E} .",
      "the {K} {E} is great .",
      "{E} {K} is my favourite .",
      "have you heard of the {K} {E} ?",
  };
  spec.prefixes = {"", "honestly ,", "to be honest ,", "well , you know ,"};
  return spec;
}

namespace {

std::vector<std::string> string_list(const nlohmann::json& v, const char* key) {
  if (!v.is_array()) throw DataError(std::string("'") + key + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw DataError(std::string("'") + key + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw DataError("synthetic spec must be a JSON object");
  SyntheticSpec spec = default_spec();
  for (const auto& [key, value] : doc.items()) {
    if (key == "types") {
      if (!value.is_array()) throw DataError("'types' must be an array");
      spec.types.clear();
      for (const auto& t : value) {
        if (!t.is_object() || !t.contains("name")) throw DataError("each type needs a 'name'");
        SyntheticType type;
        for (const auto& [tk, tv] : t.items()) {
          if (tk == "name") type.name = tv.get<std::string>();
          else if (tk == "keywords") type.keywords = string_list(tv, "keywords");
          else if (tk == "entities") type.entities = string_list(tv, "entities");
          else if (tk == "fixed_entities") type.fixed_entities = string_list(tv, "fixed_entities");
          else throw DataError("unknown key '" + tk + "' in synthetic type");
        }
        spec.types.push_back(std::move(type));
      }
    } else if (key == "templates") {
      spec.templates = string_list(value, "templates");
    } else if (key == "prefixes") {
      spec.prefixes = string_list(value, "prefixes");
    } else if (key == "bare_templates") {
      spec.bare_templates = string_list(value, "bare_templates");
    } else if (key == "count") {
      spec.count = value.get<std::size_t>();
    } else if (key == "bare_fraction") {
      spec.bare_fraction = value.get<double>();
    } else if (key == "fixed_fraction") {
      spec.fixed_fraction = value.get<double>();
    } else if (key == "separator") {
      spec.separator = value.get<std::string>();
    } else {
      throw DataError("unknown key '" + key + "' in synthetic spec");
    }
  }
  return spec;
}

nlohmann::json SyntheticSpec::to_json() const {
  nlohmann::json types_json = nlohmann::json::array();
  for (const auto& t : types)
    types_json.push_back({{"name", t.name},
                          {"keywords", t.keywords},
                          {"entities", t.entities},
                          {"fixed_entities", t.fixed_entities}});
  return {{"types", types_json},          {"templates", templates},
          {"bare_templates", bare_templates}, {"prefixes", prefixes}, {"count", count},
          {"bare_fraction", bare_fraction},   {"fixed_fraction", fixed_fraction},
          {"separator", separator}};
}

std::map<std::string, std::string> keyword_types(const SyntheticSpec& spec) {
  std::map<std::string, std::string> out;
  for (const auto& t : spec.types)
    for (const auto& k : t.keywords) out.emplace(k, t.name);
  return out;
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[uniform_below(rng, items.size())];
}

TaggedSequence fill_template(const std::string& tmpl, const std::string& entity,
                             const std::string& entity_tag_type, const std::string& keyword,
                             const std::string& sep) {
  TaggedSequence seq;
  for (const auto& word : split_spaces(tmpl)) {
    if (word == "{E}") {
      const auto parts = split_spaces(entity);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        seq.tokens.push_back(parts[i]);
        seq.labels.push_back(entity_tag_type.empty()
                                 ? std::string("O")
                                 : std::string(i == 0 ? "B" : "I") + sep + entity_tag_type);
      }
    } else if (word == "{K}") {
      for (const auto& part : split_spaces(keyword)) {
        seq.tokens.push_back(part);
        seq.labels.emplace_back("O");
      }
    } else {
      seq.tokens.push_back(word);
      seq.labels.emplace_back("O");
    }
  }
  return seq;
}

}  // namespace

std::vector<std::string> expanded_templates(const SyntheticSpec& spec) {
  if (spec.prefixes.empty()) return spec.templates;
  std::vector<std::string> out;
  for (const auto& prefix : spec.prefixes)
    for (const auto& tmpl : spec.templates) out.push_back(prefix.empty() ? tmpl : prefix + " " + tmpl);
  return out;
}

std::vector<std::string> bare_pool(const SyntheticSpec& spec) {
  std::vector<std::string> pool;
  auto add = [&](std::string t) {
    if (std::find(pool.begin(), pool.end(), t) == pool.end()) pool.push_back(std::move(t));
  };
  for (const auto& tmpl : expanded_templates(spec)) {
    const std::vector<std::string> words = split_spaces(tmpl);
    const auto k = std::find(words.begin(), words.end(), "{K}");
    const auto e = std::find(words.begin(), words.end(), "{E}");
    if (k == words.end() || e == words.end()) continue;
    const auto first = k < e ? k + 1 : words.begin();
    const auto last = k < e ? words.end() : k;
    std::string joined;
    for (auto w = first; w != last; ++w) joined += (joined.empty() ? "" : " ") + *w;
    add(joined);
  }
  for (const auto& t : spec.bare_templates) add(t);
  return pool;
}

std::vector<TaggedSequence> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.types.size() < 2)
    throw ContractError("synthetic spec needs at least 2 entity types for ambiguity");
  if (spec.templates.empty()) throw ContractError("synthetic spec has no templates");
  std::vector<const SyntheticType*> with_fixed;
  for (const auto& t : spec.types) {
    if (t.keywords.empty() || t.entities.empty())
      throw ContractError("type '" + t.name + "' needs keywords and entities");
    if (!t.fixed_entities.empty()) with_fixed.push_back(&t);
  }
  const std::vector<std::string> templates = expanded_templates(spec);
  const std::vector<std::string> bare = bare_pool(spec);
  const bool can_bare = !bare.empty();

  Rng rng(seed);
  std::vector<TaggedSequence> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const double u = uniform01(rng);
    const SyntheticType& type = pick(spec.types, rng);
    TaggedSequence seq;
    if (can_bare && u < spec.bare_fraction) {
      seq = fill_template(pick(bare, rng), pick(type.entities, rng), "", "", spec.separator);
    } else if (can_bare && !with_fixed.empty() && u < spec.bare_fraction + spec.fixed_fraction) {
      const SyntheticType& fixed = *pick(with_fixed, rng);
      seq = fill_template(pick(bare, rng), pick(fixed.fixed_entities, rng), fixed.name, "",
                          spec.separator);
    } else {
      const std::string& tmpl = pick(templates, rng);
      const std::string& entity = pick(type.entities, rng);
      const std::string& keyword = pick(type.keywords, rng);
      seq = fill_template(tmpl, entity, type.name, keyword, spec.separator);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace btpk
