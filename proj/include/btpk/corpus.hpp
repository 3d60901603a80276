#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace btpk {

/// A sentence W = (w_1..w_n) with its BIO labels Y = (y_1..y_n).
struct TaggedSequence {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const TaggedSequence&) const = default;
};

/// Strips the `B_`/`I_` (or `B-`/`I-`) prefix. `O` maps to itself. Returns
/// nullopt for anything that is not a BIO tag.
std::optional<std::string> tag_type(std::string_view tag);
bool is_begin_tag(std::string_view tag);
bool is_inside_tag(std::string_view tag);

class Tagset {
 public:
  /// Throws ContractError if the tags violate the BIO tagset rules: `O`
  /// present, every other tag B/I-prefixed, both variants per type.
  explicit Tagset(std::vector<std::string> tags);

  /// {O, B_book, I_book, B_video, I_video, B_music, I_music}.
  static Tagset default_tagset();

  /// `O` first, then B/I per type in sorted type order. The separator
  /// (`_` or `-`) follows whatever the data uses.
  static Tagset infer(const std::vector<TaggedSequence>& data);

  const std::vector<std::string>& tags() const { return tags_; }
  const std::vector<std::string>& types() const { return types_; }
  std::size_t size() const { return tags_.size(); }
  bool contains(std::string_view tag) const;
  std::size_t id(std::string_view tag) const;  // throws ContractError
  const std::string& tag(std::size_t id) const { return tags_.at(id); }
  /// "B_video" -> "video", "O" -> "O". Throws ContractError on unknown tags.
  std::string coarse(std::string_view tag) const;

  bool operator==(const Tagset& o) const { return tags_ == o.tags_; }

 private:
  std::vector<std::string> tags_;
  std::vector<std::string> types_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Token ids are dense from 0. Id 0 is `<UNK>`, id 1 is the start marker w_0.
class Vocab {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kStart = 1;
  static constexpr std::string_view kUnkToken = "<UNK>";
  static constexpr std::string_view kStartToken = "<S>";

  Vocab();
  /// Rebuilds from an id-ordered token list (as stored in model files).
  explicit Vocab(std::vector<std::string> id_to_token);

  std::size_t size() const { return tokens_.size(); }
  std::size_t id(std::string_view token) const;  // unknown -> kUnk
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  bool contains(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;

 private:
  void add(std::string token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct BioViolation {
  std::size_t position;
  std::string reason;
};

/// Parses `token<TAB>label` lines; blank lines separate sentences. A trailing
/// `\r` is tolerated. Wrong field count raises ConllError with the line.
std::vector<TaggedSequence> parse_conll(std::string_view text);

/// Like parse_conll, but a line may carry only the token; missing labels
/// are filled with `O`. Used for inference inputs.
std::vector<TaggedSequence> parse_tokens(std::string_view text);

std::string render_conll(const std::vector<TaggedSequence>& data);

/// Every position that breaks membership or B/I adjacency. Empty means ok.
std::vector<BioViolation> validate_bio(const TaggedSequence& seq, const Tagset& tagset);

/// Tokens occurring at least `min_freq` times get ids, in byte order.
Vocab build_vocab(const std::vector<TaggedSequence>& data, std::size_t min_freq);

struct Split {
  std::vector<TaggedSequence> train;
  std::vector<TaggedSequence> test;
};

/// Shuffles indices with `seed` (Fisher-Yates over mt19937_64); the last
/// round(N * test_fraction) shuffled items form the test set.
Split split_dataset(const std::vector<TaggedSequence>& data, double test_fraction,
                    std::uint64_t seed);

struct SyntheticType {
  std::string name;                   // coarse type, e.g. "video"
  std::vector<std::string> keywords;  // context words that fix the type
  std::vector<std::string> entities;  // surfaces; spaces split into tokens
  std::vector<std::string> fixed_entities;  // surfaces unique to this type
};

/// Synthetic disambiguation corpus. Templates use `{E}` for the entity and
/// `{K}` for the keyword; extra bare templates only carry `{E}`.
struct SyntheticSpec {
  std::vector<SyntheticType> types;
  std::vector<std::string> templates;
  std::vector<std::string> bare_templates;
  /// Leading filler phrases; each is combined with every template ("" keeps
  /// the bare template).
  std::vector<std::string> prefixes;
  std::size_t count = 300;
  /// Ambiguous entity without keyword, all-O labels.
  double bare_fraction = 0.15;
  /// Type-unique entity without keyword, labeled by its type.
  double fixed_fraction = 0.10;
  std::string separator = "_";

  static SyntheticSpec default_spec();
  static SyntheticSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

/// Every prefix joined to every template, prefix-major.
std::vector<std::string> expanded_templates(const SyntheticSpec& spec);

/// Keyword-free templates: each expanded template cut at its keyword, keeping
/// the side that holds the entity, followed by the spec's bare templates.
/// Zeroing the keyword's states under propagate masking leaves the entity
/// with exactly the readout of its remainder, so the remainder is the
/// no-keyword control.
std::vector<std::string> bare_pool(const SyntheticSpec& spec);

std::vector<TaggedSequence> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Keywords of the spec mapped to their type.
std::map<std::string, std::string> keyword_types(const SyntheticSpec& spec);

}  // namespace btpk
