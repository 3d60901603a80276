#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "btpk/announce.hpp"
#include "btpk/logic.hpp"
#include "btpk/tree.hpp"

namespace btpk {

/// "B_book"/"I_book" -> "book", "O" -> "O". Throws ContractError for tags
/// outside `tagset`.
std::string coarse_label(std::string_view tag, const Tagset& tagset = Tagset::default_tagset());

struct Explanation {
  EntitySpan entity;
  std::string question;
  std::string answer;
  std::vector<Announcement> evidence;
  std::string formula;
  bool has_branch = false;
  bool primed_verdict = false;
  bool trunk_verdict = false;
};

/// Question/answer text for one entity. Announcement directions are chosen
/// per announcement (preceding/following the entity). If the corrected path
/// does not verify the label, the answer says so instead of asserting it.
Explanation render_explanation(const BtpkModel& btpk, const EntitySpan& entity,
                               const std::vector<Announcement>& announcements,
                               const std::vector<std::string>& tokens);

nlohmann::ordered_json explanation_to_json(const Explanation& e);
std::string explanation_to_text(const Explanation& e);

/// R1 edges solid, rho edges dashed and labeled. Node order follows state ids.
std::string export_dot(const BtpkModel& btpk, const std::vector<std::string>& tokens);

/// Byte-stable JSON document. `tokens` and `meta` are optional extras.
std::string export_json(const BtpkModel& btpk, const std::vector<std::string>& tokens = {},
                        const nlohmann::json& meta = nullptr);

struct BtpkDocument {
  BtpkModel model;
  std::vector<std::string> tokens;
  nlohmann::json meta;
};

/// Throws DataError on malformed documents.
BtpkDocument import_json(std::string_view text);

}  // namespace btpk
