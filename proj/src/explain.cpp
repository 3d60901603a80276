#include "btpk/explain.hpp"

#include <algorithm>
#include <sstream>

#include "btpk/error.hpp"

namespace btpk {

std::string coarse_label(std::string_view tag, const Tagset& tagset) { return tagset.coarse(tag); }

namespace {

std::string surface(const std::vector<std::string>& tokens, std::size_t start, std::size_t end) {
  std::string out;
  for (std::size_t i = start; i <= end && i < tokens.size(); ++i) {
    if (i > start) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
    out += items[i];
  }
  return out;
}

}  // namespace

Explanation render_explanation(const BtpkModel& btpk, const EntitySpan& entity,
                               const std::vector<Announcement>& announcements,
                               const std::vector<std::string>& tokens) {
  if (entity.end >= tokens.size()) throw ContractError("entity span outside the tokens");
  Explanation e;
  e.entity = entity;
  e.evidence = announcements;
  const std::string name = surface(tokens, entity.start, entity.end);
  const std::string& label = entity.type;
  e.question = "Why is " + quoted(name) + " recognized as a " + label +
               " name rather than other labels?";

  const RecognitionVerdict v = verify_recognition(btpk, entity, label);
  e.formula = print_formula(v.primed_formula);
  e.has_branch = v.has_branch;
  e.primed_verdict = v.primed_path;
  e.trunk_verdict = v.trunk_path;

  if (announcements.empty()) {
    e.answer = "No public announcement was found: masking no context span changes the label " +
               quoted(label) + " of " + quoted(name) + ".";
    if (!v.primed_path) e.answer += " The BTPK model does not verify this label either.";
    return e;
  }

  // One mention per distinct gram, in announcement order.
  std::vector<GramSpan> grams;
  for (const auto& a : announcements)
    if (std::find(grams.begin(), grams.end(), a.gram) == grams.end()) grams.push_back(a.gram);
  std::vector<std::string> names;
  bool before = false, after = false;
  for (const auto& g : grams) {
    names.push_back(quoted(surface(tokens, g.start, g.end)));
    (g.start > entity.end ? after : before) = true;
  }
  const std::string where = before && after ? "preceding and following"
                            : after         ? "following"
                                            : "preceding";
  const bool plural = names.size() > 1;
  const std::string what = "the " + join_list(names) +
                           (plural ? " (public announcements) appear" : " (public announcement) appears") +
                           " in the " + where + " words";
  if (v.primed_path) {
    e.answer = "Because " + what + ", it is more reasonable to be recognized as " + quoted(label) + ".";
  } else {
    e.answer = "Unverified: " + what + " and masking " + (plural ? "them" : "it") +
               " changes the label, but the BTPK model does not verify " + quoted(name) +
               " as " + quoted(label) + ".";
  }
  return e;
}

nlohmann::ordered_json explanation_to_json(const Explanation& e) {
  nlohmann::ordered_json j;
  j["entity"] = {e.entity.start, e.entity.end};
  j["label"] = e.entity.type;
  j["question"] = e.question;
  j["answer"] = e.answer;
  j["formula"] = e.formula;
  j["has_branch"] = e.has_branch;
  j["verdicts"] = {{"primed_path", e.primed_verdict}, {"trunk_path", e.trunk_verdict}};
  j["evidence"] = nlohmann::ordered_json::array();
  for (const auto& a : e.evidence) j["evidence"].push_back(announcement_to_json(a));
  return j;
}

std::string explanation_to_text(const Explanation& e) {
  std::ostringstream out;
  out << "Question: " << e.question << "\n";
  out << "Explanation: " << e.answer << "\n";
  out << "Formula: " << e.formula << "\n";
  out << "Verdicts: primed path " << (e.primed_verdict ? "true" : "false") << ", trunk path "
      << (e.trunk_verdict ? "true" : "false") << (e.has_branch ? "" : " (no branch)") << "\n";
  return out.str();
}

// ---------------------------------------------------------------- DOT

namespace {

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_dot(const BtpkModel& btpk, const std::vector<std::string>& tokens) {
  std::ostringstream out;
  out << "digraph btpk {\n";
  out << "  rankdir=TB;\n";
  out << "  node [shape=box, fontname=\"monospace\"];\n";
  for (const auto& s : btpk.states) {
    std::string label = std::string(s.primed ? "s'_" : "s_") + std::to_string(s.height);
    if (s.height == 0) label += "\\nw_0";
    else if (s.height - 1 < tokens.size()) label += "\\n" + dot_escape(tokens[s.height - 1]);
    for (const auto& a : s.atoms) label += "\\n" + dot_escape(a);
    out << "  n" << s.id << " [label=\"" << label << "\"];\n";
  }
  for (const auto& [u, v] : btpk.r1) out << "  n" << u << " -> n" << v << ";\n";
  for (const auto& [u, v] : btpk.rho)
    out << "  n" << u << " -> n" << v << " [style=dashed, label=\"\xCF\x81\"];\n";
  out << "}\n";
  return out.str();
}

// ---------------------------------------------------------------- JSON

std::string export_json(const BtpkModel& btpk, const std::vector<std::string>& tokens,
                        const nlohmann::json& meta) {
  nlohmann::ordered_json j;
  j["format"] = "btpk";
  j["version"] = 1;
  j["height"] = btpk.height;
  j["root"] = btpk.root;
  j["states"] = nlohmann::ordered_json::array();
  for (const auto& s : btpk.states) {
    nlohmann::ordered_json st;
    st["id"] = s.id;
    st["h"] = s.height;
    st["primed"] = s.primed;
    st["atoms"] = s.atoms;
    j["states"].push_back(st);
  }
  auto edges = [](const std::vector<Edge>& es) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& [u, v] : es) a.push_back({u, v});
    return a;
  };
  j["r1"] = edges(btpk.r1);
  j["rho"] = edges(btpk.rho);
  j["announcements"] = nlohmann::ordered_json::array();
  for (const auto& a : btpk.announcements) j["announcements"].push_back(announcement_to_json(a));
  if (!tokens.empty()) j["tokens"] = tokens;
  if (!meta.is_null()) j["meta"] = meta;
  return j.dump(2) + "\n";
}

BtpkDocument import_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("BTPK JSON does not parse: ") + e.what());
  }
  BtpkDocument doc;
  try {
    if (!j.is_object()) throw DataError("BTPK JSON must be an object");
    if (j.value("format", std::string("btpk")) != "btpk") throw DataError("not a BTPK document");
    if (j.contains("version") && j["version"].get<int>() != 1)
      throw DataError("unsupported BTPK document version");
    BtpkModel& m = doc.model;
    m.height = j.at("height").get<std::size_t>();
    m.root = j.value("root", std::size_t{0});
    for (const auto& st : j.at("states")) {
      BtpkState s;
      s.id = st.at("id").get<std::size_t>();
      s.height = st.at("h").get<std::size_t>();
      s.primed = st.at("primed").get<bool>();
      s.atoms = st.at("atoms").get<std::vector<std::string>>();
      m.states.push_back(std::move(s));
    }
    std::sort(m.states.begin(), m.states.end(),
              [](const BtpkState& a, const BtpkState& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < m.states.size(); ++i)
      if (m.states[i].id != i) throw DataError("state ids must be dense from 0");
    auto read_edges = [&](const char* key, std::vector<Edge>& into) {
      for (const auto& e : j.at(key)) {
        const Edge edge{e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()};
        if (e.size() != 2 || edge.first >= m.states.size() || edge.second >= m.states.size())
          throw DataError(std::string("bad ") + key + " edge");
        into.push_back(edge);
      }
    };
    read_edges("r1", m.r1);
    read_edges("rho", m.rho);
    if (j.contains("announcements"))
      for (const auto& a : j["announcements"]) m.announcements.push_back(announcement_from_json(a));
    if (j.contains("tokens")) doc.tokens = j["tokens"].get<std::vector<std::string>>();
    if (j.contains("meta")) doc.meta = j["meta"];
    m.rebuild_valuation();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed BTPK JSON: ") + e.what());
  }
  return doc;
}

}  // namespace btpk
