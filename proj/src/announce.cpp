#include "btpk/announce.hpp"

#include <algorithm>

#include "btpk/error.hpp"

namespace btpk {

std::vector<EntitySpan> entity_spans(std::span<const std::string> tags) {
  std::vector<EntitySpan> out;
  std::optional<EntitySpan> open;
  auto close = [&] {
    if (open) out.push_back(*open);
    open.reset();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    if (is_begin_tag(t)) {
      close();
      open = EntitySpan{i, i, t.substr(2)};
    } else if (is_inside_tag(t)) {
      if (open && open->type == t.substr(2)) {
        open->end = i;
      } else {
        close();
        open = EntitySpan{i, i, t.substr(2)};
      }
    } else {
      close();
    }
  }
  close();
  return out;
}

std::vector<GramSpan> enumerate_grams(std::size_t n, std::size_t max_len,
                                      std::optional<GramSpan> exclude) {
  if (max_len < 1) throw ContractError("max_len must be at least 1");
  std::vector<GramSpan> out;
  for (std::size_t len = 1; len <= std::min(max_len, n); ++len) {
    for (std::size_t start = 0; start + len <= n; ++start) {
      const GramSpan g{start, start + len - 1};
      if (exclude && g.overlaps(*exclude)) continue;
      out.push_back(g);
    }
  }
  return out;
}

Trace intervene(const BrnnModel& model, std::span<const std::size_t> token_ids,
                const GramSpan& gram, Side side) {
  if (gram.start > gram.end) throw ContractError("gram start must not exceed gram end");
  if (gram.end >= token_ids.size()) throw ContractError("gram outside the sequence");
  Mask mask;
  mask.add_span(gram.start, gram.end, side);
  return forward(model, token_ids, mask);
}

namespace {

// Coarse labels over the span with their counts, in first-appearance order.
std::vector<std::pair<std::string, std::size_t>> label_counts(const BrnnModel& model,
                                                              const Trace& trace,
                                                              const GramSpan& span) {
  std::vector<std::pair<std::string, std::size_t>> counts;
  for (std::size_t i = span.start; i <= span.end; ++i) {
    std::string label = model.tagset().coarse(model.tagset().tag(trace.predictions[i]));
    auto it = std::find_if(counts.begin(), counts.end(),
                           [&](const auto& c) { return c.first == label; });
    if (it == counts.end()) counts.emplace_back(std::move(label), 1);
    else ++it->second;
  }
  return counts;
}

// The label the target flipped to, or nullopt if the original still wins
// outright. A tie for first place counts as a flip.
std::optional<std::string> flip_outcome(const BrnnModel& model, const Trace& trace,
                                        const GramSpan& span, const std::string& original) {
  const auto counts = label_counts(model, trace, span);
  std::size_t top = 0;
  for (const auto& [label, n] : counts) top = std::max(top, n);
  std::size_t winners = 0;
  bool original_wins = false;
  for (const auto& [label, n] : counts) {
    if (n != top) continue;
    ++winners;
    original_wins |= label == original;
  }
  if (winners == 1 && original_wins) return std::nullopt;
  // Most frequent label other than the original.
  std::optional<std::pair<std::string, std::size_t>> best;
  for (const auto& c : counts) {
    if (c.first == original) continue;
    if (!best || c.second > best->second) best = c;
  }
  return best ? best->first : original;
}

void check_target(std::span<const std::size_t> token_ids, const EntitySpan& target) {
  if (target.start > target.end || target.end >= token_ids.size())
    throw ContractError("target span outside the sequence");
}

}  // namespace

std::optional<std::string> span_label(const BrnnModel& model, const Trace& trace,
                                      const GramSpan& span) {
  if (span.start > span.end || span.end >= trace.size())
    throw ContractError("span outside the trace");
  const auto counts = label_counts(model, trace, span);
  std::size_t top = 0;
  for (const auto& c : counts) top = std::max(top, c.second);
  std::optional<std::string> winner;
  for (const auto& [label, n] : counts) {
    if (n != top) continue;
    if (winner) return std::nullopt;
    winner = label;
  }
  return winner;
}

ScanResult scan_interventions(const BrnnModel& model, std::span<const std::size_t> token_ids,
                              const EntitySpan& target, std::span<const ScanJob> jobs) {
  check_target(token_ids, target);
  ScanResult out(jobs.size());
  const auto count = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    const auto u = static_cast<std::size_t>(j);
    const Trace t = intervene(model, token_ids, jobs[u].gram, jobs[u].side);
    out[u] = flip_outcome(model, t, target.span(), target.type);
  }
  return out;
}

ScanResult scan_interventions_serial(const BrnnModel& model,
                                     std::span<const std::size_t> token_ids,
                                     const EntitySpan& target, std::span<const ScanJob> jobs) {
  check_target(token_ids, target);
  ScanResult out(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Trace t = intervene(model, token_ids, jobs[j].gram, jobs[j].side);
    out[j] = flip_outcome(model, t, target.span(), target.type);
  }
  return out;
}

AnnouncementReport extract_announcements(const BrnnModel& model,
                                         std::span<const std::size_t> token_ids,
                                         const EntitySpan& target,
                                         const AnnounceOptions& options) {
  check_target(token_ids, target);
  const Trace base = forward(model, token_ids);
  std::optional<std::string> original;
  for (std::size_t i = target.start; i <= target.end; ++i) {
    const std::string label = model.tagset().coarse(model.tagset().tag(base.predictions[i]));
    if (original && *original != label)
      throw ContractError("target span has mixed predicted types");
    original = label;
  }
  if (*original == "O") throw ContractError("target span is not predicted as an entity");

  std::vector<Side> sides = options.sides;
  std::sort(sides.begin(), sides.end());
  sides.erase(std::unique(sides.begin(), sides.end()), sides.end());

  AnnouncementReport report;
  report.target = EntitySpan{target.start, target.end, *original};
  report.original_label = *original;

  std::vector<ScanJob> jobs;
  for (const GramSpan& g : enumerate_grams(token_ids.size(), options.max_len, target.span()))
    for (Side s : sides) jobs.push_back({g, s});
  report.interventions = jobs.size();

  const ScanResult results = options.parallel
                                 ? scan_interventions(model, token_ids, report.target, jobs)
                                 : scan_interventions_serial(model, token_ids, report.target, jobs);

  std::vector<Announcement> found;
  for (std::size_t j = 0; j < jobs.size(); ++j)
    if (results[j])
      found.push_back({jobs[j].gram, jobs[j].side, report.target, *original, *results[j]});

  for (const Announcement& a : found) {
    const bool redundant = std::any_of(found.begin(), found.end(), [&](const Announcement& b) {
      return b.side == a.side && a.gram.contains(b.gram) && !(a.gram == b.gram);
    });
    if (!redundant) report.announcements.push_back(a);
  }
  std::stable_sort(report.announcements.begin(), report.announcements.end(),
                   [](const Announcement& a, const Announcement& b) {
                     if (a.gram.length() != b.gram.length())
                       return a.gram.length() < b.gram.length();
                     if (a.gram.start != b.gram.start) return a.gram.start < b.gram.start;
                     return a.side < b.side;
                   });
  return report;
}

nlohmann::ordered_json announcement_to_json(const Announcement& a) {
  nlohmann::ordered_json j;
  j["target"] = {a.target.start, a.target.end};
  j["target_type"] = a.target.type;
  j["gram"] = {a.gram.start, a.gram.end};
  j["side"] = std::string(to_string(a.side));
  j["original"] = a.original_label;
  j["flipped_to"] = a.flipped_label;
  return j;
}

Announcement announcement_from_json(const nlohmann::json& j) {
  try {
    Announcement a;
    a.target.start = j.at("target").at(0).get<std::size_t>();
    a.target.end = j.at("target").at(1).get<std::size_t>();
    a.target.type = j.at("target_type").get<std::string>();
    a.gram.start = j.at("gram").at(0).get<std::size_t>();
    a.gram.end = j.at("gram").at(1).get<std::size_t>();
    a.side = parse_side(j.at("side").get<std::string>());
    a.original_label = j.at("original").get<std::string>();
    a.flipped_label = j.at("flipped_to").get<std::string>();
    if (a.gram.start > a.gram.end || a.target.start > a.target.end)
      throw DataError("announcement span has start after end");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed announcement: ") + e.what());
  } catch (const ContractError& e) {
    throw DataError(std::string("malformed announcement: ") + e.what());
  }
}

nlohmann::ordered_json report_to_json(const AnnouncementReport& r) {
  nlohmann::ordered_json j;
  j["target"] = {r.target.start, r.target.end};
  j["original"] = r.original_label;
  j["announcements"] = nlohmann::ordered_json::array();
  for (const auto& a : r.announcements) {
    nlohmann::ordered_json item;
    item["gram"] = {a.gram.start, a.gram.end};
    item["side"] = std::string(to_string(a.side));
    item["flipped_to"] = a.flipped_label;
    j["announcements"].push_back(item);
  }
  j["interventions"] = r.interventions;
  return j;
}

}  // namespace btpk
