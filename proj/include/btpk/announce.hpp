#pragma once

// Public-announcement extraction: zero the hidden states of a context gram and
// see whether the target entity's coarse label changes. Two runs that differ
// only in that gram's states and disagree on the label make the gram
// causally necessary for the original label (method of difference).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "btpk/brnn.hpp"

namespace btpk {

/// Inclusive token span [start, end].
struct GramSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool overlaps(const GramSpan& o) const { return start <= o.end && o.start <= end; }
  bool contains(const GramSpan& o) const { return start <= o.start && o.end <= end; }
  bool operator==(const GramSpan&) const = default;
};

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string type;

  GramSpan span() const { return {start, end}; }
  bool operator==(const EntitySpan&) const = default;
};

struct Announcement {
  GramSpan gram;
  Side side = Side::Both;
  EntitySpan target;
  std::string original_label;
  std::string flipped_label;

  bool operator==(const Announcement&) const = default;
};

/// B/I runs become spans; an `I_x` without a matching head opens a new span.
std::vector<EntitySpan> entity_spans(std::span<const std::string> tags);

/// Every contiguous span of length <= max_len that avoids `exclude`, ordered
/// by (length, start).
std::vector<GramSpan> enumerate_grams(std::size_t n, std::size_t max_len,
                                      std::optional<GramSpan> exclude = std::nullopt);

/// forward() with every position of `gram` masked on `side`.
Trace intervene(const BrnnModel& model, std::span<const std::size_t> token_ids,
                const GramSpan& gram, Side side);

/// Majority coarse label over the span. nullopt on a tie for first place.
std::optional<std::string> span_label(const BrnnModel& model, const Trace& trace,
                                      const GramSpan& span);

struct AnnouncementReport {
  EntitySpan target;
  std::string original_label;
  std::vector<Announcement> announcements;
  std::size_t interventions = 0;
};

struct ScanJob {
  GramSpan gram;
  Side side;
};

/// Outcome of each job, in job order: the flipped label, or nullopt.
using ScanResult = std::vector<std::optional<std::string>>;

/// OpenMP scan over independent interventions; results are written by job
/// index so the output order never depends on scheduling.
ScanResult scan_interventions(const BrnnModel& model, std::span<const std::size_t> token_ids,
                              const EntitySpan& target, std::span<const ScanJob> jobs);
/// Single-threaded reference for scan_interventions.
ScanResult scan_interventions_serial(const BrnnModel& model,
                                     std::span<const std::size_t> token_ids,
                                     const EntitySpan& target, std::span<const ScanJob> jobs);

struct AnnounceOptions {
  std::size_t max_len = 3;
  std::vector<Side> sides{Side::Both, Side::Forward, Side::Backward};
  bool parallel = true;
};

/// Throws ContractError when the unmasked prediction over `target` is not a
/// single entity type.
AnnouncementReport extract_announcements(const BrnnModel& model,
                                         std::span<const std::size_t> token_ids,
                                         const EntitySpan& target,
                                         const AnnounceOptions& options = {});

nlohmann::ordered_json announcement_to_json(const Announcement& a);
Announcement announcement_from_json(const nlohmann::json& j);
/// `{target:[a,b], original, announcements:[{gram, side, flipped_to}]}`
nlohmann::ordered_json report_to_json(const AnnouncementReport& r);

}  // namespace btpk
