#pragma once

// End-to-end analysis of one sentence: predict, extract announcements for each
// target entity, build the BTPK tree, model-check and render explanations.

#include <optional>
#include <string>
#include <vector>

#include "btpk/announce.hpp"
#include "btpk/brnn.hpp"
#include "btpk/explain.hpp"
#include "btpk/tree.hpp"

namespace btpk {

struct SentenceAnalysis {
  std::vector<std::string> tokens;
  std::vector<std::string> predicted;
  std::vector<std::size_t> branch_points;
  std::vector<AnnouncementReport> reports;
  BtpkModel btpk;
  std::vector<Explanation> explanations;
};

/// With no `entity`, every predicted entity span is a target, in order.
/// Only announcements after their target feed the tree's rho edges; all of
/// them are kept as explanation evidence.
SentenceAnalysis analyze_sentence(const BrnnModel& model, const std::vector<std::string>& tokens,
                                  std::optional<GramSpan> entity = std::nullopt,
                                  const AnnounceOptions& options = {});

}  // namespace btpk
