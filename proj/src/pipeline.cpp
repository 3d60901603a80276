#include "btpk/pipeline.hpp"

#include "btpk/error.hpp"

namespace btpk {

SentenceAnalysis analyze_sentence(const BrnnModel& model, const std::vector<std::string>& tokens,
                                  std::optional<GramSpan> entity, const AnnounceOptions& options) {
  if (tokens.empty()) throw ContractError("cannot analyze an empty sentence");
  SentenceAnalysis out;
  out.tokens = tokens;
  const auto ids = model.vocab().encode(tokens);
  const Trace base = forward(model, ids);
  for (std::size_t p : base.predictions) out.predicted.push_back(model.tagset().tag(p));

  std::vector<EntitySpan> targets;
  if (entity) {
    if (entity->start > entity->end || entity->end >= tokens.size())
      throw ContractError("entity span outside the sentence");
    targets.push_back({entity->start, entity->end, ""});
  } else {
    targets = entity_spans(out.predicted);
  }

  std::vector<Announcement> future;
  for (const auto& t : targets) {
    out.reports.push_back(extract_announcements(model, ids, t, options));
    for (const auto& a : out.reports.back().announcements)
      if (a.gram.start > a.target.end) future.push_back(a);
  }
  out.branch_points = find_branch_points(model, ids);
  out.btpk = build_btpk(model, ids, future, out.branch_points);
  for (const auto& r : out.reports)
    out.explanations.push_back(render_explanation(out.btpk, r.target, r.announcements, tokens));
  return out;
}

}  // namespace btpk
