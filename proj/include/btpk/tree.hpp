#pragma once

// The binary time-action tree. Height 0 is the start marker w_0; height i
// holds token w_i. The unprimed trunk s_1..s_n carries forward-only labels;
// an optional primed branch s'_p..s'_n carries the full bidirectional labels
// and is reached through a same-height rho edge s_a -> s'_a from the
// announcement position a > p.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "btpk/announce.hpp"
#include "btpk/brnn.hpp"

namespace btpk {

struct BtpkState {
  std::size_t id = 0;
  std::size_t height = 0;
  bool primed = false;
  std::vector<std::string> atoms;  // sorted

  bool operator==(const BtpkState&) const = default;
};

using Edge = std::pair<std::size_t, std::size_t>;

struct BtpkModel {
  std::vector<BtpkState> states;  // states[i].id == i
  std::size_t root = 0;
  std::vector<Edge> r1;   // successor relation
  std::vector<Edge> rho;  // public announcement relation
  std::map<std::string, std::set<std::size_t>> pi;
  std::size_t height = 0;  // |H| = n + 1
  std::vector<Announcement> announcements;

  std::size_t sequence_length() const { return height == 0 ? 0 : height - 1; }
  /// Recomputes pi from the states' atom annotations.
  void rebuild_valuation();
  /// The state at `height` on the trunk (primed=false) or primed branch.
  std::optional<std::size_t> state_at(std::size_t height, bool primed) const;
  bool has_branch() const;

  bool operator==(const BtpkModel&) const = default;
};

/// Atom names attached to states.
namespace atoms {
std::string label(std::string_view coarse);  // label(<type>)
std::string tag(std::string_view tag);       // tag(<BIO tag>)
inline constexpr std::string_view kBegin = "begin";    // B-tag at this height
inline constexpr std::string_view kPrimed = "primed";  // on the corrected branch
inline constexpr std::string_view kStart = "start";    // the root w_0
}  // namespace atoms

/// Positions where the forward-only prediction (whole backward side masked)
/// differs from the full bidirectional one, ascending.
std::vector<std::size_t> find_branch_points(const BrnnModel& model,
                                            std::span<const std::size_t> token_ids);

/// Builds the tree. The earliest branch point with a supporting announcement
/// (one whose target covers it) gets the primed branch; the supporting
/// announcement with the earliest gram supplies the rho edge. Throws
/// ContractError when a supported branch point only has announcements at or
/// before it.
BtpkModel build_btpk(const BrnnModel& model, std::span<const std::size_t> token_ids,
                     const std::vector<Announcement>& announcements,
                     const std::vector<std::size_t>& branch_points);

/// Same construction from precomputed predictions (tag ids), for callers
/// that already hold the two traces.
BtpkModel build_btpk(const Tagset& tagset, std::span<const std::size_t> forward_only,
                     std::span<const std::size_t> full,
                     const std::vector<Announcement>& announcements,
                     const std::vector<std::size_t>& branch_points);

/// Transitive closure R of r1 as a sorted edge list.
std::vector<Edge> transitive_closure(std::size_t num_states, std::span<const Edge> edges);
std::vector<Edge> transitive_closure(const BtpkModel& btpk);

/// All invariant violations; empty means the model is well-formed.
std::vector<std::string> validate_btpk(const BtpkModel& btpk);

}  // namespace btpk
