#pragma once

// Deterministic TPK formulas over a BtpkModel.
//
// Concrete syntax, loosest binding first:
//   f -> g        implication, right associative
//   f | g         disjunction, left associative
//   f & g         conjunction, left associative
//   !f  []f  <>f  [p]f  <p>f  Yf
//                 negation; box/diamond over r1; box/diamond over rho; yesterday
//   q  label(video)  D3  (f)
//
// Semantics at state t:
//   []f   every r1-successor satisfies f (true at leaves)
//   <>f   some r1-successor satisfies f
//   [p]f / <p>f   the same over outgoing rho edges
//   Dn    t is at distance n from the root
//   Yf    t has an r1-parent and it satisfies f
//   atom  t is in pi(atom); atoms absent from pi hold nowhere

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "btpk/announce.hpp"
#include "btpk/tree.hpp"

namespace btpk {

enum class FormulaKind {
  Atom,
  Not,
  And,
  Or,
  Implies,
  BoxR1,
  DiamondR1,
  BoxRho,
  DiamondRho,
  DistConst,
  Yesterday,
};

/// Immutable formula tree with shared subterms. Equality is structural.
class Formula {
 public:
  static Formula atom(std::string name);
  static Formula negate(Formula f);
  static Formula conj(Formula a, Formula b);
  static Formula disj(Formula a, Formula b);
  static Formula implies(Formula a, Formula b);
  static Formula box(Formula f);
  static Formula diamond(Formula f);
  static Formula box_rho(Formula f);
  static Formula diamond_rho(Formula f);
  static Formula dist(std::size_t n);
  static Formula yesterday(Formula f);

  FormulaKind kind() const;
  const std::string& name() const;  // Atom only
  std::size_t distance() const;     // DistConst only
  /// Operand of unary nodes, left operand of binary ones.
  const Formula& lhs() const;
  const Formula& rhs() const;
  bool is_unary() const;
  bool is_binary() const;

  /// Identity of the shared node, used as a memo key.
  const void* node_id() const { return node_.get(); }
  std::size_t depth() const;

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

class FormulaParseError : public std::runtime_error {
 public:
  FormulaParseError(std::size_t offset, std::vector<std::string> expected, std::string found);
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

Formula parse_formula(std::string_view text);
/// Canonical text with the fewest parentheses that still parse back to `f`.
std::string print_formula(const Formula& f);

/// Replaces atoms by name (e.g. q -> label(video)).
Formula substitute_atoms(const Formula& f, const std::map<std::string, Formula>& defs);

/// Per-state recursive evaluation with an optional (state, subformula) memo.
/// Keeps every formula it has seen alive so memo keys stay valid.
class ModelChecker {
 public:
  explicit ModelChecker(const BtpkModel& model, bool memoize = true);

  /// Throws ContractError for an unknown state id.
  bool check(std::size_t state, const Formula& f);

 private:
  bool eval(std::size_t state, const Formula& f);

  const BtpkModel& model_;
  bool memoize_;
  std::vector<std::vector<std::size_t>> r1_succ_;
  std::vector<std::vector<std::size_t>> rho_succ_;
  std::vector<std::optional<std::size_t>> parent_;
  std::map<std::pair<const void*, std::size_t>, bool> memo_;
  std::vector<Formula> pinned_;
};

bool check(const BtpkModel& model, std::size_t state, const Formula& f);

/// Bottom-up labeling: the satisfying set of every subformula is computed
/// once over all states. Independent of ModelChecker.
std::set<std::size_t> check_all(const BtpkModel& model, const Formula& f);

struct RecognitionVerdict {
  bool has_branch = false;
  /// Corrected path: trunk up to the branch, primed states after it. Equals
  /// the trunk verdict when the model has no branch.
  bool primed_path = false;
  bool trunk_path = false;
  Formula primed_formula = Formula::dist(0);
  Formula trunk_formula = Formula::dist(0);
  /// State at height start (entity height - 1) where the formulas are checked.
  std::size_t primed_anchor = 0;
  std::size_t trunk_anchor = 0;
};

/// Checks, along each path, that the entity's first height is `B` with
/// label(type), later entity heights continue it, and the next height (if
/// any) does not continue it.
RecognitionVerdict verify_recognition(const BtpkModel& model, const EntitySpan& entity,
                                      std::string_view type);

}  // namespace btpk
