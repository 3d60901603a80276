#include <algorithm>
#include <deque>
#include <random>

#include "doctest.h"

#include "btpk/announce.hpp"
#include "btpk/error.hpp"
#include "btpk/logic.hpp"
#include "btpk/tree.hpp"
#include "support.hpp"

using namespace btpk;
using btpk::testing::keyword_model;
using btpk::testing::random_btpk;
using btpk::testing::random_formula;

namespace {

Formula A(const char* n) { return Formula::atom(n); }

// Set semantics by quantifying over every pair of states. Distances come from
// a BFS over r1 rather than the stored heights.
std::set<std::size_t> oracle(const BtpkModel& m, const Formula& f) {
  const std::size_t n = m.states.size();
  auto has_edge = [](const std::vector<Edge>& es, std::size_t u, std::size_t v) {
    return std::find(es.begin(), es.end(), Edge{u, v}) != es.end();
  };
  std::vector<std::size_t> dist(n, SIZE_MAX);
  std::deque<std::size_t> q{m.root};
  dist[m.root] = 0;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop_front();
    for (std::size_t v = 0; v < n; ++v)
      if (has_edge(m.r1, u, v) && dist[v] == SIZE_MAX) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  std::set<std::size_t> out;
  for (std::size_t s = 0; s < n; ++s) {
    bool r = false;
    switch (f.kind()) {
      case FormulaKind::Atom: {
        const auto& a = m.states[s].atoms;
        r = std::find(a.begin(), a.end(), f.name()) != a.end();
        break;
      }
      case FormulaKind::DistConst: r = dist[s] == f.distance(); break;
      case FormulaKind::Not: r = !oracle(m, f.lhs()).contains(s); break;
      case FormulaKind::And: r = oracle(m, f.lhs()).contains(s) && oracle(m, f.rhs()).contains(s); break;
      case FormulaKind::Or: r = oracle(m, f.lhs()).contains(s) || oracle(m, f.rhs()).contains(s); break;
      case FormulaKind::Implies:
        r = !oracle(m, f.lhs()).contains(s) || oracle(m, f.rhs()).contains(s);
        break;
      case FormulaKind::BoxR1:
      case FormulaKind::BoxRho:
      case FormulaKind::DiamondR1:
      case FormulaKind::DiamondRho: {
        const bool box = f.kind() == FormulaKind::BoxR1 || f.kind() == FormulaKind::BoxRho;
        const bool on_r1 = f.kind() == FormulaKind::BoxR1 || f.kind() == FormulaKind::DiamondR1;
        const auto inner = oracle(m, f.lhs());
        r = box;
        for (std::size_t t = 0; t < n; ++t)
          if (has_edge(on_r1 ? m.r1 : m.rho, s, t)) {
            if (box && !inner.contains(t)) r = false;
            if (!box && inner.contains(t)) r = true;
          }
        break;
      }
      case FormulaKind::Yesterday: {
        const auto inner = oracle(m, f.lhs());
        std::size_t parents = 0, parent = 0;
        for (std::size_t t = 0; t < n; ++t)
          if (has_edge(m.r1, t, s)) ++parents, parent = t;
        r = parents == 1 && inner.contains(parent);
        break;
      }
    }
    if (r) out.insert(s);
  }
  return out;
}

std::set<std::size_t> by_checker(const BtpkModel& m, const Formula& f, bool memo) {
  ModelChecker c(m, memo);
  std::set<std::size_t> out;
  for (std::size_t s = 0; s < m.states.size(); ++s)
    if (c.check(s, f)) out.insert(s);
  return out;
}

std::size_t error_offset(const char* text) {
  try {
    parse_formula(text);
  } catch (const FormulaParseError& e) {
    return e.offset();
  }
  FAIL("no parse error for " << text);
  return 0;
}

}  // namespace

TEST_CASE("parser precedence and associativity") {
  CHECK(parse_formula("a -> b -> c") == Formula::implies(A("a"), Formula::implies(A("b"), A("c"))));
  CHECK(parse_formula("a | b & c") == Formula::disj(A("a"), Formula::conj(A("b"), A("c"))));
  CHECK(parse_formula("a & b & c") == Formula::conj(Formula::conj(A("a"), A("b")), A("c")));
  CHECK(parse_formula("!a & b") == Formula::conj(Formula::negate(A("a")), A("b")));
  CHECK(parse_formula("[]<>a") == Formula::box(Formula::diamond(A("a"))));
  CHECK(parse_formula("[p]a | <p>b") ==
        Formula::disj(Formula::box_rho(A("a")), Formula::diamond_rho(A("b"))));
  CHECK(parse_formula("Y Y label(video)") ==
        Formula::yesterday(Formula::yesterday(A("label(video)"))));
  CHECK(parse_formula("D12") == Formula::dist(12));
  CHECK(parse_formula("tag(B-LOC)") == A("tag(B-LOC)"));
  CHECK(parse_formula("  ( a )  ") == A("a"));
  CHECK(parse_formula("D0 & <>(label(book) & begin)") ==
        Formula::conj(Formula::dist(0),
                      Formula::diamond(Formula::conj(A("label(book)"), A("begin")))));
}

TEST_CASE("parse errors carry the byte offset") {
  CHECK(error_offset("a &") == 3);
  CHECK(error_offset("a b") == 2);
  CHECK(error_offset("(a") == 2);
  CHECK(error_offset("D") == 1);
  CHECK(error_offset("a $") == 2);
  CHECK(error_offset("[x]a") == 0);
  CHECK(error_offset("label()") == 6);
  CHECK(error_offset("label(video") == 11);
  CHECK(error_offset("") == 0);
  CHECK(error_offset("a - b") == 2);
  try {
    parse_formula("a &");
  } catch (const FormulaParseError& e) {
    const auto& ex = e.expected();
    CHECK(std::find(ex.begin(), ex.end(), "atom") != ex.end());
    CHECK(std::string(e.what()).find("end of input") != std::string::npos);
  }
}

TEST_CASE("printer uses the fewest parentheses") {
  const auto canon = [](const char* s) { return print_formula(parse_formula(s)); };
  CHECK(canon("(a -> b) -> c") == "(a -> b) -> c");
  CHECK(canon("a -> (b -> c)") == "a -> b -> c");
  CHECK(canon("(a & b) & c") == "a & b & c");
  CHECK(canon("a & (b & c)") == "a & (b & c)");
  CHECK(canon("(a | b) & c") == "(a | b) & c");
  CHECK(canon("a | (b & c)") == "a | b & c");
  CHECK(canon("!(a & b)") == "!(a & b)");
  CHECK(canon("[]((a))") == "[]a");
  CHECK(canon("Y ! <p> D3") == "Y!<p>D3");
}

TEST_CASE("random formulas round trip through the printer") {
  std::mt19937_64 g(17);
  for (int i = 0; i < 500; ++i) {
    const Formula f = random_formula(g, 6);
    const std::string text = print_formula(f);
    const Formula back = parse_formula(text);
    CHECK(back == f);
    CHECK(print_formula(back) == text);
  }
}

TEST_CASE("memoized, naive and bottom-up checkers agree with the set oracle") {
  std::mt19937_64 g(23);
  for (int i = 0; i < 300; ++i) {
    const BtpkModel m = random_btpk(g);
    const Formula f = random_formula(g, 4);
    const auto expected = oracle(m, f);
    CHECK(check_all(m, f) == expected);
    CHECK(by_checker(m, f, true) == expected);
    CHECK(by_checker(m, f, false) == expected);
  }
}

TEST_CASE("one checker reused across many temporary formulas stays correct") {
  std::mt19937_64 g(31);
  const BtpkModel m = random_btpk(g, 8);
  ModelChecker c(m);
  for (int i = 0; i < 300; ++i) {
    const auto sat = check_all(m, random_formula(g, 4));
    (void)sat;
    const Formula f = random_formula(g, 4);
    const auto expected = check_all(m, f);
    for (std::size_t s = 0; s < m.states.size(); ++s) CHECK(c.check(s, f) == expected.contains(s));
  }
  CHECK_THROWS_AS(c.check(m.states.size(), A("a")), ContractError);
}

TEST_CASE("modal dualities and complements hold on random models") {
  std::mt19937_64 g(41);
  for (int i = 0; i < 200; ++i) {
    const BtpkModel m = random_btpk(g);
    const Formula f = random_formula(g, 3);
    const Formula h = random_formula(g, 3);
    const Formula nf = Formula::negate(f);
    CHECK(check_all(m, Formula::diamond(f)) == check_all(m, Formula::negate(Formula::box(nf))));
    CHECK(check_all(m, Formula::diamond_rho(f)) ==
          check_all(m, Formula::negate(Formula::box_rho(nf))));
    CHECK(check_all(m, Formula::implies(f, h)) == check_all(m, Formula::disj(nf, h)));
    const auto a = check_all(m, f);
    const auto b = check_all(m, nf);
    std::set<std::size_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(both, both.begin()));
    CHECK(both.empty());
    CHECK(a.size() + b.size() == m.states.size());
  }
}

TEST_CASE("distance constants partition the states") {
  std::mt19937_64 g(43);
  for (int i = 0; i < 100; ++i) {
    const BtpkModel m = random_btpk(g);
    std::size_t total = 0;
    for (std::size_t k = 0; k < m.height; ++k) {
      const auto s = check_all(m, Formula::dist(k));
      CHECK_FALSE(s.empty());
      total += s.size();
    }
    CHECK(total == m.states.size());
    CHECK(check_all(m, Formula::dist(m.height)).empty());
  }
}

TEST_CASE("Y looks one step back along r1") {
  const Tagset tags = Tagset::default_tagset();
  const std::vector<std::size_t> p{3, 0, 0};
  const BtpkModel chain = build_btpk(tags, p, p, {}, {});
  const Formula label = A("label(video)");
  CHECK(check_all(chain, Formula::yesterday(label)) == std::set<std::size_t>{2});
  CHECK(check_all(chain, Formula::yesterday(A("start"))) == std::set<std::size_t>{1});
  CHECK(check_all(chain, Formula::yesterday(Formula::negate(A("start")))) ==
        std::set<std::size_t>{2, 3});
  CHECK_FALSE(check(chain, chain.root, Formula::yesterday(Formula::negate(label))));
  CHECK(check(chain, chain.root, Formula::box(label)));
  CHECK(check(chain, 3, Formula::box(Formula::negate(A("a")))));  // leaves satisfy any box
  CHECK_FALSE(check(chain, 3, Formula::diamond(Formula::negate(A("a")))));
}

TEST_CASE("substitute_atoms replaces every occurrence") {
  const Formula f = parse_formula("q & [](q | !r) -> Y q");
  const Formula g = substitute_atoms(f, {{"q", A("label(video)")}});
  CHECK(g == parse_formula("label(video) & [](label(video) | !r) -> Y label(video)"));
  CHECK(substitute_atoms(f, {}) == f);
}

TEST_CASE("recognition: the corrected branch carries the label, the trunk does not") {
  const auto m = keyword_model();
  const std::vector<std::string> tokens{"Dune", "movie", "is", "great"};
  const auto ids = m.vocab().encode(tokens);
  const EntitySpan target{0, 0, "video"};
  const auto report = extract_announcements(m, ids, target);
  const BtpkModel t = build_btpk(m, ids, report.announcements, find_branch_points(m, ids));
  const auto v = verify_recognition(t, target, "video");
  CHECK(v.has_branch);
  CHECK(v.primed_path);
  CHECK_FALSE(v.trunk_path);
  CHECK(v.primed_anchor == t.root);
  CHECK(check_all(t, v.primed_formula).contains(t.root));
  for (const char* wrong : {"book", "music"}) {
    const auto w = verify_recognition(t, target, wrong);
    CHECK_FALSE(w.primed_path);
    CHECK_FALSE(w.trunk_path);
  }
  CHECK_THROWS_AS(verify_recognition(t, {3, 5, "video"}, "video"), ContractError);
}

TEST_CASE("recognition on a chain falls back to the trunk verdict") {
  const Tagset tags = Tagset::default_tagset();
  const std::vector<std::size_t> p{0, 3, 4, 0};  // O B_video I_video O
  const BtpkModel chain = build_btpk(tags, p, p, {}, {});
  const auto v = verify_recognition(chain, {1, 2, "video"}, "video");
  CHECK_FALSE(v.has_branch);
  CHECK(v.trunk_path);
  CHECK(v.primed_path == v.trunk_path);
  // The span must end where the entity ends.
  CHECK_FALSE(verify_recognition(chain, {1, 1, "video"}, "video").trunk_path);
  CHECK_FALSE(verify_recognition(chain, {1, 2, "video"}, "book").trunk_path);
}
