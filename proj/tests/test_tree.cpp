#include <algorithm>
#include <random>

#include "doctest.h"

#include "btpk/announce.hpp"
#include "btpk/error.hpp"
#include "btpk/tree.hpp"
#include "support.hpp"

using namespace btpk;
using btpk::testing::keyword_model;

namespace {

bool has_atom(const BtpkState& s, const std::string& a) {
  return std::binary_search(s.atoms.begin(), s.atoms.end(), a);
}

// Boolean matrix powering: R+ = R or R^2 or ... or R^n.
std::vector<Edge> closure_oracle(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n)), acc(n, std::vector<bool>(n)), p;
  for (const auto& [u, v] : edges) r[u][v] = true;
  p = r;
  acc = r;
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<std::vector<bool>> next(n, std::vector<bool>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t m = 0; m < n && !next[i][j]; ++m) next[i][j] = p[i][m] && r[m][j];
    p = next;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) acc[i][j] = acc[i][j] || p[i][j];
  }
  std::vector<Edge> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (acc[i][j]) out.emplace_back(i, j);
  return out;
}

struct Built {
  BtpkModel tree;
  std::vector<std::size_t> branch_points;
  AnnouncementReport report;
};

Built build_for(const BrnnModel& m, const std::vector<std::string>& tokens, EntitySpan target) {
  const auto ids = m.vocab().encode(tokens);
  Built b;
  b.branch_points = find_branch_points(m, ids);
  b.report = extract_announcements(m, ids, target);
  b.tree = build_btpk(m, ids, b.report.announcements, b.branch_points);
  return b;
}

}  // namespace

TEST_CASE("keyword before the entity: only a past announcement supports the branch") {
  // Forward-only loses half of the entity evidence, so position 2 is a branch
  // point, but its only announcement precedes it and cannot be a rho edge.
  const auto m = keyword_model();
  const std::vector<std::string> tokens{"the", "movie", "Dune", "is", "great"};
  const auto ids = m.vocab().encode(tokens);
  const auto points = find_branch_points(m, ids);
  CHECK(points == std::vector<std::size_t>{2});
  const auto report = extract_announcements(m, ids, {2, 2, "video"});
  CHECK_THROWS_AS(build_btpk(m, ids, report.announcements, points), ContractError);

  std::vector<Announcement> future;
  for (const auto& a : report.announcements)
    if (a.gram.start > a.target.end) future.push_back(a);
  const BtpkModel t = build_btpk(m, ids, future, points);
  CHECK(t.states.size() == 6);
  CHECK(t.r1.size() == 5);
  CHECK(t.rho.empty());
  CHECK(t.height == 6);
  CHECK_FALSE(t.has_branch());
  CHECK(validate_btpk(t).empty());
  CHECK_FALSE(has_atom(t.states[3], atoms::label("video")));
  CHECK(has_atom(t.states[0], std::string(atoms::kStart)));
}

TEST_CASE("a lone entity word has no branch points") {
  const auto m = keyword_model();
  CHECK(find_branch_points(m, m.vocab().encode({"the", "is", "great"})).empty());
}

TEST_CASE("keyword after the entity: branch, primed twin and same-height rho") {
  const auto m = keyword_model();
  const auto b = build_for(m, {"Dune", "movie", "is", "great"}, {0, 0, "video"});
  REQUIRE(b.branch_points == std::vector<std::size_t>{0});
  const BtpkModel& t = b.tree;
  CHECK(t.has_branch());
  CHECK(t.height == 5);
  CHECK(t.states.size() == 1 + 4 + 4);
  CHECK(t.r1.size() == 4 + 1 + 3);
  REQUIRE(t.rho.size() == 1);
  const auto [u, v] = t.rho[0];
  CHECK(t.states[u].height == 2);
  CHECK(t.states[v].height == 2);
  CHECK_FALSE(t.states[u].primed);
  CHECK(t.states[v].primed);
  const auto trunk1 = *t.state_at(1, false);
  const auto primed1 = *t.state_at(1, true);
  CHECK_FALSE(has_atom(t.states[trunk1], atoms::label("video")));
  CHECK(has_atom(t.states[primed1], atoms::label("video")));
  CHECK(has_atom(t.states[primed1], std::string(atoms::kPrimed)));
  CHECK(std::find(t.r1.begin(), t.r1.end(), Edge{t.root, primed1}) != t.r1.end());
  CHECK(validate_btpk(t).empty());
  for (std::size_t i = 0; i < t.states.size(); ++i) CHECK(t.states[i].id == i);
}

TEST_CASE("ids follow (height, primed) order") {
  const auto m = keyword_model();
  const auto t = build_for(m, {"Dune", "movie", "is", "great"}, {0, 0, "video"}).tree;
  for (std::size_t i = 1; i < t.states.size(); ++i) {
    const auto& a = t.states[i - 1];
    const auto& b = t.states[i];
    CHECK((a.height < b.height || (a.height == b.height && !a.primed && b.primed)));
  }
}

TEST_CASE("announcement at or before the branch point is a construction error") {
  const Tagset tags = Tagset::default_tagset();
  const std::vector<std::size_t> fwd{0, 0, 0}, full{0, 0, 3};
  const Announcement before{{0, 0}, Side::Both, {2, 2, "video"}, "video", "O"};
  CHECK_THROWS_AS(build_btpk(tags, fwd, full, {before}, {2}), ContractError);
  const Announcement self{{2, 2}, Side::Both, {2, 2, "video"}, "video", "O"};
  CHECK_THROWS_AS(build_btpk(tags, fwd, full, {self}, {2}), ContractError);
  // Unsupported branch points leave a plain chain.
  const auto chain = build_btpk(tags, fwd, full, {}, {2});
  CHECK_FALSE(chain.has_branch());
  CHECK(validate_btpk(chain).empty());
}

TEST_CASE("unambiguous 3-token sequence gives a 4-state chain") {
  const Tagset tags = Tagset::default_tagset();
  const std::vector<std::size_t> p{0, 1, 0};
  const auto t = build_btpk(tags, p, p, {}, {});
  CHECK(t.states.size() == 4);
  CHECK(t.r1.size() == 3);
  CHECK(t.rho.empty());
  CHECK(t.height == 4);
  CHECK(validate_btpk(t).empty());
}

TEST_CASE("size bound on n = 3 with one branch") {
  const Tagset tags = Tagset::default_tagset();
  const std::vector<std::size_t> fwd{0, 0, 0}, full{3, 0, 0};
  const Announcement a{{1, 1}, Side::Backward, {0, 0, "video"}, "video", "O"};
  const auto t = build_btpk(tags, fwd, full, {a}, {0});
  const std::size_t n = 3, v = 2 * n, e = t.r1.size() + t.rho.size();
  CHECK(n <= e);
  CHECK(e < v * (v - 1));
  CHECK(e == 7);
  CHECK(validate_btpk(t).empty());
}

TEST_CASE("earliest supported branch point and earliest gram win") {
  const Tagset tags = Tagset::default_tagset();
  const std::vector<std::size_t> fwd{0, 0, 0, 0, 0, 0}, full{3, 4, 0, 0, 0, 0};
  const EntitySpan target{0, 1, "video"};
  const std::vector<Announcement> anns{{{4, 4}, Side::Backward, target, "video", "O"},
                                       {{2, 3}, Side::Backward, target, "video", "O"}};
  const auto t = build_btpk(tags, fwd, full, anns, {0, 1});
  REQUIRE(t.rho.size() == 1);
  CHECK(t.states[t.rho[0].first].height == 3);  // gram start 2 -> height 3
  CHECK(t.state_at(1, true).has_value());       // branch rooted at position 0
  CHECK(t.announcements.size() == 2);
  CHECK(validate_btpk(t).empty());
}

TEST_CASE("transitive closure: chain, empty and random graphs against matrix powering") {
  CHECK(transitive_closure(3, std::vector<Edge>{{0, 1}, {1, 2}}) ==
        std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}});
  CHECK(transitive_closure(4, std::vector<Edge>{}).empty());
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + g() % 8;
    std::vector<Edge> edges;
    const std::size_t m = g() % (2 * n + 1);
    for (std::size_t i = 0; i < m; ++i) edges.emplace_back(g() % n, g() % n);
    const auto c = transitive_closure(n, edges);
    CHECK(c == closure_oracle(n, edges));
    CHECK(transitive_closure(n, c) == c);
  }
  CHECK_THROWS_AS(transitive_closure(2, std::vector<Edge>{{0, 5}}), ContractError);
}

TEST_CASE("validate_btpk reports hand-built violations") {
  const Tagset tags = Tagset::default_tagset();
  const std::vector<std::size_t> p{0, 0, 0};
  const BtpkModel good = build_btpk(tags, p, p, {}, {});
  REQUIRE(validate_btpk(good).empty());

  BtpkModel cycle = good;
  cycle.r1.emplace_back(3, 1);
  CHECK_FALSE(validate_btpk(cycle).empty());

  BtpkModel gap = good;
  gap.r1 = {{0, 1}, {1, 2}, {1, 3}};
  CHECK_FALSE(validate_btpk(gap).empty());

  BtpkModel wrong_height = good;
  wrong_height.height = 7;
  CHECK_FALSE(validate_btpk(wrong_height).empty());

  BtpkModel primed_root = good;
  primed_root.states[0].primed = true;
  CHECK_FALSE(validate_btpk(primed_root).empty());

  BtpkModel bad_rho = good;
  bad_rho.rho.emplace_back(1, 2);
  CHECK_FALSE(validate_btpk(bad_rho).empty());

  BtpkModel stale_pi = good;
  stale_pi.pi["label(video)"].insert(2);
  CHECK_FALSE(validate_btpk(stale_pi).empty());
}

TEST_CASE("every synthetic-shaped input builds a valid tree") {
  const auto m = keyword_model();
  const std::vector<std::vector<std::string>> sentences{
      {"Dune"},        {"the", "book", "Heat"}, {"Heat", "song"},
      {"the", "song", "Dune", "is", "great"}, {"Dune", "book", "is", "the", "movie", "Heat"}};
  for (const auto& s : sentences) {
    const auto ids = m.vocab().encode(s);
    const auto full = forward(m, ids).predictions;
    std::vector<std::string> tags;
    for (auto p : full) tags.push_back(m.tagset().tag(p));
    std::vector<Announcement> anns;
    for (const auto& e : entity_spans(tags))
      for (const auto& a : extract_announcements(m, ids, e).announcements)
        if (a.gram.start > e.end) anns.push_back(a);
    const auto t = build_btpk(m, ids, anns, find_branch_points(m, ids));
    CHECK(t.height == s.size() + 1);
    CHECK(validate_btpk(t).empty());
  }
}
