#include "btpk/tree.hpp"

#include <algorithm>

#include "btpk/error.hpp"

namespace btpk {

namespace atoms {
std::string label(std::string_view coarse) { return "label(" + std::string(coarse) + ")"; }
std::string tag(std::string_view tag) { return "tag(" + std::string(tag) + ")"; }
}  // namespace atoms

void BtpkModel::rebuild_valuation() {
  pi.clear();
  for (const auto& s : states)
    for (const auto& a : s.atoms) pi[a].insert(s.id);
}

std::optional<std::size_t> BtpkModel::state_at(std::size_t h, bool primed) const {
  for (const auto& s : states)
    if (s.height == h && s.primed == primed) return s.id;
  return std::nullopt;
}

bool BtpkModel::has_branch() const {
  return std::any_of(states.begin(), states.end(), [](const BtpkState& s) { return s.primed; });
}

std::vector<std::size_t> find_branch_points(const BrnnModel& model,
                                            std::span<const std::size_t> token_ids) {
  const auto full = forward(model, token_ids).predictions;
  const auto fwd_only =
      forward(model, token_ids, Mask::all(token_ids.size(), Side::Backward)).predictions;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < full.size(); ++i)
    if (full[i] != fwd_only[i]) out.push_back(i);
  return out;
}

namespace {

std::vector<std::string> state_atoms(const Tagset& tagset, std::size_t tag_id, bool primed) {
  const std::string& tag = tagset.tag(tag_id);
  std::vector<std::string> a{atoms::label(tagset.coarse(tag)), atoms::tag(tag)};
  if (is_begin_tag(tag)) a.emplace_back(atoms::kBegin);
  if (primed) a.emplace_back(atoms::kPrimed);
  std::sort(a.begin(), a.end());
  return a;
}

}  // namespace

BtpkModel build_btpk(const Tagset& tagset, std::span<const std::size_t> forward_only,
                     std::span<const std::size_t> full,
                     const std::vector<Announcement>& announcements,
                     const std::vector<std::size_t>& branch_points) {
  const std::size_t n = full.size();
  if (n == 0) throw ContractError("cannot build a BTPK model for an empty sequence");
  if (forward_only.size() != n) throw ContractError("prediction lengths differ");
  for (const auto& a : announcements)
    if (a.gram.end >= n || a.target.end >= n || a.gram.start > a.gram.end)
      throw ContractError("announcement outside the sequence");

  std::vector<std::size_t> points(branch_points.begin(), branch_points.end());
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  // (branch position p, rho position a)
  std::optional<std::pair<std::size_t, std::size_t>> branch;
  for (std::size_t p : points) {
    if (p >= n) throw ContractError("branch point outside the sequence");
    const Announcement* best = nullptr;
    bool supported = false;
    for (const auto& a : announcements) {
      if (a.target.start > p || p > a.target.end) continue;
      supported = true;
      if (a.gram.start <= p) continue;
      if (!best || a.gram.start < best->gram.start ||
          (a.gram.start == best->gram.start && a.gram.end < best->gram.end))
        best = &a;
    }
    if (!supported) continue;
    if (!best)
      throw ContractError("branch point " + std::to_string(p) +
                          " is only supported by announcements at or before it; a rho "
                          "back-edge must come from a later position");
    if (!branch) branch = std::make_pair(p, best->gram.start);
  }

  BtpkModel m;
  m.height = n + 1;
  m.announcements = announcements;
  // Ids in (height, primed) order.
  m.states.push_back({0, 0, false, {std::string(atoms::kStart)}});
  std::vector<std::size_t> trunk(n + 1, 0), primed(n + 1, 0);
  for (std::size_t h = 1; h <= n; ++h) {
    trunk[h] = m.states.size();
    m.states.push_back({trunk[h], h, false, state_atoms(tagset, forward_only[h - 1], false)});
    if (branch && h >= branch->first + 1) {
      primed[h] = m.states.size();
      m.states.push_back({primed[h], h, true, state_atoms(tagset, full[h - 1], true)});
    }
  }
  for (std::size_t h = 1; h <= n; ++h) m.r1.emplace_back(trunk[h - 1], trunk[h]);
  if (branch) {
    const std::size_t root_h = branch->first + 1;
    m.r1.emplace_back(trunk[root_h - 1], primed[root_h]);
    for (std::size_t h = root_h + 1; h <= n; ++h) m.r1.emplace_back(primed[h - 1], primed[h]);
    const std::size_t rho_h = branch->second + 1;
    m.rho.emplace_back(trunk[rho_h], primed[rho_h]);
  }
  std::sort(m.r1.begin(), m.r1.end());
  m.rebuild_valuation();
  return m;
}

BtpkModel build_btpk(const BrnnModel& model, std::span<const std::size_t> token_ids,
                     const std::vector<Announcement>& announcements,
                     const std::vector<std::size_t>& branch_points) {
  const auto full = forward(model, token_ids).predictions;
  const auto fwd_only =
      forward(model, token_ids, Mask::all(token_ids.size(), Side::Backward)).predictions;
  return build_btpk(model.tagset(), fwd_only, full, announcements, branch_points);
}

std::vector<Edge> transitive_closure(std::size_t num_states, std::span<const Edge> edges) {
  std::vector<std::vector<std::size_t>> succ(num_states);
  for (const auto& [u, v] : edges) {
    if (u >= num_states || v >= num_states) throw ContractError("edge references unknown state");
    succ[u].push_back(v);
  }
  std::vector<Edge> out;
  std::vector<char> seen(num_states);
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < num_states; ++s) {
    std::fill(seen.begin(), seen.end(), 0);
    stack.assign(succ[s].begin(), succ[s].end());
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (seen[v]) continue;
      seen[v] = 1;
      for (std::size_t w : succ[v]) stack.push_back(w);
    }
    for (std::size_t v = 0; v < num_states; ++v)
      if (seen[v]) out.emplace_back(s, v);
  }
  return out;
}

std::vector<Edge> transitive_closure(const BtpkModel& btpk) {
  return transitive_closure(btpk.states.size(), btpk.r1);
}

std::vector<std::string> validate_btpk(const BtpkModel& m) {
  std::vector<std::string> out;
  const std::size_t count = m.states.size();
  if (count == 0) {
    out.emplace_back("model has no states");
    return out;
  }
  for (std::size_t i = 0; i < count; ++i)
    if (m.states[i].id != i) out.push_back("state at index " + std::to_string(i) + " has id " +
                                           std::to_string(m.states[i].id));
  if (m.root >= count) {
    out.emplace_back("root id out of range");
    return out;
  }
  const BtpkState& root = m.states[m.root];
  if (root.height != 0) out.emplace_back("root height is not 0");
  if (root.primed) out.emplace_back("root is primed");

  bool edges_ok = true;
  for (const auto* rel : {&m.r1, &m.rho})
    for (const auto& [u, v] : *rel)
      if (u >= count || v >= count) {
        out.push_back("edge (" + std::to_string(u) + "," + std::to_string(v) +
                      ") references an unknown state");
        edges_ok = false;
      }
  if (!edges_ok) return out;

  // Tree property of r1.
  std::vector<std::size_t> parents(count, 0);
  std::vector<std::vector<std::size_t>> children(count);
  for (const auto& [u, v] : m.r1) {
    ++parents[v];
    children[u].push_back(v);
  }
  for (std::size_t s = 0; s < count; ++s) {
    if (s == m.root && parents[s] != 0) out.emplace_back("root has an r1 parent");
    if (s != m.root && parents[s] != 1)
      out.push_back("state " + std::to_string(s) + " has " + std::to_string(parents[s]) +
                    " r1 parents (tree requires exactly 1)");
    if (children[s].size() > 2)
      out.push_back("state " + std::to_string(s) + " has more than two r1 children");
  }
  // 0 = unvisited, 1 = on stack, 2 = done
  std::vector<int> color(count, 0);
  bool cycle = false;
  auto dfs = [&](auto&& self, std::size_t u) -> void {
    color[u] = 1;
    for (std::size_t v : children[u]) {
      if (color[v] == 1) cycle = true;
      else if (color[v] == 0) self(self, v);
    }
    color[u] = 2;
  };
  dfs(dfs, m.root);
  for (std::size_t s = 0; s < count; ++s)
    if (color[s] == 0) dfs(dfs, s);
  if (cycle) out.emplace_back("r1 contains a cycle");
  std::vector<int> reach(count, 0);
  std::vector<std::size_t> stack{m.root};
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    if (reach[u]) continue;
    reach[u] = 1;
    for (std::size_t v : children[u]) stack.push_back(v);
  }
  for (std::size_t s = 0; s < count; ++s)
    if (!reach[s]) out.push_back("state " + std::to_string(s) + " is unreachable from the root");

  for (const auto& [u, v] : m.r1)
    if (m.states[v].height != m.states[u].height + 1)
      out.push_back("r1 edge (" + std::to_string(u) + "," + std::to_string(v) +
                    ") skips heights " + std::to_string(m.states[u].height) + " -> " +
                    std::to_string(m.states[v].height));
  for (const auto& [u, v] : m.rho) {
    if (m.states[u].height != m.states[v].height)
      out.push_back("rho edge (" + std::to_string(u) + "," + std::to_string(v) +
                    ") joins different heights");
    if (m.states[u].primed || !m.states[v].primed)
      out.push_back("rho edge (" + std::to_string(u) + "," + std::to_string(v) +
                    ") must lead from an unprimed to a primed state");
  }

  // |H| = n + 1 with heights 0..n all present.
  std::size_t max_h = 0;
  for (const auto& s : m.states) max_h = std::max(max_h, s.height);
  if (m.height < 2) out.emplace_back("height must be at least 2 (n >= 1)");
  else if (max_h + 1 != m.height)
    out.push_back("height |H| = " + std::to_string(m.height) + " but deepest state is at " +
                  std::to_string(max_h));

  // n <= |E| < |V| (|V| - 1), |V| = 2n hidden-state vertices.
  const std::size_t n = m.sequence_length();
  const std::size_t edges = m.r1.size() + m.rho.size();
  const std::size_t vertices = 2 * n;
  if (n > 0 && !(n <= edges && edges < vertices * (vertices - 1)))
    out.push_back("edge count " + std::to_string(edges) + " violates " + std::to_string(n) +
                  " <= |E| < " + std::to_string(vertices * (vertices - 1)));

  std::map<std::string, std::set<std::size_t>> expected;
  for (const auto& s : m.states)
    for (const auto& a : s.atoms) expected[a].insert(s.id);
  std::erase_if(expected, [](const auto& kv) { return kv.second.empty(); });
  auto actual = m.pi;
  std::erase_if(actual, [](const auto& kv) { return kv.second.empty(); });
  if (expected != actual) out.emplace_back("valuation pi disagrees with state atoms");
  return out;
}

}  // namespace btpk
