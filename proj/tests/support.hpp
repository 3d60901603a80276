#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "btpk/brnn.hpp"
#include "btpk/corpus.hpp"
#include "btpk/logic.hpp"
#include "btpk/tree.hpp"

namespace btpk::testing {

inline TaggedSequence seq(std::vector<std::string> tokens, std::vector<std::string> labels) {
  return {std::move(tokens), std::move(labels)};
}

inline BrnnModel tiny_model(std::size_t dims, std::uint64_t seed,
                            MaskPropagation mode = MaskPropagation::Propagate) {
  const std::vector<TaggedSequence> data{
      seq({"the", "movie", "Dune", "is", "great"}, {"O", "O", "B_video", "O", "O"}),
      seq({"the", "book", "Blue", "Moon"}, {"O", "O", "B_book", "I_book"})};
  ModelConfig c;
  c.embedding_dim = dims;
  c.hidden_dim = dims;
  c.seed = seed;
  c.mask_propagation = mode;
  return init_model(c, build_vocab(data, 1), Tagset::default_tagset());
}

/// Hand-set tagger over dims 8. A type keyword (movie/book/song) next to an
/// entity word (Dune/Heat) makes that word B_<type>; alone it is O. With
/// identity cells the neighbour's keyword reaches the entity with weight
/// tanh(tanh(2)) ~ 0.746 and the entity flag with tanh(2) ~ 0.964 per side:
///   logit(B_t) = kw_t(f) + kw_t(b) + 3 (flag(f) + flag(b)) - 6.2, logit(O) = 0.
/// Keyword before the entity travels on the forward side, after it on the
/// backward side.
inline BrnnModel keyword_model(MaskPropagation mode = MaskPropagation::Propagate) {
  const std::size_t d = 8;
  ModelConfig c;
  c.embedding_dim = d;
  c.hidden_dim = d;
  c.mask_propagation = mode;
  Vocab vocab({"<UNK>", "<S>", "the", "movie", "book", "song", "Dune", "Heat", "is", "great"});
  const Tagset tags = Tagset::default_tagset();  // O B_book I_book B_video I_video B_music I_music
  BrnnModel m(c, vocab, tags);
  auto emb = m.group(ParamGroup::Embedding);
  const auto set_emb = [&](const char* tok, std::size_t dim) { emb[vocab.id(tok) * d + dim] = 2.0; };
  set_emb("book", 1);
  set_emb("movie", 3);
  set_emb("song", 5);
  set_emb("Dune", 7);
  set_emb("Heat", 7);
  for (ParamGroup g : {ParamGroup::ForwardInput, ParamGroup::ForwardRecurrent,
                       ParamGroup::BackwardInput, ParamGroup::BackwardRecurrent}) {
    auto w = m.group(g);
    for (std::size_t i = 0; i < d; ++i) w[i * d + i] = 1.0;
  }
  auto wo = m.group(ParamGroup::OutputWeight);
  auto bo = m.group(ParamGroup::OutputBias);
  for (std::size_t k : {1u, 3u, 5u}) {  // B_book/B_video/B_music read dims 1/3/5
    wo[k * 2 * d + k] = 1.0;
    wo[k * 2 * d + d + k] = 1.0;
    wo[k * 2 * d + 7] = 3.0;
    wo[k * 2 * d + d + 7] = 3.0;
    bo[k] = -6.2;
  }
  for (std::size_t k : {2u, 4u, 6u}) bo[k] = -10.0;
  return m;
}

/// Random tree-shaped model: r1 is a tree of out-degree <= 2 rooted at 0,
/// heights follow r1, rho edges are arbitrary pairs, atoms are drawn from
/// {a, b, c, d}.
inline BtpkModel random_btpk(std::mt19937_64& rng, std::size_t max_states = 8) {
  std::uniform_int_distribution<std::size_t> count(1, max_states);
  const std::size_t n = count(rng);
  BtpkModel m;
  std::vector<std::size_t> children(n, 0);
  m.states.push_back({0, 0, false, {}});
  for (std::size_t s = 1; s < n; ++s) {
    std::vector<std::size_t> open;
    for (std::size_t p = 0; p < s; ++p)
      if (children[p] < 2) open.push_back(p);
    const std::size_t parent = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
    ++children[parent];
    m.r1.emplace_back(parent, s);
    m.states.push_back({s, m.states[parent].height + 1, (rng() & 1) != 0, {}});
  }
  const char* names[] = {"a", "b", "c", "d"};
  for (auto& st : m.states)
    for (const char* a : names)
      if (rng() % 3 == 0) st.atoms.emplace_back(a);
  const std::size_t rho_count = rng() % (n + 1);
  for (std::size_t i = 0; i < rho_count; ++i) m.rho.emplace_back(rng() % n, rng() % n);
  std::size_t max_h = 0;
  for (const auto& st : m.states) max_h = std::max(max_h, st.height);
  m.height = max_h + 1;
  m.rebuild_valuation();
  return m;
}

/// Random formula of depth <= max_depth over every operator.
inline Formula random_formula(std::mt19937_64& rng, std::size_t max_depth,
                              const std::vector<std::string>& atom_names = {"a", "b", "c", "d",
                                                                            "label(video)"}) {
  const auto leaf = [&]() {
    if (rng() % 4 == 0) return Formula::dist(rng() % 5);
    return Formula::atom(atom_names[rng() % atom_names.size()]);
  };
  if (max_depth <= 1 || rng() % 5 == 0) return leaf();
  const std::size_t d = max_depth - 1;
  switch (rng() % 10) {
    case 0: return Formula::negate(random_formula(rng, d, atom_names));
    case 1: return Formula::conj(random_formula(rng, d, atom_names), random_formula(rng, d, atom_names));
    case 2: return Formula::disj(random_formula(rng, d, atom_names), random_formula(rng, d, atom_names));
    case 3: return Formula::implies(random_formula(rng, d, atom_names), random_formula(rng, d, atom_names));
    case 4: return Formula::box(random_formula(rng, d, atom_names));
    case 5: return Formula::diamond(random_formula(rng, d, atom_names));
    case 6: return Formula::box_rho(random_formula(rng, d, atom_names));
    case 7: return Formula::diamond_rho(random_formula(rng, d, atom_names));
    case 8: return Formula::yesterday(random_formula(rng, d, atom_names));
    default: return leaf();
  }
}

}  // namespace btpk::testing
