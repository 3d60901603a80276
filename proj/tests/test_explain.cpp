#include <algorithm>
#include <sstream>

#include "doctest.h"

#include "btpk/config.hpp"
#include "btpk/error.hpp"
#include "btpk/explain.hpp"
#include "btpk/pipeline.hpp"
#include "support.hpp"

using namespace btpk;
using btpk::testing::keyword_model;

namespace {

std::size_t count_lines(const std::string& text, const std::string& needle, bool dashed) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);)
    if (line.find(needle) != std::string::npos &&
        (line.find("dashed") != std::string::npos) == dashed)
      ++n;
  return n;
}

// O B_video O over three tokens, no branch.
BtpkModel small_chain() {
  const std::vector<std::size_t> p{0, 3, 0};
  return build_btpk(Tagset::default_tagset(), p, p, {}, {});
}

}  // namespace

TEST_CASE("coarse_label strips the BIO prefix") {
  CHECK(coarse_label("B_book") == "book");
  CHECK(coarse_label("I_music") == "music");
  CHECK(coarse_label("O") == "O");
  CHECK(coarse_label("B-PER", Tagset({"O", "B-PER", "I-PER"})) == "PER");
  CHECK_THROWS_AS(coarse_label("B_PER"), ContractError);
}

TEST_CASE("explanation for a following keyword") {
  const auto m = keyword_model();
  const auto a = analyze_sentence(m, {"Dune", "movie", "is", "great"});
  CHECK(a.predicted == std::vector<std::string>{"B_video", "O", "O", "O"});
  CHECK(a.branch_points == std::vector<std::size_t>{0});
  CHECK(a.btpk.has_branch());
  CHECK(validate_btpk(a.btpk).empty());
  REQUIRE(a.explanations.size() == 1);
  const Explanation& e = a.explanations[0];
  CHECK(e.question == "Why is \"Dune\" recognized as a video name rather than other labels?");
  CHECK(e.answer ==
        "Because the \"movie\" (public announcement) appears in the following words, it is more "
        "reasonable to be recognized as \"video\".");
  CHECK(e.primed_verdict);
  CHECK_FALSE(e.trunk_verdict);
  CHECK(e.formula == print_formula(parse_formula(e.formula)));
  const std::string text = explanation_to_text(e);
  CHECK(text.find("Question: ") == 0);
  CHECK(text.find("Verdicts: primed path true, trunk path false\n") != std::string::npos);
  const auto j = explanation_to_json(e);
  CHECK(j["label"] == "video");
  CHECK(j["verdicts"]["primed_path"] == true);
  CHECK(j["evidence"].size() == e.evidence.size());
}

TEST_CASE("an explicit entity span gets its type from the prediction") {
  const auto m = keyword_model();
  const auto a = analyze_sentence(m, {"Dune", "movie", "is", "great"}, GramSpan{0, 0});
  REQUIRE(a.reports.size() == 1);
  CHECK(a.reports[0].target.type == "video");
  CHECK_THROWS_AS(analyze_sentence(m, {"Dune", "movie"}, GramSpan{1, 1}), ContractError);
  CHECK_THROWS_AS(analyze_sentence(m, {"Dune"}, GramSpan{0, 3}), ContractError);
  CHECK_THROWS_AS(analyze_sentence(m, {}), ContractError);
}

TEST_CASE("a preceding keyword without a branch is reported as unverified") {
  // Forward-only drops the label and no later word supports a branch, so the
  // tree cannot confirm the prediction; the answer must not assert it.
  const auto m = keyword_model();
  const auto a = analyze_sentence(m, {"the", "movie", "Dune", "is", "great"});
  REQUIRE(a.explanations.size() == 1);
  const Explanation& e = a.explanations[0];
  CHECK_FALSE(a.btpk.has_branch());
  CHECK_FALSE(e.primed_verdict);
  CHECK(e.answer.rfind("Unverified: ", 0) == 0);
  CHECK(e.answer.find("preceding words") != std::string::npos);
  CHECK(e.answer.find("masking it changes the label") != std::string::npos);
}

TEST_CASE("several grams are listed once each in both directions") {
  const BtpkModel t = small_chain();
  const std::vector<std::string> tokens{"x", "Dune", "y"};
  const EntitySpan target{1, 1, "video"};
  const std::vector<Announcement> anns{{{0, 0}, Side::Both, target, "video", "O"},
                                       {{0, 0}, Side::Forward, target, "video", "O"},
                                       {{2, 2}, Side::Backward, target, "video", "book"}};
  const auto e = render_explanation(t, target, anns, tokens);
  CHECK(e.answer ==
        "Because the \"x\" and \"y\" (public announcements) appear in the preceding and following "
        "words, it is more reasonable to be recognized as \"video\".");
  CHECK(e.evidence.size() == 3);
}

TEST_CASE("three grams join with commas and a final and") {
  const std::vector<std::size_t> p{0, 0, 0, 3};
  const BtpkModel t = build_btpk(Tagset::default_tagset(), p, p, {}, {});
  const EntitySpan target{3, 3, "video"};
  const std::vector<Announcement> anns{{{0, 0}, Side::Both, target, "video", "O"},
                                       {{1, 1}, Side::Both, target, "video", "O"},
                                       {{2, 2}, Side::Both, target, "video", "O"}};
  const auto e = render_explanation(t, target, anns, {"a", "b", "c", "Dune"});
  CHECK(e.answer.find("the \"a\", \"b\" and \"c\" (public announcements) appear in the preceding words") !=
        std::string::npos);
}

TEST_CASE("no announcements: the answer says so") {
  const BtpkModel t = small_chain();
  const auto e = render_explanation(t, {1, 1, "video"}, {}, {"x", "Dune", "y"});
  CHECK(e.answer ==
        "No public announcement was found: masking no context span changes the label \"video\" of "
        "\"Dune\".");
  const auto bad = render_explanation(t, {1, 1, "book"}, {}, {"x", "Dune", "y"});
  CHECK(bad.answer.find("does not verify") != std::string::npos);
  CHECK_THROWS_AS(render_explanation(t, {1, 4, "video"}, {}, {"x", "Dune", "y"}), ContractError);
}

TEST_CASE("DOT export: one solid line per r1 edge, one dashed per rho edge") {
  const auto m = keyword_model();
  const auto a = analyze_sentence(m, {"Dune", "movie", "is", "great"});
  const std::string dot = export_dot(a.btpk, a.tokens);
  CHECK(dot.rfind("digraph btpk {\n", 0) == 0);
  CHECK(dot.back() == '\n');
  CHECK(count_lines(dot, " -> ", false) == a.btpk.r1.size());
  CHECK(count_lines(dot, " -> ", true) == a.btpk.rho.size());
  CHECK(count_lines(dot, "[label=", false) == a.btpk.states.size());
  CHECK(dot.find("s'_1\\nDune") != std::string::npos);
  const std::string quoted = export_dot(small_chain(), {"say \"hi\"", "Dune", "y"});
  CHECK(quoted.find("say \\\"hi\\\"") != std::string::npos);
}

TEST_CASE("JSON export round trips and is byte-stable") {
  const auto m = keyword_model();
  const auto a = analyze_sentence(m, {"Dune", "movie", "is", "great"});
  const nlohmann::json meta{{"seed", 7}};
  const std::string text = export_json(a.btpk, a.tokens, meta);
  CHECK(text == export_json(a.btpk, a.tokens, meta));
  const BtpkDocument doc = import_json(text);
  CHECK(doc.model == a.btpk);
  CHECK(doc.tokens == a.tokens);
  CHECK(doc.meta == meta);
  CHECK(export_json(doc.model, doc.tokens, doc.meta) == text);
  const auto bare = import_json(export_json(a.btpk));
  CHECK(bare.tokens.empty());
  CHECK(bare.meta.is_null());
}

TEST_CASE("JSON import rejects malformed documents") {
  const std::string good = export_json(small_chain());
  CHECK_NOTHROW(import_json(good));
  CHECK_THROWS_AS(import_json("not json"), DataError);
  CHECK_THROWS_AS(import_json("[]"), DataError);
  auto mutate = [&](auto&& fn) {
    auto j = nlohmann::json::parse(good);
    fn(j);
    return j.dump();
  };
  CHECK_THROWS_AS(import_json(mutate([](auto& j) { j["format"] = "other"; })), DataError);
  CHECK_THROWS_AS(import_json(mutate([](auto& j) { j["version"] = 2; })), DataError);
  CHECK_THROWS_AS(import_json(mutate([](auto& j) { j.erase("height"); })), DataError);
  CHECK_THROWS_AS(import_json(mutate([](auto& j) { j["r1"].push_back({0, 99}); })), DataError);
  CHECK_THROWS_AS(import_json(mutate([](auto& j) { j["states"][1]["id"] = 9; })), DataError);
  CHECK_THROWS_AS(import_json(mutate([](auto& j) { j["states"][0]["primed"] = "no"; })), DataError);
}

TEST_CASE("run config: defaults, strict keys and round trip") {
  const RunConfig d = parse_config(nlohmann::json::object());
  CHECK(d.model_config.batch_size == 32);
  CHECK(d.model_config.learning_rate == doctest::Approx(1e-4));
  CHECK(d.model_config.embedding_dim == 128);
  CHECK(d.model_config.hidden_dim == 128);
  CHECK(d.max_len == 3);
  CHECK(d.sides == std::vector<Side>{Side::Both, Side::Forward, Side::Backward});
  CHECK(d.dev_fraction == doctest::Approx(0.1));

  const RunConfig c = parse_config({{"epochs", 2}, {"hidden_dim", 8}, {"sides", {"forward"}},
                                    {"max_len", 2}, {"mask_propagation", "output_only"}});
  CHECK(c.model_config.epochs == 2);
  CHECK(c.model_config.hidden_dim == 8);
  CHECK(c.model_config.mask_propagation == MaskPropagation::OutputOnly);
  CHECK(c.announce_options().sides == std::vector<Side>{Side::Forward});
  CHECK(c.announce_options().max_len == 2);
  CHECK(parse_config(nlohmann::json::parse(c.to_json().dump())).to_json() == c.to_json());

  CHECK_THROWS_AS(parse_config({{"colour", 1}}), DataError);
  CHECK_THROWS_AS(parse_config({{"epochs", "many"}}), DataError);
  CHECK_THROWS_AS(parse_config({{"max_len", 0}}), DataError);
  CHECK_THROWS_AS(parse_config({{"sides", nlohmann::json::array()}}), DataError);
  CHECK_THROWS_AS(parse_config({{"sides", {"up"}}}), DataError);
  CHECK_THROWS_AS(parse_config({{"dev_fraction", 1.0}}), DataError);
  CHECK_THROWS_AS(parse_config({{"learning_rate", -1.0}}), DataError);
  CHECK_THROWS_AS(parse_config(nlohmann::json::array()), DataError);
}
