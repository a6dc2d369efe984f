#include <catch2/catch_amalgamated.hpp>

#include "prgc/data.hpp"
#include "prgc/infer.hpp"
#include "prgc/labeling.hpp"

using namespace prgc;

namespace {

Sentence sent(int n) {
  std::vector<std::string> toks;
  for (int i = 0; i < n; ++i) toks.push_back("t" + std::to_string(i));
  return Sentence("s", toks);
}

} // namespace

TEST_CASE("build_gold on a single triple") {
  AnnotatedSentence ann(sent(5), {Triple({0, 1}, 2, {3, 3})});
  GoldLabels gold = build_gold(ann, 4);

  CHECK(gold.rel_vector == std::vector<int>{0, 0, 1, 0});
  REQUIRE(gold.tag_targets.count(2) == 1);
  const auto& [sub, obj] = gold.tag_targets.at(2);
  CHECK(sub == TagSeq{Tag::B, Tag::I, Tag::O, Tag::O, Tag::O});
  CHECK(obj == TagSeq{Tag::O, Tag::O, Tag::O, Tag::B, Tag::O});
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(gold.corr(i, j) == (i == 0 && j == 3 ? 1.0 : 0.0));

  // round trip through hard probabilities
  std::vector<Triple> back = decode_bundle(bundle_from_gold(gold), ExtractOptions{});
  CHECK(back == ann.triples);
}

TEST_CASE("build_gold with no triples is all zeros") {
  AnnotatedSentence ann(sent(3), {});
  GoldLabels gold = build_gold(ann, 2);
  CHECK(gold.rel_vector == std::vector<int>{0, 0});
  CHECK(gold.tag_targets.empty());
  for (std::size_t i = 0; i < gold.corr.size(); ++i) CHECK(gold.corr.at(i) == 0.0);
}

TEST_CASE("EPO pair: identical tags under both relations, one corr cell") {
  AnnotatedSentence ann(sent(6),
                        {Triple({0, 0}, 1, {4, 5}), Triple({0, 0}, 3, {4, 5})});
  GoldLabels gold = build_gold(ann, 4);
  CHECK(gold.rel_vector == std::vector<int>{0, 1, 0, 1});
  CHECK(gold.tag_targets.at(1) == gold.tag_targets.at(3));
  double popcount = 0;
  for (std::size_t i = 0; i < gold.corr.size(); ++i) popcount += gold.corr.at(i);
  CHECK(popcount == 1.0);
}

TEST_CASE("corr popcount never exceeds the triple count") {
  SynthConfig cfg;
  cfg.seed = 99;
  cfg.normal = 30;
  cfg.seo = 30;
  cfg.epo = 30;
  cfg.soo = 30;
  SynthResult synth = gen_synthetic(cfg);
  for (const auto& ann : synth.sentences) {
    GoldLabels gold = build_gold(ann, synth.relations.size());
    double popcount = 0;
    for (std::size_t i = 0; i < gold.corr.size(); ++i) popcount += gold.corr.at(i);
    CHECK(popcount <= static_cast<double>(ann.triples.size()));
    // equality iff no two triples share both start positions
    std::set<std::pair<int, int>> starts;
    for (const Triple& t : ann.triples) starts.insert({t.subject.start, t.object.start});
    CHECK((popcount == static_cast<double>(starts.size())));
  }
}

TEST_CASE("same-role overlapping entities within one relation are rejected") {
  AnnotatedSentence ann(sent(5),
                        {Triple({0, 1}, 0, {4, 4}), Triple({1, 2}, 0, {4, 4})});
  CHECK_THROWS_AS(build_gold(ann, 2), OverlappingSpans);
  // distinct relations are fine: separate tag sequences
  AnnotatedSentence ok(sent(5), {Triple({0, 1}, 0, {4, 4}), Triple({1, 2}, 1, {4, 4})});
  CHECK_NOTHROW(build_gold(ok, 2));
}

TEST_CASE("single mode refuses subject-object overlap, dual accepts it") {
  AnnotatedSentence soo(sent(5), {Triple({1, 1}, 0, {0, 2})});
  CHECK_NOTHROW(build_gold(soo, 2, TaggingMode::Dual));
  CHECK_THROWS_AS(build_gold(soo, 2, TaggingMode::Single), SooUnsupported);
}

TEST_CASE("interference detector and round-trip guarantees") {
  // interference: relation 0 has subjects {s1,s2} and objects {o1,o2}; the
  // unpaired (s1,o2) start cell is marked by relation 1's triple
  AnnotatedSentence interf(sent(8),
                           {Triple({0, 0}, 0, {2, 2}), Triple({4, 4}, 0, {6, 6}),
                            Triple({0, 0}, 1, {6, 6})});
  GoldLabels gold = build_gold(interf, 2);
  CHECK(has_interference(interf, gold));

  std::vector<Triple> decoded = decode_bundle(bundle_from_gold(gold), ExtractOptions{});
  // superset with exactly the documented spurious triple added
  std::set<Triple> got(decoded.begin(), decoded.end());
  for (const Triple& t : interf.triples) CHECK(got.count(t) == 1);
  CHECK(got.size() == 4);
  CHECK(got.count(Triple({0, 0}, 0, {6, 6})) == 1);

  // no interference without the cross-relation triple
  AnnotatedSentence clean(sent(8),
                          {Triple({0, 0}, 0, {2, 2}), Triple({4, 4}, 0, {6, 6})});
  GoldLabels gold2 = build_gold(clean, 2);
  CHECK_FALSE(has_interference(clean, gold2));
  std::vector<Triple> decoded2 = decode_bundle(bundle_from_gold(gold2), ExtractOptions{});
  CHECK(decoded2 == clean.triples);
}

TEST_CASE("round trip is a superset always, exact when interference-free") {
  SynthConfig cfg;
  cfg.seed = 123;
  cfg.normal = 40;
  cfg.seo = 40;
  cfg.epo = 40;
  cfg.soo = 40;
  SynthResult synth = gen_synthetic(cfg);
  int exact = 0;
  for (const auto& ann : synth.sentences) {
    GoldLabels gold = build_gold(ann, synth.relations.size());
    std::vector<Triple> decoded = decode_bundle(bundle_from_gold(gold), ExtractOptions{});
    std::set<Triple> got(decoded.begin(), decoded.end());
    for (const Triple& t : ann.triples) REQUIRE(got.count(t) == 1);
    if (!has_interference(ann, gold)) {
      REQUIRE(got.size() == ann.triples.size());
      ++exact;
    }
  }
  CHECK(exact == 160); // this generator never produces interference
}

TEST_CASE("thresholds anywhere in (0,1) reproduce the hard-gold decoding") {
  AnnotatedSentence ann(sent(6), {Triple({0, 1}, 0, {3, 4}), Triple({5, 5}, 2, {0, 1})});
  GoldLabels gold = build_gold(ann, 3);
  PredictionBundle bundle = bundle_from_gold(gold);
  for (double l1 : {0.01, 0.5, 0.99})
    for (double l2 : {0.01, 0.5, 0.99}) {
      ExtractOptions opt;
      opt.lambda1 = l1;
      opt.lambda2 = l2;
      CHECK(decode_bundle(bundle, opt) == ann.triples);
    }
}

TEST_CASE("build_gold validates relation ids and spans") {
  AnnotatedSentence bad_rel(sent(3), {Triple({0, 0}, 7, {2, 2})});
  CHECK_THROWS_AS(build_gold(bad_rel, 2), DimensionMismatch);
  AnnotatedSentence bad_span(sent(3), {Triple({0, 0}, 0, {2, 5})});
  CHECK_THROWS_AS(build_gold(bad_span, 2), OverlappingSpans);
}
