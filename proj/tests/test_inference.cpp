#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "prgc/infer.hpp"
#include "prgc/labeling.hpp"

using namespace prgc;

namespace {

struct MicroInstance {
  Model model;
  Sentence sentence;
};

MicroInstance random_instance(std::uint64_t seed, int max_n = 12, int max_nr = 6,
                              int max_d = 8, TaggingMode mode = TaggingMode::Dual) {
  Rng rng(seed);
  int n = rng.uniform_int(1, max_n);
  int n_r = rng.uniform_int(1, max_nr);
  int d = rng.uniform_int(2, max_d);

  Vocab vocab;
  for (int i = 0; i < 12; ++i) vocab.add("tok" + std::to_string(i));
  EncoderConfig cfg;
  cfg.d = d;
  cfg.layers = rng.uniform_int(0, 2);
  cfg.max_len = max_n;
  std::vector<std::string> names;
  for (int k = 0; k < n_r; ++k) names.push_back("r" + std::to_string(k));

  MicroInstance inst{Model(cfg, vocab, RelationSet(names), mode, rng), Sentence()};
  std::vector<std::string> toks;
  for (int i = 0; i < n; ++i) toks.push_back("tok" + std::to_string(rng.uniform_int(0, 11)));
  inst.sentence = Sentence("s", toks);

  // spread decoder outputs away from saturation so decisions vary
  for (ParamRef& p : inst.model.decoder.parameters())
    for (std::size_t i = 0; i < p.tensor->size(); ++i)
      p.tensor->at(i) = rng.uniform(-1.5, 1.5);
  return inst;
}

} // namespace

TEST_CASE("extract_triples equals the brute-force oracle on random micro-instances") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    TaggingMode mode = seed % 3 == 0 ? TaggingMode::Single : TaggingMode::Dual;
    MicroInstance inst = random_instance(1000 + seed, 12, 6, 8, mode);
    double l1 = 0.3 + 0.4 * ((seed * 7) % 10) / 10.0;
    double l2 = 0.3 + 0.4 * ((seed * 13) % 10) / 10.0;
    std::vector<Triple> fast = extract_triples(inst.model, inst.sentence, l1, l2);
    std::vector<Triple> slow = extract_triples_bruteforce(inst.model, inst.sentence, l1, l2);
    REQUIRE(fast == slow);
  }
}

TEST_CASE("no relations above lambda1 means no triples") {
  MicroInstance inst = random_instance(77);
  std::vector<Triple> out = extract_triples(inst.model, inst.sentence, 0.999999, 0.5);
  CHECK(out.empty());
  CHECK(extract_triples_bruteforce(inst.model, inst.sentence, 0.999999, 0.5).empty());
}

TEST_CASE("raising lambda2 never adds a triple") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    MicroInstance inst = random_instance(2000 + seed);
    std::vector<Triple> prev;
    bool first = true;
    for (double l2 : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      std::vector<Triple> cur = extract_triples(inst.model, inst.sentence, 0.4, l2);
      if (!first) {
        for (const Triple& t : cur)
          CHECK(std::find(prev.begin(), prev.end(), t) != prev.end());
      }
      prev = cur;
      first = false;
    }
  }
}

TEST_CASE("raising lambda1 never adds a selected relation") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    MicroInstance inst = random_instance(3000 + seed);
    EncoderOutput h = inst.model.encoder.encode(inst.sentence);
    std::vector<double> p_rel = predict_relations(h, inst.model.decoder);
    std::vector<int> prev;
    bool first = true;
    for (double l1 : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      std::vector<int> cur = select_relations(p_rel, l1);
      if (!first)
        for (int k : cur) CHECK(std::find(prev.begin(), prev.end(), k) != prev.end());
      prev = cur;
      first = false;
    }
  }
}

TEST_CASE("argmax tag ties break toward O, then B, then I") {
  Matrix dist(3, 3);
  dist(0, 0) = dist(0, 1) = dist(0, 2) = 1.0 / 3; // full tie -> O
  dist(1, 0) = 0.4;
  dist(1, 1) = 0.4;
  dist(1, 2) = 0.2; // B vs I tie -> B
  dist(2, 0) = 0.4;
  dist(2, 1) = 0.2;
  dist(2, 2) = 0.4; // B vs O tie -> O
  CHECK(argmax_tag(dist, 0) == Tag::O);
  CHECK(argmax_tag(dist, 1) == Tag::B);
  CHECK(argmax_tag(dist, 2) == Tag::O);
}

TEST_CASE("decode_bundle deduplicates identical triples from multiple paths") {
  // two relations with identical tags and one marked pair produce one triple
  // per relation, and re-decoding the same relation twice cannot duplicate
  PredictionBundle b;
  b.p_rel = {1.0, 1.0};
  Matrix sub(3, 3), obj(3, 3);
  for (int i = 0; i < 3; ++i) sub(i, 2) = obj(i, 2) = 1.0;
  sub(0, 2) = 0;
  sub(0, 0) = 1.0;
  obj(2, 2) = 0;
  obj(2, 0) = 1.0;
  b.tag_dists[0] = {sub, obj};
  b.tag_dists[1] = {sub, obj};
  b.corr = Matrix(3, 3, 1.0);
  std::vector<Triple> out = decode_bundle(b, ExtractOptions{});
  CHECK(out.size() == 2); // one per relation, none repeated
}

TEST_CASE("selected relation with empty tag decode yields no triples, counted") {
  PredictionBundle b;
  b.p_rel = {0.9};
  Matrix all_o(2, 3);
  for (int i = 0; i < 2; ++i) all_o(i, 2) = 1.0;
  b.tag_dists[0] = {all_o, all_o};
  b.corr = Matrix(2, 2, 1.0);
  SentencePrediction detail;
  std::vector<Triple> out = decode_bundle(b, ExtractOptions{}, &detail);
  CHECK(out.empty());
  CHECK(detail.relations_without_pairs == 1);
}

TEST_CASE("missing tag distributions for a selected relation raise MissingRelation") {
  PredictionBundle b;
  b.p_rel = {0.9, 0.9};
  Matrix all_o(2, 3);
  for (int i = 0; i < 2; ++i) all_o(i, 2) = 1.0;
  b.tag_dists[0] = {all_o, all_o};
  b.corr = Matrix(2, 2, 0.0);
  CHECK_THROWS_AS(decode_bundle(b, ExtractOptions{}), MissingRelation);
}

TEST_CASE("every output triple comes from BIO-decoded spans") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    MicroInstance inst = random_instance(4000 + seed);
    EncoderOutput h = inst.model.encoder.encode(inst.sentence);
    std::vector<Triple> out = extract_triples(inst.model, inst.sentence, 0.3, 0.3);
    for (const Triple& t : out) {
      auto [sub, obj] = tag_sequences(h, t.relation, inst.model.decoder);
      std::vector<EntitySpan> subs = bio_decode(argmax_tags(sub));
      std::vector<EntitySpan> objs = bio_decode(argmax_tags(obj));
      CHECK(std::find(subs.begin(), subs.end(), t.subject) != subs.end());
      CHECK(std::find(objs.begin(), objs.end(), t.object) != objs.end());
    }
  }
}

TEST_CASE("nearest-neighbor pairing pairs each subject with the closest object") {
  PredictionBundle b;
  b.p_rel = {1.0};
  // subjects at 0 and 4; objects at 2 and 6
  Matrix sub(8, 3), obj(8, 3);
  for (int i = 0; i < 8; ++i) sub(i, 2) = obj(i, 2) = 1.0;
  sub(0, 2) = sub(4, 2) = 0;
  sub(0, 0) = sub(4, 0) = 1.0;
  obj(2, 2) = obj(6, 2) = 0;
  obj(2, 0) = obj(6, 0) = 1.0;
  b.tag_dists[0] = {sub, obj};
  b.corr = Matrix(8, 8, 0.0); // corr would keep nothing
  ExtractOptions opt;
  opt.pairing = PairingScheme::NearestNeighbor;
  std::vector<Triple> out = decode_bundle(b, opt);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == Triple({0, 0}, 0, {2, 2}));
  CHECK(out[1] == Triple({4, 4}, 0, {6, 6}));
}

TEST_CASE("disabling the relation filter tags every relation") {
  MicroInstance inst = random_instance(5000);
  ExtractOptions opt;
  opt.relation_filter = false;
  SentencePrediction pred =
      extract_detailed(inst.model.encoder, inst.model.decoder, inst.sentence, opt);
  CHECK(static_cast<int>(pred.relations.size()) == inst.model.decoder.n_r);
}

TEST_CASE("gold-probability bundles decode through the same path") {
  Sentence s("g", {"a", "b", "c", "d", "e"});
  AnnotatedSentence ann(s, {Triple({0, 1}, 2, {3, 3})});
  GoldLabels gold = build_gold(ann, 4);
  PredictionBundle bundle = bundle_from_gold(gold);
  CHECK(decode_bundle(bundle, ExtractOptions{}) == ann.triples);
}
