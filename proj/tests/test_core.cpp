#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "prgc/core.hpp"
#include "prgc/matrix.hpp"

using namespace prgc;

namespace {

TagSeq tags_of(const std::string& s) {
  TagSeq out;
  for (char c : s) out.push_back(c == 'B' ? Tag::B : c == 'I' ? Tag::I : Tag::O);
  return out;
}

// random non-overlapping span set over n tokens
std::vector<EntitySpan> random_spans(int n, Rng& rng) {
  std::vector<EntitySpan> spans;
  int i = 0;
  while (i < n) {
    if (rng.uniform() < 0.4) {
      int len = std::min(n - i, rng.uniform_int(1, 3));
      spans.emplace_back(i, i + len - 1);
      i += len + 1; // at least one gap token keeps B boundaries unambiguous
    } else {
      ++i;
    }
  }
  return spans;
}

} // namespace

TEST_CASE("bio_encode basic examples") {
  CHECK(bio_encode({}, 3) == tags_of("OOO"));
  CHECK(bio_encode({{0, 1}, {3, 3}}, 4) == tags_of("BIOB"));
  CHECK(bio_encode({{2, 2}}, 3) == tags_of("OOB"));
}

TEST_CASE("bio_encode rejects overlap and bad spans") {
  CHECK_THROWS_AS(bio_encode({{0, 2}, {2, 3}}, 5), OverlappingSpans);
  CHECK_THROWS_AS(bio_encode({{0, 1}, {0, 0}}, 5), OverlappingSpans); // same start
  CHECK_THROWS_AS(bio_encode({{1, 3}}, 3), OverlappingSpans);         // outside sentence
  CHECK_NOTHROW(bio_encode({{0, 1}, {0, 1}}, 3));                     // duplicates collapse
}

TEST_CASE("bio_decode basic examples") {
  CHECK(bio_decode(tags_of("OOO")).empty());
  CHECK(bio_decode(tags_of("BIOB")) == std::vector<EntitySpan>{{0, 1}, {3, 3}});
  // stray leading I dropped in strict mode
  CHECK(bio_decode(tags_of("IOBII")) == std::vector<EntitySpan>{{2, 4}});
}

TEST_CASE("bio_decode lenient mode opens entities at stray I") {
  CHECK(bio_decode(tags_of("IOBII"), BioMode::Lenient) ==
        std::vector<EntitySpan>{{0, 0}, {2, 4}});
  CHECK(bio_decode(tags_of("OII"), BioMode::Lenient) == std::vector<EntitySpan>{{1, 2}});
}

TEST_CASE("bio_decode handles adjacent B runs") {
  CHECK(bio_decode(tags_of("BB")) == std::vector<EntitySpan>{{0, 0}, {1, 1}});
  CHECK(bio_decode(tags_of("BIB")) == std::vector<EntitySpan>{{0, 1}, {2, 2}});
  CHECK(bio_decode(tags_of("B")) == std::vector<EntitySpan>{{0, 0}});
}

TEST_CASE("round trip: decode(encode(spans)) recovers the span set") {
  Rng rng(42);
  for (int iter = 0; iter < 500; ++iter) {
    int n = rng.uniform_int(1, 20);
    std::vector<EntitySpan> spans = random_spans(n, rng);
    std::vector<EntitySpan> back = bio_decode(bio_encode(spans, n));
    std::sort(spans.begin(), spans.end());
    CHECK(back == spans);
  }
}

TEST_CASE("decoded spans are sorted and non-overlapping") {
  Rng rng(43);
  for (int iter = 0; iter < 500; ++iter) {
    int n = rng.uniform_int(1, 15);
    TagSeq tags(static_cast<std::size_t>(n));
    for (auto& t : tags) t = static_cast<Tag>(rng.uniform_int(0, 2));
    std::vector<EntitySpan> spans = bio_decode(tags);
    for (std::size_t i = 1; i < spans.size(); ++i) {
      CHECK(spans[i - 1].start < spans[i].start);
      CHECK(!spans[i - 1].overlaps(spans[i]));
    }
    for (const EntitySpan& s : spans) CHECK(s.valid(n));
  }
}

TEST_CASE("encode rejects exactly the overlapping inputs") {
  Rng rng(44);
  for (int iter = 0; iter < 300; ++iter) {
    int n = rng.uniform_int(2, 12);
    std::vector<EntitySpan> spans;
    int k = rng.uniform_int(1, 3);
    for (int i = 0; i < k; ++i) {
      int s = rng.uniform_int(0, n - 1);
      spans.emplace_back(s, std::min(n - 1, s + rng.uniform_int(0, 2)));
    }
    std::sort(spans.begin(), spans.end());
    std::vector<EntitySpan> uniq = spans;
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    bool overlap = false;
    for (std::size_t i = 1; i < uniq.size(); ++i)
      overlap = overlap || uniq[i - 1].end >= uniq[i].start;
    if (overlap)
      CHECK_THROWS_AS(bio_encode(spans, n), OverlappingSpans);
    else
      CHECK_NOTHROW(bio_encode(spans, n));
  }
}

TEST_CASE("sentence requires at least one token") {
  CHECK_THROWS_AS(Sentence("x", {}), LengthMismatch);
  CHECK(Sentence("x", {"a", "b"}).length() == 2);
}

TEST_CASE("annotated sentence deduplicates triples") {
  Sentence s("x", {"a", "b", "c"});
  Triple t({0, 0}, 0, {2, 2});
  AnnotatedSentence ann(s, {t, t, Triple({0, 0}, 1, {2, 2})});
  CHECK(ann.triples.size() == 2);
}

TEST_CASE("relation set enforces unique names") {
  RelationSet rs({"a", "b", "c"});
  CHECK(rs.size() == 3);
  CHECK(rs.id_of("b") == 1);
  CHECK(rs.id_of("zzz") == -1);
  CHECK_THROWS_AS(RelationSet({"a", "a"}), ParseError);
}
