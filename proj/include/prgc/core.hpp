#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "prgc/errors.hpp"

namespace prgc {

/// Tokenized input text with stable, dense, 0-based token indices.
struct Sentence {
  std::string id;
  std::vector<std::string> tokens;

  Sentence() = default;
  Sentence(std::string id_, std::vector<std::string> tokens_)
      : id(std::move(id_)), tokens(std::move(tokens_)) {
    if (tokens.empty()) throw LengthMismatch("Sentence: needs at least one token");
  }

  int length() const { return static_cast<int>(tokens.size()); }
};

/// Inclusive token span [start, end].
struct EntitySpan {
  int start = 0;
  int end = 0;

  EntitySpan() = default;
  EntitySpan(int s, int e) : start(s), end(e) {}

  int length() const { return end - start + 1; }
  bool valid(int n) const { return 0 <= start && start <= end && end < n; }
  bool overlaps(const EntitySpan& o) const { return start <= o.end && o.start <= end; }
  bool contains(int tok) const { return start <= tok && tok <= end; }

  friend bool operator==(const EntitySpan& a, const EntitySpan& b) {
    return a.start == b.start && a.end == b.end;
  }
  friend auto operator<=>(const EntitySpan& a, const EntitySpan& b) = default;
};

/// Ordered relation vocabulary; ids are 0..size()-1 in name order.
class RelationSet {
public:
  RelationSet() = default;
  explicit RelationSet(std::vector<std::string> names) : names_(std::move(names)) {
    std::set<std::string> seen;
    for (const auto& n : names_)
      if (!seen.insert(n).second)
        throw ParseError("RelationSet: duplicate relation name '" + n + "'");
  }

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }

  /// Id for a name, or -1 when unknown.
  int id_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
      if (names_[i] == name) return i;
    return -1;
  }

private:
  std::vector<std::string> names_;
};

struct Triple {
  EntitySpan subject;
  int relation = 0;
  EntitySpan object;

  Triple() = default;
  Triple(EntitySpan s, int r, EntitySpan o) : subject(s), relation(r), object(o) {}

  friend bool operator==(const Triple& a, const Triple& b) = default;
  friend auto operator<=>(const Triple& a, const Triple& b) = default;
};

struct AnnotatedSentence {
  Sentence sentence;
  std::vector<Triple> triples; // distinct, kept sorted

  AnnotatedSentence() = default;
  AnnotatedSentence(Sentence s, std::vector<Triple> ts)
      : sentence(std::move(s)), triples(std::move(ts)) {
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
  }
};

enum class Tag : std::uint8_t { B = 0, I = 1, O = 2 };

/// Per-token BIO tags; length always equals the sentence length.
using TagSeq = std::vector<Tag>;

/// How to treat an I tag with no open run before it when decoding.
enum class BioMode {
  Strict,  // stray I is dropped
  Lenient, // stray I opens a new entity
};

/// Mark each span's start B and interior I, everything else O.
/// Spans must not share tokens (two same-role entities on one relation that
/// overlap cannot be expressed in BIO).
inline TagSeq bio_encode(const std::vector<EntitySpan>& spans, int n) {
  TagSeq tags(static_cast<std::size_t>(n), Tag::O);
  std::vector<EntitySpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const EntitySpan& sp = sorted[k];
    if (!sp.valid(n))
      throw OverlappingSpans("bio_encode: span [" + std::to_string(sp.start) + "," +
                             std::to_string(sp.end) + "] outside sentence of length " +
                             std::to_string(n));
    if (k > 0 && sorted[k - 1].end >= sp.start)
      throw OverlappingSpans("bio_encode: spans [" + std::to_string(sorted[k - 1].start) +
                             "," + std::to_string(sorted[k - 1].end) + "] and [" +
                             std::to_string(sp.start) + "," + std::to_string(sp.end) +
                             "] share tokens");
    tags[sp.start] = Tag::B;
    for (int i = sp.start + 1; i <= sp.end; ++i) tags[i] = Tag::I;
  }
  return tags;
}

/// Maximal "B I*" runs become spans; output is sorted by start and
/// non-overlapping by construction.
inline std::vector<EntitySpan> bio_decode(const TagSeq& tags, BioMode mode = BioMode::Strict) {
  std::vector<EntitySpan> spans;
  int open = -1;
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    switch (tags[i]) {
      case Tag::B:
        if (open >= 0) spans.emplace_back(open, i - 1);
        open = i;
        break;
      case Tag::I:
        if (open < 0 && mode == BioMode::Lenient) open = i;
        // strict mode ignores an I with no open run
        break;
      case Tag::O:
        if (open >= 0) spans.emplace_back(open, i - 1);
        open = -1;
        break;
    }
  }
  if (open >= 0) spans.emplace_back(open, static_cast<int>(tags.size()) - 1);
  return spans;
}

} // namespace prgc
