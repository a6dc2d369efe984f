#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "prgc/core.hpp"
#include "prgc/decoder.hpp"

namespace prgc {

/// Supervision targets for one sentence, mirroring the decoder's outputs.
struct GoldLabels {
  std::vector<int> rel_vector;                         // n_r, 0/1
  std::map<int, std::pair<TagSeq, TagSeq>> tag_targets; // gold rel -> (subject, object)
  Matrix corr;                                         // n x n, 0/1

  int n_r() const { return static_cast<int>(rel_vector.size()); }
};

/// Build gold targets by inverting the decoder's output semantics: per gold
/// relation, BIO tags over its distinct subject and object spans; the
/// correspondence matrix marks every (subject start, object start) of every
/// gold triple, with no relation attached.
///
/// Throws OverlappingSpans when two same-role entities of one relation share
/// tokens (BIO cannot express that); callers skip such sentences.
/// In Single mode a triple whose subject overlaps its object is refused:
/// one 5-class sequence cannot carry both roles on one token.
inline GoldLabels build_gold(const AnnotatedSentence& ann, int n_r,
                             TaggingMode mode = TaggingMode::Dual) {
  int n = ann.sentence.length();
  GoldLabels gold;
  gold.rel_vector.assign(static_cast<std::size_t>(n_r), 0);
  gold.corr = Matrix(n, n);

  std::map<int, std::pair<std::vector<EntitySpan>, std::vector<EntitySpan>>> spans_by_rel;
  for (const Triple& tr : ann.triples) {
    if (tr.relation < 0 || tr.relation >= n_r)
      throw DimensionMismatch("build_gold: relation id " + std::to_string(tr.relation) +
                              " out of range for n_r=" + std::to_string(n_r));
    if (!tr.subject.valid(n) || !tr.object.valid(n))
      throw OverlappingSpans("build_gold: triple span outside sentence '" +
                             ann.sentence.id + "'");
    if (mode == TaggingMode::Single && tr.subject.overlaps(tr.object))
      throw SooUnsupported("build_gold: sentence '" + ann.sentence.id +
                           "' has a subject overlapping its object; single-sequence "
                           "tagging cannot represent it");
    gold.rel_vector[tr.relation] = 1;
    spans_by_rel[tr.relation].first.push_back(tr.subject);
    spans_by_rel[tr.relation].second.push_back(tr.object);
    gold.corr(tr.subject.start, tr.object.start) = 1.0;
  }

  for (auto& [rel, spans] : spans_by_rel) {
    gold.tag_targets[rel] = {bio_encode(spans.first, n), bio_encode(spans.second, n)};
  }
  return gold;
}

/// True when some relation k has a subject s and object o it never pairs,
/// whose (start(s), start(o)) cell is nevertheless set in the correspondence
/// matrix (necessarily by another relation's triple). Decoding hard gold
/// probabilities is exact on a sentence iff this predicate is false.
inline bool has_interference(const AnnotatedSentence& ann, const GoldLabels& gold) {
  std::map<int, std::set<EntitySpan>> subs, objs;
  std::set<std::pair<int, std::pair<EntitySpan, EntitySpan>>> paired;
  for (const Triple& tr : ann.triples) {
    subs[tr.relation].insert(tr.subject);
    objs[tr.relation].insert(tr.object);
    paired.insert({tr.relation, {tr.subject, tr.object}});
  }
  for (const auto& [rel, ss] : subs) {
    for (const EntitySpan& s : ss)
      for (const EntitySpan& o : objs.at(rel)) {
        if (paired.count({rel, {s, o}})) continue;
        if (gold.corr(s.start, o.start) > 0.5) return true;
      }
  }
  return false;
}

/// Gold labels as hard probabilities (exactly 1.0 / 0.0), in the decoder's
/// output shape. Tag rows are one-hot; only gold relations carry tag matrices.
inline PredictionBundle bundle_from_gold(const GoldLabels& gold) {
  PredictionBundle b;
  b.p_rel.assign(gold.rel_vector.begin(), gold.rel_vector.end());
  b.corr = gold.corr;
  for (const auto& [rel, tags] : gold.tag_targets) {
    int n = static_cast<int>(tags.first.size());
    Matrix sub(n, 3), obj(n, 3);
    for (int i = 0; i < n; ++i) {
      sub(i, static_cast<int>(tags.first[i])) = 1.0;
      obj(i, static_cast<int>(tags.second[i])) = 1.0;
    }
    b.tag_dists[rel] = {std::move(sub), std::move(obj)};
  }
  return b;
}

} // namespace prgc
