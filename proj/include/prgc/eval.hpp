#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "prgc/data.hpp"
#include "prgc/infer.hpp"

namespace prgc {

/// Micro-averaged counts with the usual conventions: 0/0 ratios are 0, so an
/// abstaining system earns no credit.
struct ScoreReport {
  long tp = 0, fp = 0, fn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
  double f1() const {
    double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }

  ScoreReport& operator+=(const ScoreReport& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

/// Entity surface under the matching mode: the last token, or the whole span
/// joined with spaces.
inline std::string surface(const Sentence& s, const EntitySpan& sp, SpanMode mode) {
  if (mode == SpanMode::LastWord) return s.tokens.at(sp.end);
  std::string out;
  for (int i = sp.start; i <= sp.end; ++i) {
    if (i > sp.start) out += ' ';
    out += s.tokens.at(i);
  }
  return out;
}

/// A triple reduced to what exact-match scoring compares: relation name plus
/// both entity surfaces under the mode. Names rather than ids, so predictions
/// stay comparable across runs whose relation vocabularies were scanned in a
/// different order.
using TripleKey = std::tuple<std::string, std::string, std::string>;

inline std::set<TripleKey> triple_keys(const Sentence& s, const std::vector<Triple>& triples,
                                       SpanMode mode, const RelationSet& relations) {
  std::set<TripleKey> keys;
  for (const Triple& t : triples)
    keys.insert({relations.name(t.relation), surface(s, t.subject, mode),
                 surface(s, t.object, mode)});
  return keys;
}

/// Count one aligned pair of key sets into a report.
template <class T>
inline void count_sets(const std::set<T>& pred, const std::set<T>& gold, ScoreReport& r) {
  for (const T& k : pred)
    gold.count(k) ? ++r.tp : ++r.fp;
  for (const T& k : gold)
    if (!pred.count(k)) ++r.fn;
}

/// Micro P/R/F1 over aligned per-sentence triple sets. A predicted triple is
/// correct only on exact match: same relation and both entity surfaces equal
/// under the mode. Duplicates count once (these are sets).
inline ScoreReport score_triples(const std::vector<std::set<TripleKey>>& pred,
                                 const std::vector<std::set<TripleKey>>& gold) {
  if (pred.size() != gold.size())
    throw IdMismatch("score_triples: " + std::to_string(pred.size()) + " prediction sets vs " +
                     std::to_string(gold.size()) + " gold sets");
  ScoreReport r;
  for (std::size_t i = 0; i < pred.size(); ++i) count_sets(pred[i], gold[i], r);
  return r;
}

/// Subtask evaluation ---------------------------------------------------------

enum class Role { Subject, Object };

/// Intermediate outputs of one sentence, reduced for subtask scoring.
struct SubtaskView {
  std::set<std::string> relations;                      // relation names
  std::set<std::pair<std::string, Role>> entities;      // surface + role
  std::set<std::pair<std::string, std::string>> pairs;  // subject/object surfaces
};

inline SubtaskView subtask_view_gold(const AnnotatedSentence& ann, SpanMode mode,
                                     const RelationSet& relations) {
  SubtaskView v;
  for (const Triple& t : ann.triples) {
    v.relations.insert(relations.name(t.relation));
    v.entities.insert({surface(ann.sentence, t.subject, mode), Role::Subject});
    v.entities.insert({surface(ann.sentence, t.object, mode), Role::Object});
    v.pairs.insert({surface(ann.sentence, t.subject, mode), surface(ann.sentence, t.object, mode)});
  }
  return v;
}

inline SubtaskView subtask_view_pred(const SentencePrediction& pred, const Sentence& s,
                                     SpanMode mode, const RelationSet& relations) {
  SubtaskView v;
  for (int rel : pred.relations) v.relations.insert(relations.name(rel));
  for (const auto& [rel, spans] : pred.entities) {
    for (const EntitySpan& sp : spans.first) v.entities.insert({surface(s, sp, mode), Role::Subject});
    for (const EntitySpan& sp : spans.second) v.entities.insert({surface(s, sp, mode), Role::Object});
  }
  for (const auto& [sub, obj] : pred.pairs)
    v.pairs.insert({surface(s, sub, mode), surface(s, obj, mode)});
  return v;
}

struct SubtaskReports {
  ScoreReport relation;  // predicted relation subset vs gold relation set
  ScoreReport entity;    // NER over (surface, role), pooled across relations
  ScoreReport alignment; // entity pairs of the final triples, relation ignored
};

inline SubtaskReports score_subtasks(const std::vector<SubtaskView>& pred,
                                     const std::vector<SubtaskView>& gold) {
  if (pred.size() != gold.size())
    throw IdMismatch("score_subtasks: prediction and gold counts differ");
  SubtaskReports r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    count_sets(pred[i].relations, gold[i].relations, r.relation);
    count_sets(pred[i].entities, gold[i].entities, r.entity);
    count_sets(pred[i].pairs, gold[i].pairs, r.alignment);
  }
  return r;
}

/// Breakdown by overlap pattern and by triple count ---------------------------

struct BreakdownReport {
  std::map<PatternLabel, ScoreReport> by_pattern;
  std::map<int, ScoreReport> by_count; // keys 1..5; 5 means >= 5
};

/// A sentence's triples are scored inside every pattern bucket the sentence
/// belongs to (patterns co-occur), and in the bucket of its gold triple count.
inline BreakdownReport breakdown(const std::vector<std::set<TripleKey>>& pred,
                                 const std::vector<std::set<TripleKey>>& gold,
                                 const std::vector<AnnotatedSentence>& dataset,
                                 bool cross_triple_soo = false) {
  if (pred.size() != gold.size() || pred.size() != dataset.size())
    throw IdMismatch("breakdown: inputs not aligned");
  BreakdownReport out;
  for (PatternLabel p : {PatternLabel::Normal, PatternLabel::SEO, PatternLabel::EPO,
                         PatternLabel::SOO})
    out.by_pattern[p] = ScoreReport{};
  for (int b = 1; b <= 5; ++b) out.by_count[b] = ScoreReport{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ScoreReport r;
    count_sets(pred[i], gold[i], r);
    for (PatternLabel p : classify_pattern(dataset[i], cross_triple_soo))
      out.by_pattern[p] += r;
    int n = static_cast<int>(dataset[i].triples.size());
    if (n >= 1) out.by_count[std::min(n, 5)] += r;
  }
  return out;
}

/// Trainable decoder parameter count under this artifact's shapes:
/// relation classifier + relation embeddings + taggers + correspondence.
inline long long decoder_param_count(int d, int n_r, TaggingMode mode) {
  long long dd = d, nr = n_r;
  long long taggers = mode == TaggingMode::Dual ? 2 * (3 * dd + 3) : (5 * dd + 5);
  return (dd * nr + nr) + (dd * nr) + taggers + (2 * dd + 1);
}

/// Report formatting -----------------------------------------------------------

inline std::string score_to_text(const std::string& label, const ScoreReport& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << label;
  for (std::size_t i = label.size(); i < 12; ++i) os << ' ';
  os << " P=" << r.precision() << " R=" << r.recall() << " F1=" << r.f1()
     << "  (tp=" << r.tp << " fp=" << r.fp << " fn=" << r.fn << ")";
  return os.str();
}

inline nlohmann::json score_to_json(const ScoreReport& r) {
  return nlohmann::json{{"precision", r.precision()}, {"recall", r.recall()},
                        {"f1", r.f1()},               {"tp", r.tp},
                        {"fp", r.fp},                 {"fn", r.fn}};
}

} // namespace prgc
