#pragma once

#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "prgc/core.hpp"
#include "prgc/decoder.hpp"
#include "prgc/matrix.hpp"

namespace prgc {

/// Which part of an entity a span (and a match at evaluation time) covers.
enum class SpanMode { LastWord, FullSpan };

inline std::string to_string(SpanMode m) {
  return m == SpanMode::LastWord ? "last_word" : "full_span";
}

inline SpanMode span_mode_from(const std::string& s) {
  if (s == "last_word") return SpanMode::LastWord;
  if (s == "full_span") return SpanMode::FullSpan;
  throw ConfigError("mode must be 'last_word' or 'full_span', got '" + s + "'");
}

/// One input record in the de-facto public format:
///   {"text": "...", "triple_list": [[subject, relation, object], ...]}
struct RawRecord {
  std::string text;
  std::vector<std::array<std::string, 3>> triple_list;
};

/// Whitespace split, then leading/trailing ASCII punctuation peeled off as
/// separate tokens ("Paris," -> "Paris" ","). Interior punctuation stays put,
/// so "D.C." becomes "D.C" "." and still matches an entity tokenized the same
/// way. Fixed on purpose: entity resolution and evaluation both rely on it.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string chunk;
  auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (is >> chunk) {
    std::size_t lo = 0, hi = chunk.size();
    while (hi - lo > 1 && is_punct(chunk[lo])) ++lo;
    while (hi - lo > 1 && is_punct(chunk[hi - 1])) --hi;
    for (std::size_t i = 0; i < lo; ++i) out.push_back(std::string(1, chunk[i]));
    out.push_back(chunk.substr(lo, hi - lo));
    for (std::size_t i = hi; i < chunk.size(); ++i) out.push_back(std::string(1, chunk[i]));
  }
  return out;
}

/// Leftmost exact token-subsequence match of `entity` in `tokens`, or nullopt.
inline std::optional<EntitySpan> resolve_entity(const std::vector<std::string>& tokens,
                                                const std::string& entity) {
  std::vector<std::string> needle = tokenize(entity);
  if (needle.empty() || needle.size() > tokens.size()) return std::nullopt;
  for (std::size_t i = 0; i + needle.size() <= tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < needle.size(); ++j)
      if (tokens[i + j] != needle[j]) {
        ok = false;
        break;
      }
    if (ok)
      return EntitySpan(static_cast<int>(i), static_cast<int>(i + needle.size() - 1));
  }
  return std::nullopt;
}

struct SkippedRecord {
  int index = 0;
  std::string reason;
};

struct LoadResult {
  std::vector<AnnotatedSentence> sentences;
  RelationSet relations;
  std::vector<SkippedRecord> skipped;
  int records_total = 0;
};

namespace detail {

inline RawRecord record_from_json(const nlohmann::json& j, int index) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
    throw ParseError("record " + std::to_string(index) + ": expected object with \"text\"");
  RawRecord rec;
  rec.text = j["text"].get<std::string>();
  if (j.contains("triple_list")) {
    for (const auto& t : j["triple_list"]) {
      if (!t.is_array() || t.size() != 3)
        throw ParseError("record " + std::to_string(index) +
                         ": triple_list entries must be [subject, relation, object]");
      rec.triple_list.push_back({t[0].get<std::string>(), t[1].get<std::string>(),
                                 t[2].get<std::string>()});
    }
  }
  return rec;
}

} // namespace detail

/// Parse a dataset file: either one JSON object per line or a single JSON
/// array of objects.
inline std::vector<RawRecord> read_raw_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  std::string first_char;
  char c;
  while (in.get(c)) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      first_char = c;
      break;
    }
  }
  in.clear();
  in.seekg(0);
  std::vector<RawRecord> records;
  try {
    if (first_char == "[") {
      nlohmann::json arr = nlohmann::json::parse(in);
      int idx = 0;
      for (const auto& j : arr) records.push_back(detail::record_from_json(j, idx++));
    } else {
      std::string line;
      int idx = 0;
      while (std::getline(in, line)) {
        bool blank = line.find_first_not_of(" \t\r\n") == std::string::npos;
        if (blank) continue;
        records.push_back(detail::record_from_json(nlohmann::json::parse(line), idx++));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed JSON in " + path + ": " + e.what());
  }
  return records;
}

/// Tokenize every record, resolve entity strings to token spans (leftmost
/// exact match) and build the relation vocabulary, either from a sidecar file
/// (one name per line, order = id) or by scanning records in order.
/// Records that cannot be used (empty text, unresolvable entity, unknown
/// relation against a sidecar vocabulary, sentence over max_len) are skipped
/// with a reason, never fatally. Sentence ids are "s<original record index>"
/// so skips do not shift alignment between prediction and gold files.
inline LoadResult load_dataset(const std::string& path, SpanMode annotation_mode,
                               const std::string& relation_vocab_path = "",
                               int max_len = 100, const RelationSet* fixed_relations = nullptr) {
  std::vector<RawRecord> records = read_raw_records(path);
  LoadResult out;
  out.records_total = static_cast<int>(records.size());

  std::vector<std::string> names;
  if (fixed_relations) {
    names = fixed_relations->names();
  } else if (!relation_vocab_path.empty()) {
    std::ifstream rin(relation_vocab_path);
    if (!rin) throw ParseError("cannot open relation vocabulary: " + relation_vocab_path);
    std::string line;
    while (std::getline(rin, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
      if (!line.empty()) names.push_back(line);
    }
  } else {
    std::set<std::string> seen;
    for (const auto& rec : records)
      for (const auto& t : rec.triple_list)
        if (seen.insert(t[1]).second) names.push_back(t[1]);
  }
  out.relations = RelationSet(names);

  for (int idx = 0; idx < static_cast<int>(records.size()); ++idx) {
    const RawRecord& rec = records[idx];
    std::vector<std::string> tokens = tokenize(rec.text);
    if (tokens.empty()) {
      out.skipped.push_back({idx, "empty text"});
      continue;
    }
    if (static_cast<int>(tokens.size()) > max_len) {
      out.skipped.push_back({idx, "sentence longer than max_len=" + std::to_string(max_len)});
      continue;
    }
    std::vector<Triple> triples;
    std::string skip_reason;
    for (const auto& t : rec.triple_list) {
      int rel = out.relations.id_of(t[1]);
      if (rel < 0) {
        skip_reason = "unknown relation '" + t[1] + "'";
        break;
      }
      auto subj = resolve_entity(tokens, t[0]);
      auto obj = resolve_entity(tokens, t[2]);
      if (!subj || !obj) {
        skip_reason = "unresolvable entity '" + (subj ? t[2] : t[0]) + "'";
        break;
      }
      EntitySpan s = *subj, o = *obj;
      if (annotation_mode == SpanMode::LastWord) {
        s = EntitySpan(s.end, s.end);
        o = EntitySpan(o.end, o.end);
      }
      triples.emplace_back(s, rel, o);
    }
    if (!skip_reason.empty()) {
      out.skipped.push_back({idx, skip_reason});
      continue;
    }
    out.sentences.emplace_back(Sentence("s" + std::to_string(idx), std::move(tokens)),
                               std::move(triples));
  }
  return out;
}

/// Overlapping-triple patterns ------------------------------------------------

enum class PatternLabel { Normal, SEO, EPO, SOO };

inline std::string to_string(PatternLabel p) {
  switch (p) {
    case PatternLabel::Normal: return "Normal";
    case PatternLabel::SEO: return "SEO";
    case PatternLabel::EPO: return "EPO";
    case PatternLabel::SOO: return "SOO";
  }
  return "?";
}

/// Classify a sentence's overlap patterns. Entity identity is the token span.
///   EPO: two distinct triples realize the same unordered entity pair.
///   SEO: two distinct triples share exactly one entity.
///   SOO: one triple's subject and object spans share tokens. With
///        cross_triple_soo, a subject overlapping another triple's object
///        also counts.
///   Normal: none of the above.
inline std::set<PatternLabel> classify_pattern(const AnnotatedSentence& ann,
                                               bool cross_triple_soo = false) {
  std::set<PatternLabel> labels;
  const auto& ts = ann.triples;
  for (std::size_t a = 0; a < ts.size(); ++a) {
    for (std::size_t b = a + 1; b < ts.size(); ++b) {
      std::set<EntitySpan> ea{ts[a].subject, ts[a].object};
      std::set<EntitySpan> eb{ts[b].subject, ts[b].object};
      int shared = 0;
      for (const auto& e : ea) shared += eb.count(e) ? 1 : 0;
      if (ea == eb)
        labels.insert(PatternLabel::EPO);
      else if (shared == 1)
        labels.insert(PatternLabel::SEO);
    }
  }
  for (const Triple& t : ts)
    if (t.subject.overlaps(t.object)) labels.insert(PatternLabel::SOO);
  if (cross_triple_soo) {
    for (const Triple& a : ts)
      for (const Triple& b : ts)
        if (a.subject.overlaps(b.object)) labels.insert(PatternLabel::SOO);
  }
  if (labels.empty()) labels.insert(PatternLabel::Normal);
  return labels;
}

/// Corpus statistics ----------------------------------------------------------

struct StatsReport {
  long sentences = 0;
  long normal = 0, seo = 0, epo = 0, soo = 0;
  long n1 = 0, n_multi = 0; // sentences with one triple vs more than one
  long triples = 0;
  long relations = 0;
};

inline StatsReport dataset_stats(const std::vector<AnnotatedSentence>& sentences,
                                 const RelationSet& relations,
                                 bool cross_triple_soo = false) {
  StatsReport r;
  r.sentences = static_cast<long>(sentences.size());
  r.relations = relations.size();
  for (const auto& ann : sentences) {
    auto labels = classify_pattern(ann, cross_triple_soo);
    if (labels.count(PatternLabel::Normal)) ++r.normal;
    if (labels.count(PatternLabel::SEO)) ++r.seo;
    if (labels.count(PatternLabel::EPO)) ++r.epo;
    if (labels.count(PatternLabel::SOO)) ++r.soo;
    long n = static_cast<long>(ann.triples.size());
    r.triples += n;
    if (n == 1)
      ++r.n1;
    else if (n > 1)
      ++r.n_multi;
  }
  return r;
}

inline std::string stats_to_text(const StatsReport& r) {
  std::ostringstream os;
  auto row = [&](const std::string& k, long v) {
    os << "  " << k;
    for (std::size_t i = k.size(); i < 10; ++i) os << ' ';
    os << v << "\n";
  };
  os << "sentences " << r.sentences << "\n";
  row("Normal", r.normal);
  row("SEO", r.seo);
  row("EPO", r.epo);
  row("SOO", r.soo);
  row("N=1", r.n1);
  row("N>1", r.n_multi);
  row("triples", r.triples);
  row("relations", r.relations);
  return os.str();
}

inline nlohmann::json stats_to_json(const StatsReport& r) {
  return nlohmann::json{{"sentences", r.sentences}, {"normal", r.normal},
                        {"seo", r.seo},             {"epo", r.epo},
                        {"soo", r.soo},             {"n1", r.n1},
                        {"n_multi", r.n_multi},     {"triples", r.triples},
                        {"relations", r.relations}};
}

/// Synthetic corpus generation -------------------------------------------------
///
/// Sentences are built from clause templates over three disjoint token pools:
/// entity tokens (e<i>), one verb token per relation (v<k>) and filler tokens
/// (w<i>). Every entity token is used at most once per sentence and each
/// relation appears in at most one clause, so entity strings resolve uniquely
/// on reload and gold labels never collide.
///
/// Clause shapes (entities 1-2 tokens unless noted):
///   Normal   S v_r O            one triple
///   SEO      A v_r1 B v_r2 C    chain: (A,r1,B), (B,r2,C) sharing exactly B
///   EPO      S v_r1 v_r2 O      (S,r1,O), (S,r2,O)
///   SOO      E1 E2 E3 v_r       object = the 3-token run, subject = E2
struct SynthConfig {
  std::uint64_t seed = 0;
  int n_r = 6;
  int entity_vocab = 40;
  int filler_vocab = 12;
  long normal = 0, seo = 0, epo = 0, soo = 0; // sentences per requested pattern
  int len_min = 8, len_max = 16;
  int triples_min = 1, triples_max = 3;
  int max_len = 100;
  TaggingMode tagging = TaggingMode::Dual;

  void validate() const {
    if (n_r < 2) throw InfeasibleConfig("gen_synthetic: need n_r >= 2");
    if (normal < 0 || seo < 0 || epo < 0 || soo < 0)
      throw InfeasibleConfig("gen_synthetic: pattern counts must be >= 0");
    if (soo > 0 && tagging == TaggingMode::Single)
      throw InfeasibleConfig(
          "gen_synthetic: SOO sentences requested under single-sequence tagging, which "
          "cannot represent a subject overlapping its object");
    if (triples_min < 1 || triples_max < triples_min)
      throw InfeasibleConfig("gen_synthetic: bad triples-per-sentence range");
    if ((seo > 0 || epo > 0) && triples_max < 2)
      throw InfeasibleConfig("gen_synthetic: SEO/EPO sentences carry two triples, "
                             "raise triples_max");
    if (len_min < 4 || len_max < len_min || len_max > max_len)
      throw InfeasibleConfig("gen_synthetic: sentence-length range must fit in [4, max_len]");
    if (len_max < 8)
      throw InfeasibleConfig("gen_synthetic: len_max must be at least 8");
    if (entity_vocab < 16 || filler_vocab < 2)
      throw InfeasibleConfig("gen_synthetic: vocabularies too small");
  }
};

struct SynthResult {
  std::vector<AnnotatedSentence> sentences;
  RelationSet relations;
};

namespace detail {

/// Hands out fresh entity tokens, distinct within one sentence.
class EntityPool {
public:
  EntityPool(int vocab, Rng& rng) {
    ids_.resize(static_cast<std::size_t>(vocab));
    for (int i = 0; i < vocab; ++i) ids_[i] = static_cast<std::size_t>(i);
    rng.shuffle(ids_);
  }
  std::vector<std::string> take(int count) {
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) {
      if (next_ >= ids_.size()) throw InfeasibleConfig("gen_synthetic: entity vocab exhausted");
      out.push_back("e" + std::to_string(ids_[next_++]));
    }
    return out;
  }

private:
  std::vector<std::size_t> ids_;
  std::size_t next_ = 0;
};

enum class ClauseKind { Normal, Seo, Epo, Soo };

struct ClauseSpec {
  ClauseKind kind;
  std::vector<int> rels;          // 1 or 2 relation ids
  std::vector<int> entity_sizes;  // per entity, in clause order
  int token_count() const {
    int n = static_cast<int>(rels.size()); // one verb per relation
    for (int s : entity_sizes) n += s;
    return n;
  }
};

} // namespace detail

inline SynthResult gen_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  std::vector<std::string> rel_names;
  for (int k = 0; k < cfg.n_r; ++k) rel_names.push_back("rel" + std::to_string(k));
  RelationSet relations(rel_names);

  auto verb = [](int rel) { return "v" + std::to_string(rel); };
  auto filler = [&]() { return "w" + std::to_string(rng.uniform_int(0, cfg.filler_vocab - 1)); };
  auto esize = [&]() { return rng.uniform() < 0.5 ? 2 : 1; };

  auto build_sentence = [&](PatternLabel pattern) {
    std::vector<int> rel_order(static_cast<std::size_t>(cfg.n_r));
    for (int k = 0; k < cfg.n_r; ++k) rel_order[k] = k;
    rng.shuffle(rel_order);
    std::size_t next_rel = 0;
    auto fresh_rel = [&]() { return rel_order[next_rel++]; };

    // plan clauses
    std::vector<detail::ClauseSpec> specs;
    int base_triples = 0;
    switch (pattern) {
      case PatternLabel::Normal:
        specs.push_back({detail::ClauseKind::Normal, {fresh_rel()}, {esize(), esize()}});
        base_triples = 1;
        break;
      case PatternLabel::SEO:
        specs.push_back({detail::ClauseKind::Seo, {fresh_rel(), fresh_rel()},
                         {esize(), esize(), esize()}});
        base_triples = 2;
        break;
      case PatternLabel::EPO:
        specs.push_back({detail::ClauseKind::Epo, {fresh_rel(), fresh_rel()},
                         {esize(), esize()}});
        base_triples = 2;
        break;
      case PatternLabel::SOO:
        specs.push_back({detail::ClauseKind::Soo, {fresh_rel()}, {3}});
        base_triples = 1;
        break;
    }
    int lo = std::max(cfg.triples_min, base_triples);
    int hi = std::max(cfg.triples_max, base_triples);
    int want = std::min(rng.uniform_int(lo, hi), cfg.n_r);
    for (int t = base_triples; t < want; ++t)
      specs.push_back({detail::ClauseKind::Normal, {fresh_rel()}, {esize(), esize()}});

    // shrink until the clauses plus one-filler gaps fit len_max
    auto total_tokens = [&]() {
      int n = static_cast<int>(specs.size()) - 1; // minimal gaps
      for (const auto& s : specs) n += s.token_count();
      return n;
    };
    if (total_tokens() > cfg.len_max) {
      for (auto& s : specs)
        if (s.kind != detail::ClauseKind::Soo)
          for (int& e : s.entity_sizes) e = 1;
    }
    while (total_tokens() > cfg.len_max && static_cast<int>(specs.size()) > 1)
      specs.pop_back();
    if (total_tokens() > cfg.len_max)
      throw InfeasibleConfig("gen_synthetic: a single clause does not fit len_max");

    // materialize tokens and triples
    detail::EntityPool pool(cfg.entity_vocab, rng);
    std::vector<std::string> tokens;
    std::vector<Triple> triples;
    int budget = cfg.len_max - total_tokens(); // spare tokens for lead/extra gaps
    int lead = budget > 0 ? rng.uniform_int(0, std::min(budget, 1)) : 0;
    budget -= lead;
    for (int i = 0; i < lead; ++i) tokens.push_back(filler());

    for (std::size_t ci = 0; ci < specs.size(); ++ci) {
      if (ci > 0) {
        int gap = 1;
        if (budget > 0 && rng.uniform() < 0.5) {
          ++gap;
          --budget;
        }
        for (int g = 0; g < gap; ++g) tokens.push_back(filler());
      }
      const detail::ClauseSpec& s = specs[ci];
      int at = static_cast<int>(tokens.size());
      auto put_entity = [&](int size) {
        EntitySpan span(static_cast<int>(tokens.size()), static_cast<int>(tokens.size()) + size - 1);
        for (const auto& tok : pool.take(size)) tokens.push_back(tok);
        return span;
      };
      switch (s.kind) {
        case detail::ClauseKind::Normal: {
          EntitySpan subj = put_entity(s.entity_sizes[0]);
          tokens.push_back(verb(s.rels[0]));
          EntitySpan obj = put_entity(s.entity_sizes[1]);
          triples.emplace_back(subj, s.rels[0], obj);
          break;
        }
        case detail::ClauseKind::Seo: {
          EntitySpan a = put_entity(s.entity_sizes[0]);
          tokens.push_back(verb(s.rels[0]));
          EntitySpan b = put_entity(s.entity_sizes[1]);
          tokens.push_back(verb(s.rels[1]));
          EntitySpan c = put_entity(s.entity_sizes[2]);
          triples.emplace_back(a, s.rels[0], b);
          triples.emplace_back(b, s.rels[1], c);
          break;
        }
        case detail::ClauseKind::Epo: {
          EntitySpan subj = put_entity(s.entity_sizes[0]);
          tokens.push_back(verb(s.rels[0]));
          tokens.push_back(verb(s.rels[1]));
          EntitySpan obj = put_entity(s.entity_sizes[1]);
          triples.emplace_back(subj, s.rels[0], obj);
          triples.emplace_back(subj, s.rels[1], obj);
          break;
        }
        case detail::ClauseKind::Soo: {
          EntitySpan run = put_entity(3);
          tokens.push_back(verb(s.rels[0]));
          triples.emplace_back(EntitySpan(run.start + 1, run.start + 1), s.rels[0], run);
          break;
        }
      }
      (void)at;
    }
    int target_len = rng.uniform_int(cfg.len_min, cfg.len_max);
    while (static_cast<int>(tokens.size()) < target_len) tokens.push_back(filler());
    return AnnotatedSentence(Sentence("tmp", std::move(tokens)), std::move(triples));
  };

  std::vector<std::pair<PatternLabel, long>> plan = {{PatternLabel::Normal, cfg.normal},
                                                     {PatternLabel::SEO, cfg.seo},
                                                     {PatternLabel::EPO, cfg.epo},
                                                     {PatternLabel::SOO, cfg.soo}};
  SynthResult out;
  out.relations = relations;
  for (const auto& [pattern, count] : plan)
    for (long i = 0; i < count; ++i) out.sentences.push_back(build_sentence(pattern));
  rng.shuffle(out.sentences);
  for (std::size_t i = 0; i < out.sentences.size(); ++i)
    out.sentences[i].sentence.id = "s" + std::to_string(i);
  return out;
}

/// Serialize sentences back to the input format; reloading resolves the same
/// spans as long as every entity's token sequence occurs exactly once, which
/// gen_synthetic guarantees.
inline void write_dataset(std::ostream& os, const std::vector<AnnotatedSentence>& sentences,
                          const RelationSet& relations) {
  for (const auto& ann : sentences) {
    nlohmann::json rec;
    std::string text;
    for (std::size_t i = 0; i < ann.sentence.tokens.size(); ++i) {
      if (i) text += ' ';
      text += ann.sentence.tokens[i];
    }
    rec["text"] = text;
    auto surface = [&](const EntitySpan& sp) {
      std::string s;
      for (int i = sp.start; i <= sp.end; ++i) {
        if (i > sp.start) s += ' ';
        s += ann.sentence.tokens[i];
      }
      return s;
    };
    rec["triple_list"] = nlohmann::json::array();
    for (const Triple& tr : ann.triples)
      rec["triple_list"].push_back({surface(tr.subject), relations.name(tr.relation),
                                    surface(tr.object)});
    os << rec.dump() << "\n";
  }
}

inline void write_relations(std::ostream& os, const RelationSet& relations) {
  for (const auto& name : relations.names()) os << name << "\n";
}

} // namespace prgc
