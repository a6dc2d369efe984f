#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "prgc/data.hpp"
#include "prgc/eval.hpp"
#include "prgc/infer.hpp"

namespace prgc {

/// One line of a prediction file, as read back for evaluation. Spans index
/// into the tokenization of `text`; surfaces are recomputed from them under
/// whichever mode the evaluation runs in.
struct PredictionRecord {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::pair<std::string, std::pair<EntitySpan, EntitySpan>>> triples; // rel name + spans
  std::vector<std::string> relations; // selected relation names (intermediate)
  std::vector<EntitySpan> subjects, objects;
  std::vector<std::pair<EntitySpan, EntitySpan>> pairs;
  bool has_intermediates = false;
};

namespace detail {
inline nlohmann::json span_json(const EntitySpan& s) {
  return nlohmann::json::array({s.start, s.end});
}
inline EntitySpan span_from(const nlohmann::json& j) {
  return EntitySpan(j.at(0).get<int>(), j.at(1).get<int>());
}
} // namespace detail

/// JSON lines, one object per sentence:
///   {"id", "text", "pred_triples": [[subject, relation, object], ...],
///    "pred_spans": [[[s0,s1], relation, [o0,o1]], ...],
///    "intermediates": {"relations", "subjects", "objects", "pairs"}}
inline void write_prediction(std::ostream& os, const Sentence& sentence,
                             const SentencePrediction& pred, const RelationSet& relations) {
  nlohmann::json rec;
  rec["id"] = sentence.id;
  std::string text;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    if (i) text += ' ';
    text += sentence.tokens[i];
  }
  rec["text"] = text;
  rec["pred_triples"] = nlohmann::json::array();
  rec["pred_spans"] = nlohmann::json::array();
  for (const Triple& t : pred.triples) {
    rec["pred_triples"].push_back({surface(sentence, t.subject, SpanMode::FullSpan),
                                   relations.name(t.relation),
                                   surface(sentence, t.object, SpanMode::FullSpan)});
    rec["pred_spans"].push_back({detail::span_json(t.subject), relations.name(t.relation),
                                 detail::span_json(t.object)});
  }
  nlohmann::json inter;
  inter["relations"] = nlohmann::json::array();
  for (int rel : pred.relations) inter["relations"].push_back(relations.name(rel));
  inter["subjects"] = nlohmann::json::array();
  inter["objects"] = nlohmann::json::array();
  for (const auto& [rel, spans] : pred.entities) {
    for (const EntitySpan& s : spans.first) inter["subjects"].push_back(detail::span_json(s));
    for (const EntitySpan& s : spans.second) inter["objects"].push_back(detail::span_json(s));
  }
  inter["pairs"] = nlohmann::json::array();
  for (const auto& [sub, obj] : pred.pairs)
    inter["pairs"].push_back({detail::span_json(sub), detail::span_json(obj)});
  rec["intermediates"] = inter;
  os << rec.dump() << "\n";
}

inline std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open prediction file: " + path);
  std::vector<PredictionRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    PredictionRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.tokens = tokenize(j.at("text").get<std::string>());
    for (const auto& t : j.value("pred_spans", nlohmann::json::array()))
      rec.triples.push_back({t.at(1).get<std::string>(),
                             {detail::span_from(t.at(0)), detail::span_from(t.at(2))}});
    if (j.contains("intermediates")) {
      rec.has_intermediates = true;
      const auto& inter = j["intermediates"];
      for (const auto& r : inter.value("relations", nlohmann::json::array()))
        rec.relations.push_back(r.get<std::string>());
      for (const auto& s : inter.value("subjects", nlohmann::json::array()))
        rec.subjects.push_back(detail::span_from(s));
      for (const auto& s : inter.value("objects", nlohmann::json::array()))
        rec.objects.push_back(detail::span_from(s));
      for (const auto& p : inter.value("pairs", nlohmann::json::array()))
        rec.pairs.push_back({detail::span_from(p.at(0)), detail::span_from(p.at(1))});
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// Key set + subtask view of one prediction record under a matching mode.
inline std::set<TripleKey> record_triple_keys(const PredictionRecord& rec, SpanMode mode) {
  Sentence s(rec.id, rec.tokens);
  std::set<TripleKey> keys;
  for (const auto& [rel, spans] : rec.triples)
    keys.insert({rel, surface(s, spans.first, mode), surface(s, spans.second, mode)});
  return keys;
}

inline SubtaskView record_subtask_view(const PredictionRecord& rec, SpanMode mode) {
  Sentence s(rec.id, rec.tokens);
  SubtaskView v;
  v.relations.insert(rec.relations.begin(), rec.relations.end());
  for (const EntitySpan& sp : rec.subjects) v.entities.insert({surface(s, sp, mode), Role::Subject});
  for (const EntitySpan& sp : rec.objects) v.entities.insert({surface(s, sp, mode), Role::Object});
  for (const auto& [sub, obj] : rec.pairs)
    v.pairs.insert({surface(s, sub, mode), surface(s, obj, mode)});
  return v;
}

} // namespace prgc
