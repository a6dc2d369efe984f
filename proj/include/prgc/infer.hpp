#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "prgc/decoder.hpp"
#include "prgc/labeling.hpp"
#include "prgc/model.hpp"

namespace prgc {

/// How candidate subject-object pairs are combined into triples.
/// Correspondence is the real scheme; NearestNeighbor pairs each subject with
/// the closest object by start token and exists for ablation comparisons.
enum class PairingScheme { Correspondence, NearestNeighbor };

struct ExtractOptions {
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  bool relation_filter = true; // false: tag every relation (ablation)
  PairingScheme pairing = PairingScheme::Correspondence;
  BioMode bio = BioMode::Strict;
};

/// Per-sentence prediction with the intermediate outputs the subtask
/// evaluation needs.
struct SentencePrediction {
  std::string id;
  std::vector<int> relations;                 // selected relation ids
  std::map<int, std::pair<std::vector<EntitySpan>, std::vector<EntitySpan>>> entities;
  std::vector<std::pair<EntitySpan, EntitySpan>> pairs; // pairs of the kept triples
  std::vector<Triple> triples;
  int relations_without_pairs = 0; // selected relations yielding no triple
};

/// Argmax over one tag row; exact ties break toward O, then B, then I.
inline Tag argmax_tag(const Matrix& dist, int row) {
  double pb = dist(row, 0), pi = dist(row, 1), po = dist(row, 2);
  if (po >= pb && po >= pi) return Tag::O;
  if (pb >= pi) return Tag::B;
  return Tag::I;
}

inline TagSeq argmax_tags(const Matrix& dist) {
  TagSeq tags(static_cast<std::size_t>(dist.rows()));
  for (int i = 0; i < dist.rows(); ++i) tags[i] = argmax_tag(dist, i);
  return tags;
}

/// Decode a bundle: pick relations above lambda1, argmax-decode each tag
/// matrix, then keep a (subject, object) pair iff its correspondence cell
/// exceeds lambda2. Output is deduplicated and sorted.
inline std::vector<Triple> decode_bundle(const PredictionBundle& bundle,
                                         const ExtractOptions& opt,
                                         SentencePrediction* detail = nullptr) {
  std::vector<int> selected;
  if (opt.relation_filter) {
    selected = select_relations(bundle.p_rel, opt.lambda1);
  } else {
    for (int k = 0; k < static_cast<int>(bundle.p_rel.size()); ++k) selected.push_back(k);
  }
  if (detail) detail->relations = selected;

  std::set<Triple> kept;
  for (int rel : selected) {
    auto it = bundle.tag_dists.find(rel);
    if (it == bundle.tag_dists.end())
      throw MissingRelation("decode_bundle: no tag distributions for relation " +
                            std::to_string(rel));
    std::vector<EntitySpan> subs = bio_decode(argmax_tags(it->second.first), opt.bio);
    std::vector<EntitySpan> objs = bio_decode(argmax_tags(it->second.second), opt.bio);
    if (detail) detail->entities[rel] = {subs, objs};

    bool any = false;
    if (opt.pairing == PairingScheme::Correspondence) {
      for (const EntitySpan& s : subs)
        for (const EntitySpan& o : objs)
          if (bundle.corr(s.start, o.start) > opt.lambda2) {
            kept.insert(Triple(s, rel, o));
            any = true;
          }
    } else {
      // ablation: nearest object by start distance, ties toward the earlier one
      for (const EntitySpan& s : subs) {
        const EntitySpan* best = nullptr;
        int best_dist = 0;
        for (const EntitySpan& o : objs) {
          int dist = std::abs(o.start - s.start);
          if (!best || dist < best_dist || (dist == best_dist && o.start < best->start)) {
            best = &o;
            best_dist = dist;
          }
        }
        if (best) {
          kept.insert(Triple(s, rel, *best));
          any = true;
        }
      }
    }
    if (detail && !any) ++detail->relations_without_pairs;
  }

  std::vector<Triple> out(kept.begin(), kept.end());
  if (detail) {
    detail->triples = out;
    std::set<std::pair<EntitySpan, EntitySpan>> ps;
    for (const Triple& tr : out) ps.insert({tr.subject, tr.object});
    detail->pairs.assign(ps.begin(), ps.end());
  }
  return out;
}

/// Model outputs for one sentence, tagging only the relations that will be
/// decoded. The correspondence matrix is computed once and shared.
inline PredictionBundle forward_bundle(const Encoder& encoder, const DecoderParams& dec,
                                       const Sentence& sentence,
                                       const std::vector<int>& relations_to_tag) {
  EncoderOutput h = encoder.encode(sentence);
  PredictionBundle b;
  b.p_rel = predict_relations(h, dec);
  b.corr = global_correspondence(h, dec);
  for (int rel : relations_to_tag) b.tag_dists[rel] = tag_sequences(h, rel, dec);
  return b;
}

inline SentencePrediction extract_detailed(const Encoder& encoder, const DecoderParams& dec,
                                           const Sentence& sentence, const ExtractOptions& opt) {
  EncoderOutput h = encoder.encode(sentence);
  PredictionBundle b;
  b.p_rel = predict_relations(h, dec);
  b.corr = global_correspondence(h, dec);
  std::vector<int> selected;
  if (opt.relation_filter) {
    selected = select_relations(b.p_rel, opt.lambda1);
  } else {
    for (int k = 0; k < dec.n_r; ++k) selected.push_back(k);
  }
  for (int rel : selected) b.tag_dists[rel] = tag_sequences(h, rel, dec);
  SentencePrediction pred;
  pred.id = sentence.id;
  decode_bundle(b, opt, &pred);
  return pred;
}

/// End-to-end extraction: encode, select relations with lambda1, tag each
/// selected relation, and keep subject-object pairs whose correspondence
/// score exceeds lambda2.
inline std::vector<Triple> extract_triples(const Encoder& encoder, const DecoderParams& dec,
                                           const Sentence& sentence, double lambda1 = 0.5,
                                           double lambda2 = 0.5) {
  ExtractOptions opt;
  opt.lambda1 = lambda1;
  opt.lambda2 = lambda2;
  return extract_detailed(encoder, dec, sentence, opt).triples;
}

inline std::vector<Triple> extract_triples(const Model& m, const Sentence& sentence,
                                           double lambda1 = 0.5, double lambda2 = 0.5) {
  return extract_triples(m.encoder, m.decoder, sentence, lambda1, lambda2);
}

/// Testing oracle: the same extraction computed with independent scalar code,
/// straight from h and the raw weights. Evaluates every relation and applies
/// the lambda1 filter separately at the end. Must agree with extract_triples
/// exactly. Intended for small instances (n <= 20 or so).
inline std::vector<Triple> extract_triples_bruteforce(const Encoder& encoder,
                                                      const DecoderParams& dec,
                                                      const Sentence& sentence,
                                                      double lambda1 = 0.5,
                                                      double lambda2 = 0.5) {
  const EncoderOutput h = encoder.encode(sentence);
  const int n = h.rows();
  const int d = dec.d;

  auto sigmoid = [](double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  };

  // relation probabilities from scratch
  std::vector<double> pooled(static_cast<std::size_t>(d), 0.0);
  for (int c = 0; c < d; ++c) {
    double s = 0.0;
    for (int r = 0; r < n; ++r) s += h(r, c);
    pooled[c] = s / n;
  }
  std::vector<double> p_rel(static_cast<std::size_t>(dec.n_r), 0.0);
  for (int k = 0; k < dec.n_r; ++k) {
    double z = 0.0;
    for (int c = 0; c < d; ++c) z += pooled[c] * dec.w_rel(c, k);
    p_rel[k] = sigmoid(z + dec.b_rel(0, k));
  }

  // correspondence matrix from scratch
  Matrix corr(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double zi = 0.0, zj = 0.0;
      for (int c = 0; c < d; ++c) zi += h(i, c) * dec.w_glob(c, 0);
      for (int c = 0; c < d; ++c) zj += h(j, c) * dec.w_glob(d + c, 0);
      corr(i, j) = sigmoid((zi + zj) + dec.b_glob(0, 0));
    }

  auto softmax_row = [](std::vector<double>& z) {
    double mx = z[0];
    for (double x : z) mx = std::max(mx, x);
    double tot = 0.0;
    for (double& x : z) {
      x = std::exp(x - mx);
      tot += x;
    }
    for (double& x : z) x /= tot;
  };

  std::set<Triple> kept;
  for (int rel = 0; rel < dec.n_r; ++rel) {
    // tag probabilities for every position, dual or folded single
    std::vector<std::vector<double>> sub_rows(n), obj_rows(n);
    for (int i = 0; i < n; ++i) {
      std::vector<double> mixed(static_cast<std::size_t>(d));
      for (int c = 0; c < d; ++c) mixed[c] = h(i, c) + dec.rel_emb(rel, c);
      if (dec.mode == TaggingMode::Dual) {
        std::vector<double> sz(3), oz(3);
        for (int t = 0; t < 3; ++t) {
          double zs = 0.0, zo = 0.0;
          for (int c = 0; c < d; ++c) {
            zs += mixed[c] * dec.w_sub(c, t);
            zo += mixed[c] * dec.w_obj(c, t);
          }
          sz[t] = zs + dec.b_sub(0, t);
          oz[t] = zo + dec.b_obj(0, t);
        }
        softmax_row(sz);
        softmax_row(oz);
        sub_rows[i] = sz;
        obj_rows[i] = oz;
      } else {
        std::vector<double> z5(5);
        for (int t = 0; t < 5; ++t) {
          double z = 0.0;
          for (int c = 0; c < d; ++c) z += mixed[c] * dec.w_tag(c, t);
          z5[t] = z + dec.b_tag(0, t);
        }
        softmax_row(z5);
        sub_rows[i] = {z5[0], z5[1], z5[2] + z5[3] + z5[4]};
        obj_rows[i] = {z5[2], z5[3], z5[0] + z5[1] + z5[4]};
      }
    }

    auto pick = [](const std::vector<double>& p) {
      if (p[2] >= p[0] && p[2] >= p[1]) return Tag::O;
      if (p[0] >= p[1]) return Tag::B;
      return Tag::I;
    };
    // independent B I* run scan
    auto scan = [&](const std::vector<std::vector<double>>& rows) {
      std::vector<EntitySpan> spans;
      int open = -1;
      for (int i = 0; i < n; ++i) {
        Tag t = pick(rows[i]);
        if (t == Tag::B) {
          if (open >= 0) spans.emplace_back(open, i - 1);
          open = i;
        } else if (t == Tag::O) {
          if (open >= 0) spans.emplace_back(open, i - 1);
          open = -1;
        }
      }
      if (open >= 0) spans.emplace_back(open, n - 1);
      return spans;
    };

    if (!(p_rel[rel] > lambda1)) continue; // lambda1 filter, applied separately
    for (const EntitySpan& s : scan(sub_rows))
      for (const EntitySpan& o : scan(obj_rows))
        if (corr(s.start, o.start) > lambda2) kept.insert(Triple(s, rel, o));
  }
  return std::vector<Triple>(kept.begin(), kept.end());
}

inline std::vector<Triple> extract_triples_bruteforce(const Model& m, const Sentence& sentence,
                                                      double lambda1 = 0.5,
                                                      double lambda2 = 0.5) {
  return extract_triples_bruteforce(m.encoder, m.decoder, sentence, lambda1, lambda2);
}

} // namespace prgc
