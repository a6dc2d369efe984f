#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "prgc/eval.hpp"
#include "prgc/infer.hpp"
#include "prgc/labeling.hpp"
#include "prgc/loss.hpp"
#include "prgc/model.hpp"

namespace prgc {

struct TrainConfig {
  double encoder_lr = 5e-5;
  double decoder_lr = 1e-3;
  double weight_decay = 0.01;
  int batch_size = 0; // 0 = auto: 64 for small relation sets, 6 for large ones
  int epochs = 100;
  double alpha = 1.0, beta = 1.0, gamma = 1.0;
  std::uint64_t seed = 0;
  int negative_relation_samples = 0; // extra all-O relations per sentence in the tag loss
  double clip_norm = 1.0;            // global gradient norm; 0 disables clipping
  bool keep_best = false;            // default keeps the last epoch's model
  double lambda1 = 0.5, lambda2 = 0.5;
  SpanMode eval_mode = SpanMode::FullSpan;

  int resolved_batch_size(int n_r) const {
    if (batch_size > 0) return batch_size;
    return n_r <= 100 ? 64 : 6;
  }

  void validate() const {
    if (encoder_lr <= 0 || decoder_lr <= 0) throw ConfigError("learning rates must be positive");
    if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (alpha < 0 || beta < 0 || gamma < 0) throw ConfigError("loss weights must be >= 0");
    if (negative_relation_samples < 0) throw ConfigError("negative samples must be >= 0");
    if (!(lambda1 > 0 && lambda1 < 1 && lambda2 > 0 && lambda2 < 1))
      throw ConfigError("thresholds must lie strictly inside (0, 1)");
  }
};

/// Everything needed to resume or reuse a trained model. Reloading a saved
/// checkpoint reproduces forward outputs bit for bit.
struct Checkpoint {
  Model model;
  TrainConfig config;
  int epoch = 0;
  std::string rng_state;
};

struct EpochMetrics {
  int epoch = 0;
  double loss_rel = 0, loss_seq = 0, loss_global = 0, loss_total = 0;
  double val_f1 = 0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> history;
};

namespace detail {

/// Decoupled-weight-decay Adam over one tensor.
struct AdamSlot {
  Matrix m, v;
  double lr = 0;
};

inline double loss_component(double total, int count) {
  return count > 0 ? total / count : 0.0;
}

} // namespace detail

/// One sentence's forward pass and loss on a fresh tape. Teacher forcing: the
/// tag loss runs over the gold relations (plus any sampled negatives, whose
/// targets are all O).
struct SentenceLosses {
  double rel = 0, seq = 0, global = 0, total = 0;
};

inline SentenceLosses sentence_backward(Model& model, const Sentence& sentence,
                                        const GoldLabels& gold,
                                        const std::vector<int>& negative_rels,
                                        const TrainConfig& cfg,
                                        std::vector<Matrix>* grad_accum) {
  ad::Tape tape;
  DeskEncoder::Bound enc_bound = model.encoder.bind(tape);
  BoundDecoder dec_bound = bind(tape, model.decoder);

  ad::Var h = model.encoder.encode_var(tape, enc_bound, model.encoder.token_ids(sentence));
  ad::Var p_rel = predict_relations_var(tape, h, dec_bound);
  ad::Var corr = global_correspondence_var(tape, h, dec_bound);

  std::map<int, std::pair<TagSeq, TagSeq>> targets = gold.tag_targets;
  TagSeq all_o(static_cast<std::size_t>(sentence.length()), Tag::O);
  for (int rel : negative_rels) targets.emplace(rel, std::make_pair(all_o, all_o));

  std::map<int, std::pair<ad::Var, ad::Var>> tag_vars;
  for (const auto& [rel, unused] : targets)
    tag_vars.emplace(rel, tag_sequences_var(tape, h, rel, dec_bound));

  ad::Var l_rel = loss_rel_var(tape, p_rel, gold.rel_vector);
  ad::Var l_seq = loss_seq_var(tape, tag_vars, targets, sentence.length());
  ad::Var l_glob = loss_global_var(tape, corr, gold.corr);
  ad::Var l_total = loss_total_var(tape, l_rel, l_seq, l_glob, cfg.alpha, cfg.beta, cfg.gamma);

  SentenceLosses out;
  out.rel = l_rel.scalar();
  out.seq = l_seq.scalar();
  out.global = l_glob.scalar();
  out.total = l_total.scalar();
  if (!std::isfinite(out.total))
    throw DivergedLoss("loss became non-finite on sentence '" + sentence.id + "' (rel=" +
                       std::to_string(out.rel) + " seq=" + std::to_string(out.seq) +
                       " global=" + std::to_string(out.global) + ")");

  if (grad_accum) {
    tape.backward(l_total);
    std::vector<ad::Var> bound = enc_bound.all();
    for (ad::Var v : dec_bound.all()) bound.push_back(v);
    for (std::size_t i = 0; i < bound.size(); ++i) {
      const Matrix& g = bound[i].grad();
      Matrix& acc = (*grad_accum)[i];
      for (std::size_t k = 0; k < acc.size(); ++k) acc.at(k) += g.at(k);
    }
  }
  return out;
}

/// Exact-match triple F1 of the model on a validation split.
inline double validation_f1(const Model& model, const std::vector<AnnotatedSentence>& valid,
                            const TrainConfig& cfg) {
  if (valid.empty()) return 0.0;
  std::vector<std::set<TripleKey>> pred, gold;
  for (const AnnotatedSentence& ann : valid) {
    if (ann.sentence.length() > model.encoder.max_len()) continue;
    std::vector<Triple> triples =
        extract_triples(model, ann.sentence, cfg.lambda1, cfg.lambda2);
    pred.push_back(triple_keys(ann.sentence, triples, cfg.eval_mode, model.relations));
    gold.push_back(triple_keys(ann.sentence, ann.triples, cfg.eval_mode, model.relations));
  }
  return score_triples(pred, gold).f1();
}

/// Mini-batch training with the Adam update rule, decoupled weight decay and
/// two learning-rate groups (encoder vs decoder). Runs for the configured
/// number of epochs and returns the final model ("last model"), or the best
/// validation-F1 model when keep_best is set. History carries one record per
/// epoch; losses are means over the epoch's sentences.
inline TrainResult train(const std::vector<AnnotatedSentence>& train_set,
                         const std::vector<AnnotatedSentence>& valid_set,
                         const RelationSet& relations, const EncoderConfig& enc_cfg,
                         TaggingMode tagging, const TrainConfig& cfg,
                         std::ostream* log = nullptr) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("train: empty training split");

  Rng rng(cfg.seed);
  Vocab vocab = build_vocab(train_set);
  Model model(enc_cfg, vocab, relations, tagging, rng);

  auto warn = [&](const std::string& msg) {
    if (log) *log << "warning: " << msg << "\n";
  };

  // precompute gold labels, skipping sentences BIO cannot represent
  std::vector<const AnnotatedSentence*> usable;
  std::vector<GoldLabels> golds;
  for (const AnnotatedSentence& ann : train_set) {
    if (ann.sentence.length() > enc_cfg.max_len) {
      warn("skipping '" + ann.sentence.id + "': longer than max_len");
      continue;
    }
    try {
      golds.push_back(build_gold(ann, relations.size(), tagging));
      usable.push_back(&ann);
    } catch (const Error& e) {
      warn("skipping '" + ann.sentence.id + "': " + e.what());
    }
  }
  if (usable.empty()) throw ConfigError("train: no usable training sentences");

  std::vector<ParamRef> params = model.parameters();
  std::vector<detail::AdamSlot> adam(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam[i].m = Matrix(params[i].tensor->rows(), params[i].tensor->cols());
    adam[i].v = Matrix(params[i].tensor->rows(), params[i].tensor->cols());
    adam[i].lr = params[i].name.rfind("enc.", 0) == 0 ? cfg.encoder_lr : cfg.decoder_lr;
  }
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long step = 0;

  int batch_size = cfg.resolved_batch_size(relations.size());
  TrainResult result;
  double best_f1 = -1.0;
  Model best_model = model;
  int best_epoch = 0;

  std::vector<Matrix> grads(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    grads[i] = Matrix(params[i].tensor->rows(), params[i].tensor->cols());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(usable.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    double sum_rel = 0, sum_seq = 0, sum_glob = 0, sum_total = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::size_t stop = std::min(order.size(), start + batch_size);
      for (auto& g : grads) g.fill(0.0);

      for (std::size_t bi = start; bi < stop; ++bi) {
        std::size_t si = order[bi];
        std::vector<int> negatives;
        if (cfg.negative_relation_samples > 0) {
          std::vector<int> candidates;
          for (int k = 0; k < relations.size(); ++k)
            if (!golds[si].rel_vector[k]) candidates.push_back(k);
          rng.shuffle(candidates);
          int take = std::min<int>(cfg.negative_relation_samples,
                                   static_cast<int>(candidates.size()));
          negatives.assign(candidates.begin(), candidates.begin() + take);
        }
        SentenceLosses l = sentence_backward(model, usable[si]->sentence, golds[si],
                                             negatives, cfg, &grads);
        sum_rel += l.rel;
        sum_seq += l.seq;
        sum_glob += l.global;
        sum_total += l.total;
      }

      double inv_batch = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grads)
        for (std::size_t k = 0; k < g.size(); ++k) g.at(k) *= inv_batch;

      if (cfg.clip_norm > 0) {
        double sq = 0;
        for (const auto& g : grads)
          for (std::size_t k = 0; k < g.size(); ++k) sq += g.at(k) * g.at(k);
        double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm) {
          double scale = cfg.clip_norm / norm;
          for (auto& g : grads)
            for (std::size_t k = 0; k < g.size(); ++k) g.at(k) *= scale;
        }
      }

      ++step;
      double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& theta = *params[i].tensor;
        detail::AdamSlot& slot = adam[i];
        for (std::size_t k = 0; k < theta.size(); ++k) {
          double g = grads[i].at(k);
          slot.m.at(k) = beta1 * slot.m.at(k) + (1.0 - beta1) * g;
          slot.v.at(k) = beta2 * slot.v.at(k) + (1.0 - beta2) * g * g;
          double mhat = slot.m.at(k) / bc1;
          double vhat = slot.v.at(k) / bc2;
          theta.at(k) -= slot.lr * (mhat / (std::sqrt(vhat) + adam_eps) +
                                    cfg.weight_decay * theta.at(k));
        }
      }
    }

    EpochMetrics em;
    em.epoch = epoch;
    int n_sent = static_cast<int>(usable.size());
    em.loss_rel = sum_rel / n_sent;
    em.loss_seq = sum_seq / n_sent;
    em.loss_global = sum_glob / n_sent;
    em.loss_total = sum_total / n_sent;
    em.val_f1 = validation_f1(model, valid_set, cfg);
    result.history.push_back(em);
    if (log)
      *log << "epoch " << epoch << " loss=" << em.loss_total << " (rel=" << em.loss_rel
           << " seq=" << em.loss_seq << " global=" << em.loss_global << ") val_f1=" << em.val_f1
           << "\n";
    if (cfg.keep_best && em.val_f1 > best_f1) {
      best_f1 = em.val_f1;
      best_model = model;
      best_epoch = epoch;
    }
  }

  result.checkpoint.model = cfg.keep_best && best_f1 >= 0 ? best_model : model;
  result.checkpoint.config = cfg;
  result.checkpoint.epoch = cfg.keep_best && best_f1 >= 0 ? best_epoch : cfg.epochs;
  result.checkpoint.rng_state = rng.state();
  return result;
}

} // namespace prgc
