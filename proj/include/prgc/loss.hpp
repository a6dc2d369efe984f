#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "prgc/autodiff.hpp"
#include "prgc/core.hpp"
#include "prgc/labeling.hpp"

namespace prgc {

namespace detail {
inline double clamped_log(double p) { return std::log(ad::Tape::clamp01(p)); }
}

/// Mean binary cross-entropy over the full relation set.
inline double loss_rel(const std::vector<double>& p_rel, const std::vector<int>& rel_vector) {
  if (p_rel.size() != rel_vector.size())
    throw LengthMismatch("loss_rel: " + std::to_string(p_rel.size()) + " probabilities vs " +
                         std::to_string(rel_vector.size()) + " labels");
  if (p_rel.empty()) throw LengthMismatch("loss_rel: empty relation set");
  double total = 0.0;
  for (std::size_t i = 0; i < p_rel.size(); ++i) {
    double y = rel_vector[i];
    total -= y * detail::clamped_log(p_rel[i]) + (1.0 - y) * detail::clamped_log(1.0 - p_rel[i]);
  }
  return total / static_cast<double>(p_rel.size());
}

/// Negative log-likelihood of the gold tag at every position, summed over the
/// subject and object sequences of every target relation, divided by
/// 2 * n * n_pot where n_pot is the number of target relations.
/// Zero when there are no target relations.
inline double loss_seq(const std::map<int, std::pair<Matrix, Matrix>>& tag_dists,
                       const std::map<int, std::pair<TagSeq, TagSeq>>& tag_targets) {
  if (tag_targets.empty()) return 0.0;
  double total = 0.0;
  int n = static_cast<int>(tag_targets.begin()->second.first.size());
  for (const auto& [rel, target] : tag_targets) {
    auto it = tag_dists.find(rel);
    if (it == tag_dists.end())
      throw MissingRelation("loss_seq: no predictions for relation " + std::to_string(rel));
    const auto& [sub_p, obj_p] = it->second;
    const auto& [sub_t, obj_t] = target;
    if (sub_p.rows() != static_cast<int>(sub_t.size()) ||
        obj_p.rows() != static_cast<int>(obj_t.size()))
      throw LengthMismatch("loss_seq: tag matrix rows do not match target length");
    for (int i = 0; i < sub_p.rows(); ++i)
      total -= detail::clamped_log(sub_p(i, static_cast<int>(sub_t[i])));
    for (int i = 0; i < obj_p.rows(); ++i)
      total -= detail::clamped_log(obj_p(i, static_cast<int>(obj_t[i])));
  }
  return total / (2.0 * n * static_cast<double>(tag_targets.size()));
}

/// Mean binary cross-entropy over all n^2 correspondence cells.
inline double loss_global(const Matrix& corr, const Matrix& corr_matrix) {
  if (!corr.same_shape(corr_matrix))
    throw ShapeMismatch("loss_global: prediction and target shapes differ");
  double total = 0.0;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    double y = corr_matrix.at(i);
    total -= y * detail::clamped_log(corr.at(i)) + (1.0 - y) * detail::clamped_log(1.0 - corr.at(i));
  }
  return total / static_cast<double>(corr.size());
}

inline double loss_total(double l_rel, double l_seq, double l_global,
                         double alpha = 1.0, double beta = 1.0, double gamma = 1.0) {
  return alpha * l_rel + beta * l_seq + gamma * l_global;
}

/// Tape-level counterparts -------------------------------------------------

inline ad::Var loss_rel_var(ad::Tape& t, ad::Var p_rel, const std::vector<int>& rel_vector) {
  Matrix target(1, static_cast<int>(rel_vector.size()));
  for (std::size_t i = 0; i < rel_vector.size(); ++i) target.at(i) = rel_vector[i];
  return t.bce_mean(p_rel, std::move(target));
}

inline std::vector<int> tag_picks(const TagSeq& tags) {
  std::vector<int> picks(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) picks[i] = static_cast<int>(tags[i]);
  return picks;
}

/// tag_dists holds one (subject, object) pair of tape vars per target relation.
inline ad::Var loss_seq_var(ad::Tape& t,
                            const std::map<int, std::pair<ad::Var, ad::Var>>& tag_dists,
                            const std::map<int, std::pair<TagSeq, TagSeq>>& tag_targets,
                            int n) {
  ad::Var total = t.leaf(Matrix(1, 1));
  for (const auto& [rel, target] : tag_targets) {
    auto it = tag_dists.find(rel);
    if (it == tag_dists.end())
      throw MissingRelation("loss_seq: no predictions for relation " + std::to_string(rel));
    total = t.add(total, t.nll_sum(it->second.first, tag_picks(target.first)));
    total = t.add(total, t.nll_sum(it->second.second, tag_picks(target.second)));
  }
  if (tag_targets.empty()) return total; // zero
  return t.scale(total, 1.0 / (2.0 * n * static_cast<double>(tag_targets.size())));
}

inline ad::Var loss_global_var(ad::Tape& t, ad::Var corr, const Matrix& corr_matrix) {
  return t.bce_mean(corr, corr_matrix);
}

inline ad::Var loss_total_var(ad::Tape& t, ad::Var l_rel, ad::Var l_seq, ad::Var l_global,
                              double alpha, double beta, double gamma) {
  return t.add(t.add(t.scale(l_rel, alpha), t.scale(l_seq, beta)), t.scale(l_global, gamma));
}

} // namespace prgc
