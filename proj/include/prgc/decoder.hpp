#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "prgc/autodiff.hpp"
#include "prgc/core.hpp"
#include "prgc/encoder.hpp"
#include "prgc/matrix.hpp"

namespace prgc {

/// Dual keeps separate subject and object taggers so a subject may overlap
/// its own object; Single collapses them into one 5-class tagger
/// {B-sub, I-sub, B-obj, I-obj, O} for corpora without such overlaps.
enum class TaggingMode { Dual, Single };

inline std::string to_string(TaggingMode m) {
  return m == TaggingMode::Dual ? "dual" : "single";
}

inline TaggingMode tagging_mode_from(const std::string& s) {
  if (s == "dual") return TaggingMode::Dual;
  if (s == "single") return TaggingMode::Single;
  throw ConfigError("tagging mode must be 'dual' or 'single', got '" + s + "'");
}

/// All trainable decoder weights.
///   relation classifier  w_rel (d x n_r), b_rel (1 x n_r)
///   relation embeddings  rel_emb (n_r x d), row j is u_j
///   taggers              dual: w_sub/w_obj (d x 3) + biases
///                        single: w_tag (d x 5) + bias
///   correspondence       w_glob (2d x 1) over [h_i ; h_j], b_glob scalar
struct DecoderParams {
  int d = 0;
  int n_r = 0;
  TaggingMode mode = TaggingMode::Dual;

  Matrix w_rel, b_rel;
  Matrix rel_emb;
  Matrix w_sub, b_sub, w_obj, b_obj;
  Matrix w_tag, b_tag;
  Matrix w_glob, b_glob;

  DecoderParams() = default;

  DecoderParams(int d_, int n_r_, TaggingMode mode_, Rng& rng)
      : d(d_), n_r(n_r_), mode(mode_) {
    if (d < 1 || n_r < 1) throw DimensionMismatch("DecoderParams: d and n_r must be positive");
    w_rel = Matrix(d, n_r);
    b_rel = Matrix(1, n_r);
    rel_emb = Matrix(n_r, d);
    init_uniform(w_rel, d, rng);
    init_uniform(rel_emb, d, rng);
    if (mode == TaggingMode::Dual) {
      w_sub = Matrix(d, 3);
      b_sub = Matrix(1, 3);
      w_obj = Matrix(d, 3);
      b_obj = Matrix(1, 3);
      init_uniform(w_sub, d, rng);
      init_uniform(w_obj, d, rng);
    } else {
      w_tag = Matrix(d, 5);
      b_tag = Matrix(1, 5);
      init_uniform(w_tag, d, rng);
    }
    w_glob = Matrix(2 * d, 1);
    b_glob = Matrix(1, 1);
    init_uniform(w_glob, d, rng);
  }

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> ps;
    ps.push_back({"dec.w_rel", &w_rel});
    ps.push_back({"dec.b_rel", &b_rel});
    ps.push_back({"dec.rel_emb", &rel_emb});
    if (mode == TaggingMode::Dual) {
      ps.push_back({"dec.w_sub", &w_sub});
      ps.push_back({"dec.b_sub", &b_sub});
      ps.push_back({"dec.w_obj", &w_obj});
      ps.push_back({"dec.b_obj", &b_obj});
    } else {
      ps.push_back({"dec.w_tag", &w_tag});
      ps.push_back({"dec.b_tag", &b_tag});
    }
    ps.push_back({"dec.w_glob", &w_glob});
    ps.push_back({"dec.b_glob", &b_glob});
    return ps;
  }

  void check_h(const Matrix& h) const {
    if (h.cols() != d)
      throw DimensionMismatch("decoder: h has " + std::to_string(h.cols()) +
                              " columns, params expect d=" + std::to_string(d));
    if (h.rows() < 1) throw DimensionMismatch("decoder: h must have at least one row");
  }
};

/// Per-sentence decoder outputs. For model outputs every probability lies in
/// (0, 1); hard 0/1 bundles built from gold labels are also accepted by the
/// decoding path.
struct PredictionBundle {
  std::vector<double> p_rel;                      // n_r
  std::map<int, std::pair<Matrix, Matrix>> tag_dists; // rel -> (subject n x 3, object n x 3)
  Matrix corr;                                    // n x n
};

/// Tape-level decoder pieces -------------------------------------------------

struct BoundDecoder {
  ad::Var w_rel, b_rel, rel_emb;
  ad::Var w_sub, b_sub, w_obj, b_obj; // dual
  ad::Var w_tag, b_tag;               // single
  ad::Var w_glob, b_glob;
  TaggingMode mode = TaggingMode::Dual;

  /// Vars in the same order as DecoderParams::parameters().
  std::vector<ad::Var> all() const {
    std::vector<ad::Var> vs{w_rel, b_rel, rel_emb};
    if (mode == TaggingMode::Dual) {
      vs.push_back(w_sub);
      vs.push_back(b_sub);
      vs.push_back(w_obj);
      vs.push_back(b_obj);
    } else {
      vs.push_back(w_tag);
      vs.push_back(b_tag);
    }
    vs.push_back(w_glob);
    vs.push_back(b_glob);
    return vs;
  }
};

inline BoundDecoder bind(ad::Tape& t, const DecoderParams& p) {
  BoundDecoder b;
  b.mode = p.mode;
  b.w_rel = t.leaf(p.w_rel);
  b.b_rel = t.leaf(p.b_rel);
  b.rel_emb = t.leaf(p.rel_emb);
  if (p.mode == TaggingMode::Dual) {
    b.w_sub = t.leaf(p.w_sub);
    b.b_sub = t.leaf(p.b_sub);
    b.w_obj = t.leaf(p.w_obj);
    b.b_obj = t.leaf(p.b_obj);
  } else {
    b.w_tag = t.leaf(p.w_tag);
    b.b_tag = t.leaf(p.b_tag);
  }
  b.w_glob = t.leaf(p.w_glob);
  b.b_glob = t.leaf(p.b_glob);
  return b;
}

/// sigmoid(W_rel^T avgpool(h) + b_rel), one independent probability per
/// relation (multi-label, not a softmax).
inline ad::Var predict_relations_var(ad::Tape& t, ad::Var h, const BoundDecoder& b) {
  return t.sigmoid(t.add_row(t.matmul(t.mean_rows(h), b.w_rel), b.b_rel));
}

/// The 5-class single tagger folds back into the dual (subject, object)
/// return type: mass on the other role's classes counts as O.
inline Matrix single_to_sub_selector() {
  // rows: B-sub, I-sub, B-obj, I-obj, O ; cols: B, I, O
  return Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 1}, {0, 0, 1}});
}
inline Matrix single_to_obj_selector() {
  return Matrix::from_rows({{0, 0, 1}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
}

/// Row i of the subject matrix is softmax(W_sub^T (h_i + u_rel) + b_sub);
/// the object matrix uses W_obj. Returns (subject n x 3, object n x 3).
inline std::pair<ad::Var, ad::Var> tag_sequences_var(ad::Tape& t, ad::Var h,
                                                     int relation, const BoundDecoder& b) {
  ad::Var u = t.gather_rows(b.rel_emb, {relation});
  ad::Var hu = t.add_row(h, u);
  if (b.mode == TaggingMode::Dual) {
    ad::Var sub = t.softmax_rows(t.add_row(t.matmul(hu, b.w_sub), b.b_sub));
    ad::Var obj = t.softmax_rows(t.add_row(t.matmul(hu, b.w_obj), b.b_obj));
    return {sub, obj};
  }
  ad::Var p5 = t.softmax_rows(t.add_row(t.matmul(hu, b.w_tag), b.b_tag));
  ad::Var sub = t.matmul(p5, t.leaf(single_to_sub_selector()));
  ad::Var obj = t.matmul(p5, t.leaf(single_to_obj_selector()));
  return {sub, obj};
}

/// Entry (i, j) = sigmoid(W_glob^T [h_i ; h_j] + b_glob), subject start first.
/// Computed once per sentence; it does not depend on the relation.
inline ad::Var global_correspondence_var(ad::Tape& t, ad::Var h, const BoundDecoder& b) {
  int d = h.cols();
  ad::Var w_s = t.slice_rows(b.w_glob, 0, d);
  ad::Var w_o = t.slice_rows(b.w_glob, d, 2 * d);
  ad::Var row_scores = t.matmul(h, w_s); // n x 1
  ad::Var col_scores = t.matmul(h, w_o); // n x 1
  return t.sigmoid(t.add_scalar(t.outer_sum(row_scores, col_scores), b.b_glob));
}

/// Value-level operations ----------------------------------------------------

inline std::vector<double> predict_relations(const EncoderOutput& h, const DecoderParams& p) {
  p.check_h(h);
  ad::Tape t;
  const Matrix& out = predict_relations_var(t, t.leaf(h), bind(t, p)).value();
  return std::vector<double>(out.data(), out.data() + out.size());
}

/// {k : p_rel[k] > lambda1}; strictly greater, so a probability exactly at the
/// threshold is not selected. May be empty.
inline std::vector<int> select_relations(const std::vector<double>& p_rel, double lambda1) {
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(p_rel.size()); ++k)
    if (p_rel[k] > lambda1) out.push_back(k);
  return out;
}

inline std::pair<Matrix, Matrix> tag_sequences(const EncoderOutput& h, int relation,
                                               const DecoderParams& p) {
  p.check_h(h);
  if (relation < 0 || relation >= p.n_r)
    throw DimensionMismatch("tag_sequences: relation id " + std::to_string(relation) +
                            " out of range [0," + std::to_string(p.n_r) + ")");
  ad::Tape t;
  auto [sub, obj] = tag_sequences_var(t, t.leaf(h), relation, bind(t, p));
  return {sub.value(), obj.value()};
}

inline Matrix global_correspondence(const EncoderOutput& h, const DecoderParams& p) {
  p.check_h(h);
  ad::Tape t;
  return global_correspondence_var(t, t.leaf(h), bind(t, p)).value();
}

} // namespace prgc
