#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "prgc/autodiff.hpp"
#include "prgc/core.hpp"
#include "prgc/matrix.hpp"

namespace prgc {

/// Token vocabulary. Id 0 is reserved for unknown tokens.
class Vocab {
public:
  static constexpr int kUnkId = 0;

  Vocab() { tokens_.push_back("<unk>"); }
  explicit Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.empty() || tokens_[0] != "<unk>")
      throw ConfigError("Vocab: token list must start with <unk>");
    for (int i = 0; i < size(); ++i) index_[tokens_[i]] = i;
  }

  /// Insert tokens in first-appearance order.
  void add(const std::string& tok) {
    if (index_.count(tok)) return;
    index_[tok] = size();
    tokens_.push_back(tok);
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(const std::string& tok) const {
    auto it = index_.find(tok);
    return it == index_.end() ? kUnkId : it->second;
  }
  const std::vector<std::string>& tokens() const { return tokens_; }

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

inline Vocab build_vocab(const std::vector<AnnotatedSentence>& corpus) {
  Vocab v;
  for (const auto& s : corpus)
    for (const auto& tok : s.sentence.tokens) v.add(tok);
  return v;
}

struct EncoderConfig {
  int d = 32;       // embedding dimension, >= 2
  int layers = 2;   // context-mixing layers
  int max_len = 100;
  std::string arch = "attn"; // single-head self-attention mixing

  void validate() const {
    if (d < 2) throw ConfigError("EncoderConfig: d must be >= 2");
    if (layers < 0) throw ConfigError("EncoderConfig: layers must be >= 0");
    if (max_len < 1) throw ConfigError("EncoderConfig: max_len must be >= 1");
    if (arch != "attn") throw ConfigError("EncoderConfig: unknown arch '" + arch + "'");
  }
};

/// Token representations for one sentence: row i is h_i, one row per token.
using EncoderOutput = Matrix;

/// Component-wise mean over the token rows.
inline std::vector<double> avgpool(const EncoderOutput& h) {
  if (h.rows() < 1) throw DimensionMismatch("avgpool: empty input");
  std::vector<double> out(static_cast<std::size_t>(h.cols()), 0.0);
  for (int c = 0; c < h.cols(); ++c) {
    double s = 0.0;
    for (int r = 0; r < h.rows(); ++r) s += h(r, c);
    out[c] = s / h.rows();
  }
  return out;
}

/// Named view of one trainable tensor; the optimizer and checkpoint walk these.
struct ParamRef {
  std::string name;
  Matrix* tensor;
};

/// Pluggable sentence encoder contract: n tokens in, n x d matrix out with
/// row i belonging to token i. Implementations backed by subword models must
/// pool the pieces of each word back to a single row (first-piece convention)
/// so token indices stay aligned with tags and spans.
class Encoder {
public:
  virtual ~Encoder() = default;
  virtual int dim() const = 0;
  virtual int max_len() const = 0;
  virtual EncoderOutput encode(const Sentence& s) const = 0;
};

/// Trainable desk-scale encoder: token + position embeddings followed by
/// `layers` rounds of single-head self-attention mixing,
///   h <- tanh((h + Attn(h)) W_o + b_o).
/// Outputs are context dependent: permuting tokens may change every row.
class DeskEncoder final : public Encoder {
public:
  struct Layer {
    Matrix wq, wk, wv; // d x d
    Matrix wo;         // d x d
    Matrix bo;         // 1 x d
  };

  DeskEncoder() = default;

  /// Random initialization (uniform +-1/sqrt(d), zero biases).
  DeskEncoder(EncoderConfig cfg, Vocab vocab, Rng& rng)
      : cfg_(std::move(cfg)), vocab_(std::move(vocab)) {
    cfg_.validate();
    tok_emb_ = Matrix(vocab_.size(), cfg_.d);
    pos_emb_ = Matrix(cfg_.max_len, cfg_.d);
    init_uniform(tok_emb_, cfg_.d, rng);
    init_uniform(pos_emb_, cfg_.d, rng);
    layers_.resize(static_cast<std::size_t>(cfg_.layers));
    for (auto& l : layers_) {
      l.wq = Matrix(cfg_.d, cfg_.d);
      l.wk = Matrix(cfg_.d, cfg_.d);
      l.wv = Matrix(cfg_.d, cfg_.d);
      l.wo = Matrix(cfg_.d, cfg_.d);
      l.bo = Matrix(1, cfg_.d);
      init_uniform(l.wq, cfg_.d, rng);
      init_uniform(l.wk, cfg_.d, rng);
      init_uniform(l.wv, cfg_.d, rng);
      init_uniform(l.wo, cfg_.d, rng);
    }
  }

  int dim() const override { return cfg_.d; }
  int max_len() const override { return cfg_.max_len; }
  const EncoderConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }

  std::vector<int> token_ids(const Sentence& s) const {
    if (s.length() > cfg_.max_len)
      throw SentenceTooLong("encode: sentence '" + s.id + "' has " +
                            std::to_string(s.length()) + " tokens, max_len is " +
                            std::to_string(cfg_.max_len));
    std::vector<int> ids(s.tokens.size());
    for (std::size_t i = 0; i < s.tokens.size(); ++i) ids[i] = vocab_.id(s.tokens[i]);
    return ids;
  }

  /// Tape forward; use for training. Parameter leaves come from bind().
  struct Bound {
    ad::Var tok_emb, pos_emb;
    struct BoundLayer {
      ad::Var wq, wk, wv, wo, bo;
    };
    std::vector<BoundLayer> layers;

    /// Vars in the same order as DeskEncoder::parameters().
    std::vector<ad::Var> all() const {
      std::vector<ad::Var> vs{tok_emb, pos_emb};
      for (const auto& l : layers) {
        vs.push_back(l.wq);
        vs.push_back(l.wk);
        vs.push_back(l.wv);
        vs.push_back(l.wo);
        vs.push_back(l.bo);
      }
      return vs;
    }
  };

  Bound bind(ad::Tape& t) const {
    Bound b;
    b.tok_emb = t.leaf(tok_emb_);
    b.pos_emb = t.leaf(pos_emb_);
    for (const auto& l : layers_)
      b.layers.push_back({t.leaf(l.wq), t.leaf(l.wk), t.leaf(l.wv), t.leaf(l.wo), t.leaf(l.bo)});
    return b;
  }

  ad::Var encode_var(ad::Tape& t, const Bound& b, const std::vector<int>& ids) const {
    int n = static_cast<int>(ids.size());
    std::vector<int> pos(ids.size());
    for (int i = 0; i < n; ++i) pos[i] = i;
    ad::Var h = t.add(t.gather_rows(b.tok_emb, ids), t.gather_rows(b.pos_emb, pos));
    double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.d));
    for (const auto& l : b.layers) {
      ad::Var q = t.matmul(h, l.wq);
      ad::Var k = t.matmul(h, l.wk);
      ad::Var v = t.matmul(h, l.wv);
      ad::Var att = t.softmax_rows(t.scale(t.matmul_nt(q, k), inv_sqrt_d));
      ad::Var ctx = t.matmul(att, v);
      h = t.tanh(t.add_row(t.matmul(t.add(h, ctx), l.wo), l.bo));
    }
    return h;
  }

  EncoderOutput encode(const Sentence& s) const override {
    ad::Tape t;
    return encode_var(t, bind(t), token_ids(s)).value();
  }

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> ps;
    ps.push_back({"enc.tok_emb", &tok_emb_});
    ps.push_back({"enc.pos_emb", &pos_emb_});
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      std::string p = "enc.layer" + std::to_string(i) + ".";
      ps.push_back({p + "wq", &layers_[i].wq});
      ps.push_back({p + "wk", &layers_[i].wk});
      ps.push_back({p + "wv", &layers_[i].wv});
      ps.push_back({p + "wo", &layers_[i].wo});
      ps.push_back({p + "bo", &layers_[i].bo});
    }
    return ps;
  }

private:
  EncoderConfig cfg_;
  Vocab vocab_;
  Matrix tok_emb_; // V x d
  Matrix pos_emb_; // max_len x d
  std::vector<Layer> layers_;
};

} // namespace prgc
