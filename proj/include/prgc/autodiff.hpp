#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "prgc/matrix.hpp"

namespace prgc::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid as long as the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  const Matrix& grad() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  double scalar() const {
    assert(rows() == 1 && cols() == 1);
    return value()(0, 0);
  }
};

/// Reverse-mode tape over Matrix values. A forward pass appends nodes; each
/// node stores a closure that scatters its output gradient back to its inputs.
/// The op set is exactly what the encoder, decoder and losses need; every op's
/// backward is covered by finite-difference tests.
class Tape {
public:
  static constexpr double kLogEps = 1e-12; // clamp before logs in losses

  Var leaf(Matrix m) { return push(std::move(m), {}, nullptr); }

  Var add(Var a, Var b) {
    if (!val(a).same_shape(val(b))) throw DimensionMismatch("add: shapes differ");
    Matrix out = val(a);
    const Matrix& bv = val(b);
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) += bv.at(i);
    return push(std::move(out), {a.id, b.id}, [](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      t.accumulate(n.inputs[0], [&](Matrix& ga) {
        for (std::size_t i = 0; i < ga.size(); ++i) ga.at(i) += g.at(i);
      });
      t.accumulate(n.inputs[1], [&](Matrix& gb) {
        for (std::size_t i = 0; i < gb.size(); ++i) gb.at(i) += g.at(i);
      });
    });
  }

  /// a (n x k) + row (1 x k), broadcast over rows.
  Var add_row(Var a, Var row) {
    if (val(row).rows() != 1 || val(row).cols() != val(a).cols())
      throw DimensionMismatch("add_row: want 1x" + std::to_string(val(a).cols()));
    Matrix out = val(a);
    const Matrix& rv = val(row);
    for (int r = 0; r < out.rows(); ++r)
      for (int c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
    return push(std::move(out), {a.id, row.id}, [](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      t.accumulate(n.inputs[0], [&](Matrix& ga) {
        for (std::size_t i = 0; i < ga.size(); ++i) ga.at(i) += g.at(i);
      });
      t.accumulate(n.inputs[1], [&](Matrix& gr) {
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
      });
    });
  }

  /// a + s, s a 1x1 var broadcast everywhere.
  Var add_scalar(Var a, Var s) {
    assert(val(s).rows() == 1 && val(s).cols() == 1);
    Matrix out = val(a);
    double sv = val(s)(0, 0);
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) += sv;
    return push(std::move(out), {a.id, s.id}, [](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      t.accumulate(n.inputs[0], [&](Matrix& ga) {
        for (std::size_t i = 0; i < ga.size(); ++i) ga.at(i) += g.at(i);
      });
      t.accumulate(n.inputs[1], [&](Matrix& gs) {
        double tot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) tot += g.at(i);
        gs(0, 0) += tot;
      });
    });
  }

  Var scale(Var a, double c) {
    Matrix out = val(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= c;
    return push(std::move(out), {a.id}, [c](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      t.accumulate(n.inputs[0], [&](Matrix& ga) {
        for (std::size_t i = 0; i < ga.size(); ++i) ga.at(i) += c * g.at(i);
      });
    });
  }

  /// (n x m) * (m x k) -> n x k
  Var matmul(Var a, Var b) {
    const Matrix& av = val(a);
    const Matrix& bv = val(b);
    if (av.cols() != bv.rows()) throw DimensionMismatch("matmul: inner dims differ");
    Matrix out(av.rows(), bv.cols());
    for (int r = 0; r < av.rows(); ++r)
      for (int k = 0; k < av.cols(); ++k) {
        double x = av(r, k);
        for (int c = 0; c < bv.cols(); ++c) out(r, c) += x * bv(k, c);
      }
    return push(std::move(out), {a.id, b.id}, [](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      const Matrix& av = t.val_by_id(n.inputs[0]);
      const Matrix& bv = t.val_by_id(n.inputs[1]);
      t.accumulate(n.inputs[0], [&](Matrix& ga) { // dA += G * B^T
        for (int r = 0; r < ga.rows(); ++r)
          for (int c = 0; c < ga.cols(); ++c) {
            double s = 0.0;
            for (int k = 0; k < g.cols(); ++k) s += g(r, k) * bv(c, k);
            ga(r, c) += s;
          }
      });
      t.accumulate(n.inputs[1], [&](Matrix& gb) { // dB += A^T * G
        for (int r = 0; r < gb.rows(); ++r)
          for (int c = 0; c < gb.cols(); ++c) {
            double s = 0.0;
            for (int k = 0; k < av.rows(); ++k) s += av(k, r) * g(k, c);
            gb(r, c) += s;
          }
      });
    });
  }

  /// (n x m) * (k x m)^T -> n x k
  Var matmul_nt(Var a, Var b) {
    const Matrix& av = val(a);
    const Matrix& bv = val(b);
    if (av.cols() != bv.cols()) throw DimensionMismatch("matmul_nt: inner dims differ");
    Matrix out(av.rows(), bv.rows());
    for (int r = 0; r < av.rows(); ++r)
      for (int c = 0; c < bv.rows(); ++c) {
        double s = 0.0;
        for (int k = 0; k < av.cols(); ++k) s += av(r, k) * bv(c, k);
        out(r, c) = s;
      }
    return push(std::move(out), {a.id, b.id}, [](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      const Matrix& av = t.val_by_id(n.inputs[0]);
      const Matrix& bv = t.val_by_id(n.inputs[1]);
      t.accumulate(n.inputs[0], [&](Matrix& ga) { // dA += G * B
        for (int r = 0; r < ga.rows(); ++r)
          for (int c = 0; c < ga.cols(); ++c) {
            double s = 0.0;
            for (int k = 0; k < g.cols(); ++k) s += g(r, k) * bv(k, c);
            ga(r, c) += s;
          }
      });
      t.accumulate(n.inputs[1], [&](Matrix& gb) { // dB += G^T * A
        for (int r = 0; r < gb.rows(); ++r)
          for (int c = 0; c < gb.cols(); ++c) {
            double s = 0.0;
            for (int k = 0; k < g.rows(); ++k) s += g(k, r) * av(k, c);
            gb(r, c) += s;
          }
      });
    });
  }

  /// Select rows of a by index (duplicates allowed); gradient scatter-adds.
  Var gather_rows(Var a, std::vector<int> idx) {
    const Matrix& av = val(a);
    Matrix out(static_cast<int>(idx.size()), av.cols());
    for (int r = 0; r < out.rows(); ++r) {
      assert(idx[r] >= 0 && idx[r] < av.rows());
      for (int c = 0; c < out.cols(); ++c) out(r, c) = av(idx[r], c);
    }
    return push(std::move(out), {a.id}, [idx](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      t.accumulate(n.inputs[0], [&](Matrix& ga) {
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < g.cols(); ++c) ga(idx[r], c) += g(r, c);
      });
    });
  }

  /// Rows [r0, r1) of a as a new matrix.
  Var slice_rows(Var a, int r0, int r1) {
    const Matrix& av = val(a);
    assert(0 <= r0 && r0 < r1 && r1 <= av.rows());
    Matrix out(r1 - r0, av.cols());
    for (int r = r0; r < r1; ++r)
      for (int c = 0; c < av.cols(); ++c) out(r - r0, c) = av(r, c);
    return push(std::move(out), {a.id}, [r0](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      t.accumulate(n.inputs[0], [&](Matrix& ga) {
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < g.cols(); ++c) ga(r0 + r, c) += g(r, c);
      });
    });
  }

  Var sigmoid(Var a) {
    Matrix out = val(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = sigmoid_scalar(out.at(i));
    return push_unary_from_output(a, std::move(out),
                                  [](double y) { return y * (1.0 - y); });
  }

  Var tanh(Var a) {
    Matrix out = val(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = std::tanh(out.at(i));
    return push_unary_from_output(a, std::move(out),
                                  [](double y) { return 1.0 - y * y; });
  }

  /// Row-wise softmax with max subtraction.
  Var softmax_rows(Var a) {
    Matrix out = val(a);
    for (int r = 0; r < out.rows(); ++r) {
      double mx = out(r, 0);
      for (int c = 1; c < out.cols(); ++c) mx = std::max(mx, out(r, c));
      double z = 0.0;
      for (int c = 0; c < out.cols(); ++c) {
        out(r, c) = std::exp(out(r, c) - mx);
        z += out(r, c);
      }
      for (int c = 0; c < out.cols(); ++c) out(r, c) /= z;
    }
    return push(std::move(out), {a.id}, [](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      const Matrix& y = n.value;
      t.accumulate(n.inputs[0], [&](Matrix& ga) {
        for (int r = 0; r < y.rows(); ++r) {
          double dot = 0.0;
          for (int c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
          for (int c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
        }
      });
    });
  }

  /// Column means: (n x k) -> (1 x k).
  Var mean_rows(Var a) {
    const Matrix& av = val(a);
    assert(av.rows() >= 1);
    Matrix out(1, av.cols());
    for (int c = 0; c < av.cols(); ++c) {
      double s = 0.0;
      for (int r = 0; r < av.rows(); ++r) s += av(r, c);
      out(0, c) = s / av.rows();
    }
    return push(std::move(out), {a.id}, [](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      t.accumulate(n.inputs[0], [&](Matrix& ga) {
        double inv = 1.0 / ga.rows();
        for (int r = 0; r < ga.rows(); ++r)
          for (int c = 0; c < ga.cols(); ++c) ga(r, c) += inv * g(0, c);
      });
    });
  }

  /// out[i][j] = u[i] + v[j], u and v column vectors (n x 1, m x 1).
  Var outer_sum(Var u, Var v) {
    const Matrix& uv = val(u);
    const Matrix& vv = val(v);
    assert(uv.cols() == 1 && vv.cols() == 1);
    Matrix out(uv.rows(), vv.rows());
    for (int i = 0; i < uv.rows(); ++i)
      for (int j = 0; j < vv.rows(); ++j) out(i, j) = uv(i, 0) + vv(j, 0);
    return push(std::move(out), {u.id, v.id}, [](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      t.accumulate(n.inputs[0], [&](Matrix& gu) {
        for (int i = 0; i < g.rows(); ++i) {
          double s = 0.0;
          for (int j = 0; j < g.cols(); ++j) s += g(i, j);
          gu(i, 0) += s;
        }
      });
      t.accumulate(n.inputs[1], [&](Matrix& gv) {
        for (int j = 0; j < g.cols(); ++j) {
          double s = 0.0;
          for (int i = 0; i < g.rows(); ++i) s += g(i, j);
          gv(j, 0) += s;
        }
      });
    });
  }

  /// Mean binary cross-entropy of p against a fixed 0/1 target, over all
  /// cells. Probabilities are clamped to [eps, 1-eps] before the logs.
  Var bce_mean(Var p, Matrix target) {
    const Matrix& pv = val(p);
    if (!pv.same_shape(target)) throw ShapeMismatch("bce_mean: shapes differ");
    double n = static_cast<double>(pv.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      double pc = clamp01(pv.at(i));
      double y = target.at(i);
      loss -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
    }
    Matrix out(1, 1);
    out(0, 0) = loss / n;
    return push(std::move(out), {p.id}, [target = std::move(target), n](Tape& t, const Node& nd) {
      double g = nd.grad(0, 0);
      const Matrix& pv = t.val_by_id(nd.inputs[0]);
      t.accumulate(nd.inputs[0], [&](Matrix& gp) {
        for (std::size_t i = 0; i < gp.size(); ++i) {
          double raw = pv.at(i);
          if (raw <= kLogEps || raw >= 1.0 - kLogEps) continue; // clamp saturated
          double y = target.at(i);
          gp.at(i) += g * (raw - y) / (raw * (1.0 - raw) * n);
        }
      });
    });
  }

  /// Sum over rows of -log P[i, pick[i]], with the same clamp as bce_mean.
  Var nll_sum(Var p, std::vector<int> pick) {
    const Matrix& pv = val(p);
    if (static_cast<int>(pick.size()) != pv.rows())
      throw LengthMismatch("nll_sum: one pick per row required");
    double loss = 0.0;
    for (int r = 0; r < pv.rows(); ++r) {
      assert(pick[r] >= 0 && pick[r] < pv.cols());
      loss -= std::log(clamp01(pv(r, pick[r])));
    }
    Matrix out(1, 1);
    out(0, 0) = loss;
    return push(std::move(out), {p.id}, [pick = std::move(pick)](Tape& t, const Node& nd) {
      double g = nd.grad(0, 0);
      const Matrix& pv = t.val_by_id(nd.inputs[0]);
      t.accumulate(nd.inputs[0], [&](Matrix& gp) {
        for (int r = 0; r < gp.rows(); ++r) {
          double raw = pv(r, pick[r]);
          if (raw <= kLogEps || raw >= 1.0 - kLogEps) continue;
          gp(r, pick[r]) += g * (-1.0 / raw);
        }
      });
    });
  }

  /// Run reverse accumulation from a scalar node.
  void backward(Var root) {
    assert(root.tape == this);
    const Matrix& rv = nodes_[root.id].value;
    assert(rv.rows() == 1 && rv.cols() == 1);
    for (Node& n : nodes_) {
      if (!n.grad.empty()) n.grad.fill(0.0);
    }
    ensure_grad(root.id);
    nodes_[root.id].grad(0, 0) = 1.0;
    for (int i = root.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      n.backward(*this, n);
    }
  }

  const Matrix& value_of(Var v) const { return nodes_[v.id].value; }
  const Matrix& grad_of(Var v) {
    ensure_grad(v.id);
    return nodes_[v.id].grad;
  }

  std::size_t node_count() const { return nodes_.size(); }

  static double sigmoid_scalar(double x) {
    if (x >= 0) {
      double z = std::exp(-x);
      return 1.0 / (1.0 + z);
    }
    double z = std::exp(x);
    return z / (1.0 + z);
  }

  static double clamp01(double p) {
    return std::min(std::max(p, kLogEps), 1.0 - kLogEps);
  }

private:
  struct Node {
    Matrix value;
    Matrix grad; // allocated on demand, same shape as value
    std::vector<int> inputs;
    std::function<void(Tape&, const Node&)> backward;
  };

  const Matrix& val(Var v) const { return nodes_[v.id].value; }
  const Matrix& val_by_id(int id) const { return nodes_[id].value; }

  void ensure_grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty() && !n.value.empty())
      n.grad = Matrix(n.value.rows(), n.value.cols());
  }

  template <class F>
  void accumulate(int input_id, F&& f) {
    ensure_grad(input_id);
    f(nodes_[input_id].grad);
  }

  Var push(Matrix value, std::vector<int> inputs,
           std::function<void(Tape&, const Node&)> backward) {
    nodes_.push_back(Node{std::move(value), Matrix(), std::move(inputs), std::move(backward)});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  /// Elementwise unary op whose local derivative is a function of the output.
  template <class DFromY>
  Var push_unary_from_output(Var a, Matrix out, DFromY dy) {
    return push(std::move(out), {a.id}, [dy](Tape& t, const Node& n) {
      const Matrix& g = n.grad;
      const Matrix& y = n.value;
      t.accumulate(n.inputs[0], [&](Matrix& ga) {
        for (std::size_t i = 0; i < ga.size(); ++i) ga.at(i) += g.at(i) * dy(y.at(i));
      });
    });
  }

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape->value_of(*this); }
inline const Matrix& Var::grad() const { return tape->grad_of(*this); }

} // namespace prgc::ad
