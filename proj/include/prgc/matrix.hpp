#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prgc/errors.hpp"

namespace prgc {

/// Dense row-major matrix of doubles. Row and column vectors are just
/// n x 1 and 1 x n matrices.
class Matrix {
public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        v_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    assert(rows >= 0 && cols >= 0);
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<int>(rows.size()),
             rows.size() ? static_cast<int>(rows.begin()->size()) : 0);
    int r = 0;
    for (const auto& row : rows) {
      assert(static_cast<int>(row.size()) == m.cols_);
      int c = 0;
      for (double x : row) m(r, c++) = x;
      ++r;
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return v_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return v_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double& at(std::size_t i) { return v_[i]; }
  double at(std::size_t i) const { return v_[i]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

/// Deterministic random source. The bit-to-double mapping is spelled out here
/// instead of using std::uniform_real_distribution, whose output is
/// implementation-defined; the same seed must reproduce the same stream on any
/// standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    assert(n > 0);
    return bits() % n;
  }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    assert(hi >= lo);
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Fisher-Yates; std::shuffle is not reproducible across standard libraries.
  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

  std::string state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    if (is.fail()) throw ConfigError("Rng::set_state: malformed state string");
  }

private:
  std::mt19937_64 gen_;
};

/// Uniform init in [-1/sqrt(d), +1/sqrt(d)]; biases stay zero by convention.
inline void init_uniform(Matrix& m, int d, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < m.size(); ++i) m.at(i) = rng.uniform(-bound, bound);
}

} // namespace prgc
