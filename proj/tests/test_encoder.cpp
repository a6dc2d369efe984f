#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "prgc/encoder.hpp"

using namespace prgc;

namespace {

DeskEncoder make_encoder(int d, int layers, Rng& rng, std::vector<std::string> extra = {}) {
  Vocab v;
  for (const auto& t : {"a", "b", "c", "x", "y", "z"}) v.add(t);
  for (const auto& t : extra) v.add(t);
  EncoderConfig cfg;
  cfg.d = d;
  cfg.layers = layers;
  cfg.max_len = 10;
  return DeskEncoder(cfg, v, rng);
}

} // namespace

TEST_CASE("encode shape contract: one row per token") {
  Rng rng(1);
  DeskEncoder enc = make_encoder(6, 2, rng);
  EncoderOutput h1 = enc.encode(Sentence("s", {"a"}));
  CHECK(h1.rows() == 1);
  CHECK(h1.cols() == 6);
  EncoderOutput h3 = enc.encode(Sentence("s", {"a", "b", "c"}));
  CHECK(h3.rows() == 3);
  CHECK(h3.all_finite());
}

TEST_CASE("identical sentences encode identically") {
  Rng rng(2);
  DeskEncoder enc = make_encoder(8, 2, rng);
  Sentence s("s", {"a", "b", "c", "x"});
  EncoderOutput h1 = enc.encode(s);
  EncoderOutput h2 = enc.encode(s);
  for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1.at(i) == h2.at(i));
}

TEST_CASE("context dependence: the same token's row differs across contexts") {
  Rng rng(3);
  DeskEncoder enc = make_encoder(8, 2, rng);
  EncoderOutput ha = enc.encode(Sentence("s", {"a", "b"}));
  EncoderOutput hb = enc.encode(Sentence("s", {"a", "c"}));
  double diff = 0;
  for (int c = 0; c < 8; ++c) diff += std::fabs(ha(0, c) - hb(0, c));
  CHECK(diff > 1e-6); // token "a" at position 0 in both, neighbors differ
}

TEST_CASE("unknown tokens map to the reserved unk id") {
  Rng rng(4);
  DeskEncoder enc = make_encoder(4, 1, rng);
  std::vector<int> ids = enc.token_ids(Sentence("s", {"a", "never_seen"}));
  CHECK(ids[0] != Vocab::kUnkId);
  CHECK(ids[1] == Vocab::kUnkId);
}

TEST_CASE("sentences over max_len are rejected") {
  Rng rng(5);
  DeskEncoder enc = make_encoder(4, 1, rng); // max_len 10
  std::vector<std::string> toks(11, "a");
  CHECK_THROWS_AS(enc.encode(Sentence("s", toks)), SentenceTooLong);
}

TEST_CASE("avgpool examples and brute-force agreement") {
  Matrix same(3, 2);
  for (int r = 0; r < 3; ++r) {
    same(r, 0) = 7.0;
    same(r, 1) = -2.0;
  }
  auto p = avgpool(same);
  CHECK(p[0] == 7.0);
  CHECK(p[1] == -2.0);

  Matrix two = Matrix::from_rows({{1, 0}, {0, 1}});
  auto q = avgpool(two);
  CHECK(q[0] == Catch::Approx(0.5));
  CHECK(q[1] == Catch::Approx(0.5));

  Matrix one = Matrix::from_rows({{3, 4, 5}});
  auto r1 = avgpool(one);
  CHECK(r1[2] == 5.0);

  Rng rng(6);
  Matrix m(5, 4);
  for (std::size_t i = 0; i < m.size(); ++i) m.at(i) = rng.uniform(-2, 2);
  auto got = avgpool(m);
  for (int c = 0; c < 4; ++c) {
    double s = 0;
    for (int r = 0; r < 5; ++r) s += m(r, c);
    CHECK(std::fabs(got[c] - s / 5) < 1e-9);
  }
}

TEST_CASE("encoder gradients match finite differences") {
  Rng rng(7);
  DeskEncoder enc = make_encoder(6, 2, rng);
  Sentence s("s", {"a", "b", "c", "x", "y"});
  std::vector<int> ids = enc.token_ids(s);

  // scalar head so the whole encoder output receives gradient
  Matrix target(5, 6, 1.0);
  auto loss_at = [&](DeskEncoder& e) -> double {
    ad::Tape t;
    auto b = e.bind(t);
    ad::Var h = e.encode_var(t, b, ids);
    return t.bce_mean(t.sigmoid(h), target).scalar();
  };

  ad::Tape tape;
  auto bound = enc.bind(tape);
  ad::Var loss = tape.bce_mean(tape.sigmoid(enc.encode_var(tape, bound, ids)), target);
  tape.backward(loss);

  std::vector<ad::Var> bound_vars = bound.all();
  std::vector<ParamRef> params = enc.parameters();
  REQUIRE(bound_vars.size() == params.size());

  const double h = 1e-5;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const Matrix& analytic = bound_vars[pi].grad();
    for (std::size_t k = 0; k < params[pi].tensor->size(); ++k) {
      double saved = params[pi].tensor->at(k);
      params[pi].tensor->at(k) = saved + h;
      double up = loss_at(enc);
      params[pi].tensor->at(k) = saved - h;
      double down = loss_at(enc);
      params[pi].tensor->at(k) = saved;
      double fd = (up - down) / (2 * h);
      double got = analytic.at(k);
      double scale = std::max({1.0, std::fabs(fd), std::fabs(got)});
      INFO(params[pi].name << " element " << k);
      REQUIRE(std::fabs(fd - got) <= 1e-4 * scale);
    }
  }
}

TEST_CASE("config validation") {
  EncoderConfig bad;
  bad.d = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.d = 4;
  bad.arch = "rnn";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
