#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "prgc/decoder.hpp"

using namespace prgc;

namespace {

Matrix random_h(int n, int d, Rng& rng) {
  Matrix h(n, d);
  for (std::size_t i = 0; i < h.size(); ++i) h.at(i) = rng.uniform(-1, 1);
  return h;
}

DecoderParams random_params(int d, int n_r, TaggingMode mode, std::uint64_t seed) {
  Rng rng(seed);
  return DecoderParams(d, n_r, mode, rng);
}

DecoderParams zero_params(int d, int n_r, TaggingMode mode = TaggingMode::Dual) {
  Rng rng(0);
  DecoderParams p(d, n_r, mode, rng);
  for (ParamRef& ref : p.parameters()) ref.tensor->fill(0.0);
  return p;
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

TEST_CASE("predict_relations: zero weights give 0.5 everywhere") {
  DecoderParams p = zero_params(4, 3);
  Rng rng(1);
  Matrix h = random_h(5, 4, rng);
  for (double v : predict_relations(h, p)) CHECK(v == 0.5);
}

TEST_CASE("predict_relations: raising one bias strictly raises that probability") {
  Rng rng(2);
  DecoderParams p = random_params(4, 3, TaggingMode::Dual, 2);
  Matrix h = random_h(4, 4, rng);
  double prev = predict_relations(h, p)[1];
  for (double bump : {1.0, 3.0, 9.0, 27.0}) {
    p.b_rel(0, 1) += bump;
    double cur = predict_relations(h, p)[1];
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK(prev > 0.999);
}

TEST_CASE("predict_relations matches a scalar-loop reference within 1e-9") {
  Rng rng(3);
  DecoderParams p = random_params(4, 3, TaggingMode::Dual, 3);
  Matrix h = random_h(6, 4, rng);
  std::vector<double> got = predict_relations(h, p);
  for (int k = 0; k < 3; ++k) {
    double pooled_dot = 0;
    for (int c = 0; c < 4; ++c) {
      double mean = 0;
      for (int r = 0; r < 6; ++r) mean += h(r, c);
      pooled_dot += (mean / 6) * p.w_rel(c, k);
    }
    CHECK(std::fabs(got[k] - sigmoid_ref(pooled_dot + p.b_rel(0, k))) < 1e-9);
  }
}

TEST_CASE("select_relations thresholds strictly") {
  CHECK(select_relations({0.9, 0.3}, 0.5) == std::vector<int>{0});
  CHECK(select_relations({0.5, 0.5}, 0.5).empty()); // boundary excluded
  CHECK(select_relations({0.6, 0.7, 0.1}, 0.55) == std::vector<int>{0, 1});
  CHECK(select_relations({}, 0.5).empty());
}

TEST_CASE("select_relations agrees with thresholding logits at logit(lambda1)") {
  Rng rng(4);
  for (int iter = 0; iter < 200; ++iter) {
    double lambda1 = rng.uniform(0.05, 0.95);
    double logit_cut = std::log(lambda1 / (1 - lambda1));
    std::vector<double> logits, probs;
    for (int k = 0; k < 6; ++k) {
      logits.push_back(rng.uniform(-4, 4));
      probs.push_back(sigmoid_ref(logits.back()));
    }
    std::vector<int> by_logit;
    for (int k = 0; k < 6; ++k)
      if (logits[k] > logit_cut) by_logit.push_back(k);
    CHECK(select_relations(probs, lambda1) == by_logit);
  }
}

TEST_CASE("tag_sequences: zero weights give uniform rows in dual mode") {
  DecoderParams p = zero_params(4, 2);
  Rng rng(5);
  Matrix h = random_h(3, 4, rng);
  auto [sub, obj] = tag_sequences(h, 0, p);
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 3; ++t) {
      CHECK(sub(i, t) == Catch::Approx(1.0 / 3).epsilon(1e-12));
      CHECK(obj(i, t) == Catch::Approx(1.0 / 3).epsilon(1e-12));
    }
}

TEST_CASE("tag_sequences rows always sum to one") {
  for (TaggingMode mode : {TaggingMode::Dual, TaggingMode::Single}) {
    Rng rng(6);
    DecoderParams p = random_params(5, 3, mode, 6);
    Matrix h = random_h(4, 5, rng);
    for (int rel = 0; rel < 3; ++rel) {
      auto [sub, obj] = tag_sequences(h, rel, p);
      for (int i = 0; i < 4; ++i) {
        double ssum = sub(i, 0) + sub(i, 1) + sub(i, 2);
        double osum = obj(i, 0) + obj(i, 1) + obj(i, 2);
        CHECK(std::fabs(ssum - 1.0) < 1e-6);
        CHECK(std::fabs(osum - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("tag_sequences matches a scalar-loop reference within 1e-9") {
  Rng rng(7);
  DecoderParams p = random_params(4, 3, TaggingMode::Dual, 7);
  Matrix h = random_h(3, 4, rng);
  int rel = 2;
  auto [sub, obj] = tag_sequences(h, rel, p);
  for (int i = 0; i < 3; ++i) {
    double z[3], zo[3];
    for (int t = 0; t < 3; ++t) {
      z[t] = p.b_sub(0, t);
      zo[t] = p.b_obj(0, t);
      for (int c = 0; c < 4; ++c) {
        z[t] += (h(i, c) + p.rel_emb(rel, c)) * p.w_sub(c, t);
        zo[t] += (h(i, c) + p.rel_emb(rel, c)) * p.w_obj(c, t);
      }
    }
    double zs = std::exp(z[0]) + std::exp(z[1]) + std::exp(z[2]);
    double zos = std::exp(zo[0]) + std::exp(zo[1]) + std::exp(zo[2]);
    for (int t = 0; t < 3; ++t) {
      CHECK(std::fabs(sub(i, t) - std::exp(z[t]) / zs) < 1e-9);
      CHECK(std::fabs(obj(i, t) - std::exp(zo[t]) / zos) < 1e-9);
    }
  }
}

TEST_CASE("tag_sequences single mode folds the 5-class tagger") {
  Rng rng(8);
  DecoderParams p = random_params(4, 2, TaggingMode::Single, 8);
  Matrix h = random_h(3, 4, rng);
  auto [sub, obj] = tag_sequences(h, 1, p);
  for (int i = 0; i < 3; ++i) {
    double z[5];
    for (int t = 0; t < 5; ++t) {
      z[t] = p.b_tag(0, t);
      for (int c = 0; c < 4; ++c) z[t] += (h(i, c) + p.rel_emb(1, c)) * p.w_tag(c, t);
    }
    double tot = 0;
    for (double& x : z) tot += std::exp(x);
    double p5[5];
    for (int t = 0; t < 5; ++t) p5[t] = std::exp(z[t]) / tot;
    CHECK(std::fabs(sub(i, 0) - p5[0]) < 1e-9);
    CHECK(std::fabs(sub(i, 1) - p5[1]) < 1e-9);
    CHECK(std::fabs(sub(i, 2) - (p5[2] + p5[3] + p5[4])) < 1e-9);
    CHECK(std::fabs(obj(i, 0) - p5[2]) < 1e-9);
    CHECK(std::fabs(obj(i, 1) - p5[3]) < 1e-9);
    CHECK(std::fabs(obj(i, 2) - (p5[0] + p5[1] + p5[4])) < 1e-9);
  }
}

TEST_CASE("global_correspondence: zero weights give 0.5; shape follows n") {
  DecoderParams p = zero_params(4, 2);
  Rng rng(9);
  Matrix corr = global_correspondence(random_h(3, 4, rng), p);
  CHECK(corr.rows() == 3);
  CHECK(corr.cols() == 3);
  for (std::size_t i = 0; i < corr.size(); ++i) CHECK(corr.at(i) == 0.5);

  Matrix one = global_correspondence(random_h(1, 4, rng), p);
  CHECK(one.rows() == 1);
  CHECK(one.cols() == 1);
}

TEST_CASE("global_correspondence matches a scalar-loop reference within 1e-9") {
  Rng rng(10);
  DecoderParams p = random_params(4, 3, TaggingMode::Dual, 10);
  Matrix h = random_h(3, 4, rng);
  Matrix corr = global_correspondence(h, p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double z = p.b_glob(0, 0);
      for (int c = 0; c < 4; ++c) z += p.w_glob(c, 0) * h(i, c);
      for (int c = 0; c < 4; ++c) z += p.w_glob(4 + c, 0) * h(j, c);
      CHECK(std::fabs(corr(i, j) - sigmoid_ref(z)) < 1e-9);
    }
}

TEST_CASE("corr cell (i,j) depends only on rows i and j") {
  Rng rng(11);
  DecoderParams p = random_params(5, 2, TaggingMode::Dual, 11);
  Matrix h = random_h(4, 5, rng);
  Matrix before = global_correspondence(h, p);
  for (int c = 0; c < 5; ++c) h(3, c) += 0.77; // perturb an unrelated row
  Matrix after = global_correspondence(h, p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(before(i, j) == after(i, j));
  CHECK(before(3, 0) != after(3, 0));
  CHECK(before(0, 3) != after(0, 3));
}

TEST_CASE("dimension mismatches are rejected") {
  Rng rng(12);
  DecoderParams p = random_params(4, 2, TaggingMode::Dual, 12);
  Matrix h = random_h(3, 5, rng); // wrong d
  CHECK_THROWS_AS(predict_relations(h, p), DimensionMismatch);
  CHECK_THROWS_AS(global_correspondence(h, p), DimensionMismatch);
  Matrix ok = random_h(3, 4, rng);
  CHECK_THROWS_AS(tag_sequences(ok, 5, p), DimensionMismatch); // relation out of range
}

TEST_CASE("decoder gradients match finite differences") {
  for (TaggingMode mode : {TaggingMode::Dual, TaggingMode::Single}) {
    Rng rng(13);
    int d = 5, n_r = 3, n = 4;
    DecoderParams p = random_params(d, n_r, mode, 13);
    Matrix h = random_h(n, d, rng);

    // composite scalar touching all three components and every tensor
    auto value = [&](DecoderParams& dp) -> double {
      ad::Tape t;
      BoundDecoder b = bind(t, dp);
      ad::Var hv = t.leaf(h);
      ad::Var p_rel = predict_relations_var(t, hv, b);
      ad::Var corr = global_correspondence_var(t, hv, b);
      ad::Var total = t.bce_mean(p_rel, Matrix(1, n_r, 1.0));
      total = t.add(total, t.bce_mean(corr, Matrix(n, n, 0.0)));
      for (int rel = 0; rel < n_r; ++rel) {
        auto [sub, obj] = tag_sequences_var(t, hv, rel, b);
        total = t.add(total, t.scale(t.nll_sum(sub, {0, 1, 2, 0}), 0.1));
        total = t.add(total, t.scale(t.nll_sum(obj, {2, 2, 1, 0}), 0.1));
      }
      return total.scalar();
    };

    ad::Tape tape;
    BoundDecoder bound = bind(tape, p);
    ad::Var hv = tape.leaf(h);
    ad::Var p_rel = predict_relations_var(tape, hv, bound);
    ad::Var corr = global_correspondence_var(tape, hv, bound);
    ad::Var total = tape.bce_mean(p_rel, Matrix(1, n_r, 1.0));
    total = tape.add(total, tape.bce_mean(corr, Matrix(n, n, 0.0)));
    for (int rel = 0; rel < n_r; ++rel) {
      auto [sub, obj] = tag_sequences_var(tape, hv, rel, bound);
      total = tape.add(total, tape.scale(tape.nll_sum(sub, {0, 1, 2, 0}), 0.1));
      total = tape.add(total, tape.scale(tape.nll_sum(obj, {2, 2, 1, 0}), 0.1));
    }
    tape.backward(total);

    std::vector<ad::Var> bound_vars = bound.all();
    std::vector<ParamRef> params = p.parameters();
    REQUIRE(bound_vars.size() == params.size());
    const double step = 1e-5;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      for (std::size_t k = 0; k < params[pi].tensor->size(); ++k) {
        double saved = params[pi].tensor->at(k);
        params[pi].tensor->at(k) = saved + step;
        double up = value(p);
        params[pi].tensor->at(k) = saved - step;
        double down = value(p);
        params[pi].tensor->at(k) = saved;
        double fd = (up - down) / (2 * step);
        double got = bound_vars[pi].grad().at(k);
        double scale = std::max({1.0, std::fabs(fd), std::fabs(got)});
        INFO(to_string(mode) << " " << params[pi].name << " element " << k);
        REQUIRE(std::fabs(fd - got) <= 1e-4 * scale);
      }
    }
  }
}
