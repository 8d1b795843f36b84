#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "tea/slerp_adjust.hpp"

using namespace tea;
using testing::code_of;

namespace {

AdjustParams with(double alpha, double beta) {
  AdjustParams p;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("defaults") {
  AdjustParams p;
  CHECK(p.alpha == 0.2);
  CHECK(p.beta == 1.5);
  CHECK(p.zero_norm_policy == ZeroNormPolicy::error);
  CHECK(AdjustParams::prompt_defaults().zero_norm_policy == ZeroNormPolicy::passthrough);
}

TEST_CASE("parameter validation") {
  EmbeddingVector v{1, 0}, c{0, 1};
  CHECK(code_of([&] { adjust_token(v, c, with(-0.1, 1.0)); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([&] { adjust_token(v, c, with(1.1, 1.0)); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([&] { adjust_token(v, c, with(0.5, 0.0)); }) == ErrorCode::InvalidParameter);
  auto bad_tol = with(0.5, 1.0);
  bad_tol.parallel_tolerance = 0.0;
  CHECK(code_of([&] { adjust_token(v, c, bad_tol); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("orthogonal unit vectors at alpha 0.5") {
  auto out = adjust_token(EmbeddingVector{1, 0}, EmbeddingVector{0, 1}, with(0.5, 1.0));
  CHECK(std::abs(out[0] - std::sqrt(0.5)) < 1e-15);
  CHECK(std::abs(out[1] - std::sqrt(0.5)) < 1e-15);
}

TEST_CASE("endpoints") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> beta(0.2, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto v = oracle::gaussian(rng, 24, 2.0);
    auto c = oracle::gaussian(rng, 24);
    const double b = beta(rng);
    const double r = b * oracle::norm(c);
    auto at0 = adjust_token(v, c, with(0.0, b));
    auto at1 = adjust_token(v, c, with(1.0, b));
    CHECK(max_abs_diff(at0.values(), oracle::scaled(v, r)) < 1e-9 * r);
    CHECK(max_abs_diff(at1.values(), oracle::scaled(c, r)) < 1e-9 * r);
  }
}

TEST_CASE("matches textbook slerp and partitions the angle") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    auto v = oracle::gaussian(rng, 768, 3.0);
    auto c = oracle::gaussian(rng, 768);
    const double theta = oracle::angle(v, c);
    auto out = adjust_token(v, c, with(0.2, 1.5)).values();
    CHECK(max_abs_diff(out, oracle::slerp(v, c, 0.2, 1.5)) < 1e-9 * oracle::norm(c));
    CHECK(std::abs(oracle::angle(out, c) - 0.8 * theta) < 1e-7);
    CHECK(std::abs(oracle::angle(out, v) - 0.2 * theta) < 1e-7);
    CHECK(std::abs(oracle::angle(out, v) + oracle::angle(out, c) - theta) < 1e-6);
    CHECK(oracle::rel_err(oracle::norm(out), 1.5 * oracle::norm(c)) < 1e-9);
  }
}

TEST_CASE("output stays in span of the inputs") {
  std::mt19937_64 rng(23);
  auto v = oracle::gaussian(rng, 10);
  auto c = oracle::gaussian(rng, 10);
  auto out = adjust_token(v, c, with(0.37, 2.0)).values();
  // Residual after projecting onto an orthonormal basis of span{v, c}.
  auto e1 = oracle::scaled(v, 1.0);
  double vc = 0;
  for (std::size_t k = 0; k < 10; ++k) vc += c[k] * e1[k];
  oracle::Vec e2(10);
  for (std::size_t k = 0; k < 10; ++k) e2[k] = c[k] - vc * e1[k];
  e2 = oracle::scaled(e2, 1.0);
  double a = 0, b = 0;
  for (std::size_t k = 0; k < 10; ++k) {
    a += out[k] * e1[k];
    b += out[k] * e2[k];
  }
  double resid = 0;
  for (std::size_t k = 0; k < 10; ++k) resid += std::pow(out[k] - a * e1[k] - b * e2[k], 2);
  CHECK(std::sqrt(resid) < 1e-12 * oracle::norm(out));
}

TEST_CASE("rotation toward the concept is monotone in alpha") {
  std::mt19937_64 rng(24);
  auto v = oracle::gaussian(rng, 32);
  auto c = oracle::gaussian(rng, 32);
  double prev = 10.0;
  for (int i = 0; i <= 10; ++i) {
    const double a = oracle::angle(adjust_token(v, c, with(0.1 * i, 1.0)).values(), c);
    CHECK(a < prev);
    prev = a;
  }
}

TEST_CASE("alpha 1 is idempotent") {
  std::mt19937_64 rng(25);
  auto v = oracle::gaussian(rng, 16);
  auto c = oracle::gaussian(rng, 16);
  auto once = adjust_token(v, c, with(1.0, 1.0));
  auto twice = adjust_token(once, c, with(1.0, 1.0));
  CHECK(max_abs_diff(once.values(), twice.values()) < 1e-9);
}

TEST_CASE("near-parallel inputs fall back to normalized lerp") {
  std::vector<double> c{1.0, 0.0, 0.0};
  std::vector<double> v{2.0, 1e-9, 0.0};
  auto out = adjust_token(v, c, with(0.3, 1.5)).values();
  auto vh = oracle::scaled(v, 1.0);
  oracle::Vec mix(3);
  for (int k = 0; k < 3; ++k) mix[k] = 0.7 * vh[k] + 0.3 * c[k];
  CHECK(oracle::cosine(out, mix) > 1.0 - 1e-12);
  CHECK(oracle::rel_err(oracle::norm(out), 1.5) < 1e-9);

  std::vector<double> same{3.0, 0.0, 0.0};
  auto flat = adjust_token(same, c, with(0.5, 2.0)).values();
  CHECK(flat == std::vector<double>{2.0, 0.0, 0.0});
}

TEST_CASE("antipodal, zero-norm and dim errors") {
  CHECK(code_of([] { adjust_token(EmbeddingVector{1, 0}, EmbeddingVector{-1, 0}, AdjustParams{}); }) ==
        ErrorCode::AntipodalVectors);
  CHECK(code_of([] {
          adjust_token(EmbeddingVector{1, 0}, EmbeddingVector{-1, 1e-8}, AdjustParams{});
        }) == ErrorCode::AntipodalVectors);
  CHECK(code_of([] { adjust_token(EmbeddingVector{0, 0}, EmbeddingVector{1, 0}, AdjustParams{}); }) ==
        ErrorCode::ZeroNormVector);
  CHECK(code_of([] { adjust_token(EmbeddingVector{1, 0}, EmbeddingVector{0, 0}, AdjustParams{}); }) ==
        ErrorCode::ZeroNormVector);
  CHECK(code_of([] { adjust_token(EmbeddingVector{1, 0}, EmbeddingVector{1, 0, 0}, AdjustParams{}); }) ==
        ErrorCode::DimMismatch);

  auto pass = AdjustParams::prompt_defaults();
  CHECK(adjust_token(EmbeddingVector{0, 0}, EmbeddingVector{1, 0}, pass) == EmbeddingVector{0, 0});
}

TEST_CASE("beta heuristic") {
  CHECK(beta_heuristic(EmbeddingVector{6, 8}, EmbeddingVector{3, 4}) == 1.5);
  CHECK(beta_heuristic(EmbeddingVector{0, 5}, EmbeddingVector{3, 4}) == 1.0);
  CHECK(code_of([] { beta_heuristic(EmbeddingVector{0, 0}, EmbeddingVector{3, 4}); }) ==
        ErrorCode::ZeroNormVector);
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = oracle::gaussian(rng, 7);
    auto c = oracle::gaussian(rng, 7);
    const double want = (oracle::norm(v) + oracle::norm(c)) / (2 * oracle::norm(c));
    CHECK(oracle::rel_err(beta_heuristic(v, c), want) < 1e-12);
  }
}

TEST_CASE("prompt level") {
  SUBCASE("alpha 0 beta 1 on positions already at reference norm") {
    std::mt19937_64 rng(27);
    auto ref = oracle::gaussian_set(rng, 5, 8);
    oracle::Mat star;
    for (auto& r : ref) star.push_back(oracle::scaled(oracle::gaussian(rng, 8), oracle::norm(r)));
    PromptEmbedding ps(testing::to_matrix(star)), pc(testing::to_matrix(ref));
    auto out = adjust_prompt(ps, pc, with(0.0, 1.0));
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(max_abs_diff(testing::to_rows(out.positions())[i], star[i]) < 1e-9);
    }
  }
  SUBCASE("alpha 1 gives rescaled reference positions") {
    oracle::Mat star{{1, 2, 0}, {0, 1, 1}, {3, 0, 1}};
    oracle::Mat ref{{0, 0, 2}, {1, 0, 0}, {0, 4, 0}};
    auto out = adjust_prompt(PromptEmbedding(testing::to_matrix(star)),
                             PromptEmbedding(testing::to_matrix(ref)), with(1.0, 1.0));
    auto rows = testing::to_rows(out.positions());
    for (std::size_t i = 0; i < 3; ++i) CHECK(max_abs_diff(rows[i], ref[i]) < 1e-12);
  }
  SUBCASE("per-position norm at L=77 d=768") {
    std::mt19937_64 rng(28);
    auto star = oracle::gaussian_set(rng, 77, 768, 2.0);
    auto ref = oracle::gaussian_set(rng, 77, 768, 0.5);
    auto out = adjust_prompt(PromptEmbedding(testing::to_matrix(star)),
                             PromptEmbedding(testing::to_matrix(ref)), with(0.2, 1.5));
    auto rows = testing::to_rows(out.positions());
    for (std::size_t i = 0; i < 77; ++i) {
      CHECK(oracle::rel_err(oracle::norm(rows[i]), 1.5 * oracle::norm(ref[i])) < 1e-9);
    }
  }
}

TEST_CASE("prompt level zero positions and errors") {
  oracle::Mat star{{1, 0}, {0, 0}, {1, 1}};
  oracle::Mat ref{{0, 1}, {1, 0}, {-1, -1}};
  PromptEmbedding ps(testing::to_matrix(star)), pc(testing::to_matrix(ref));

  auto strict = AdjustParams::prompt_defaults();
  strict.zero_norm_policy = ZeroNormPolicy::error;
  try {
    adjust_prompt(ps, pc, strict);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroNormVector);
    const std::string msg = e.what();
    CHECK(msg.find("position 1") != std::string::npos);
    CHECK(msg.find("position 2") != std::string::npos);
  }

  // Passthrough copies the zero position; only the antipodal one still fails.
  CHECK(code_of([&] { adjust_prompt(ps, pc, AdjustParams::prompt_defaults()); }) ==
        ErrorCode::AntipodalVectors);
  auto out = adjust_prompt(ps, pc, AdjustParams::prompt_defaults(), 2);
  auto rows = testing::to_rows(out.positions());
  CHECK(rows[1] == oracle::Vec{0, 0});
  CHECK(rows[2] == oracle::Vec{1, 1});
  CHECK(oracle::rel_err(oracle::norm(rows[0]), 1.5) < 1e-12);

  PromptEmbedding short_one(testing::to_matrix({{1, 0}}));
  CHECK(code_of([&] { adjust_prompt(ps, short_one, AdjustParams{}); }) == ErrorCode::SequenceLengthMismatch);
  PromptEmbedding wide(testing::to_matrix({{1, 0, 0}, {1, 0, 0}, {1, 0, 0}}));
  CHECK(code_of([&] { adjust_prompt(ps, wide, AdjustParams{}); }) == ErrorCode::DimMismatch);
}

TEST_CASE("row-paired adjustment") {
  auto in = testing::to_matrix({{1, 0}, {0, 2}});
  auto ref = testing::to_matrix({{0, 1}, {1, 0}});
  auto out = adjust_rows(in, ref, with(1.0, 2.0));
  CHECK(testing::to_rows(out) == oracle::Mat{{0, 2}, {2, 0}});
  CHECK(code_of([&] { adjust_rows(in, testing::to_matrix({{1, 0}}), AdjustParams{}); }) ==
        ErrorCode::PairingMismatch);
  auto bad = testing::to_matrix({{0, 1}, {0, -1}});
  try {
    adjust_rows(in, bad, AdjustParams{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AntipodalVectors);
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}
