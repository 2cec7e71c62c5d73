#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "saekit/errors.hpp"
#include "saekit/optim.hpp"

namespace op = saekit::optim;
namespace md = saekit::model;
using saekit::hloss::Grads;
using saekit::linalg::Matrix;
using saekit::linalg::Rng;

namespace {

md::SaeParams scalar_params(float w) {
  md::SaeParams p;
  p.w_enc = Matrix(1, 1, {w});
  p.w_dec = Matrix(1, 1, {1.0f});
  p.b_enc = {0.0f};
  p.b_dec = {0.0f};
  return p;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves params unchanged") {
  Rng rng(1);
  auto p = md::init(8, 4, rng);
  const auto before = p;
  auto g = Grads::zeros_like(p);
  auto st = op::AdamState::for_params(p);
  for (int i = 0; i < 5; ++i) op::adam_step(p, g, st);
  CHECK(p == before);
  CHECK(st.step == 5);
}

TEST_CASE("adam: first step moves each coordinate by about -lr·sign(g)") {
  Rng rng(2);
  auto p = md::init(6, 3, rng);
  const auto before = p;
  auto g = Grads::zeros_like(p);
  for (float& v : g.w_enc.data()) v = static_cast<float>(rng.normal());
  auto st = op::AdamState::for_params(p);
  op::adam_step(p, g, st);
  for (std::size_t i = 0; i < p.w_enc.size(); ++i) {
    const double delta = p.w_enc.data()[i] - before.w_enc.data()[i];
    const double expect = -0.0008 * (g.w_enc.data()[i] > 0 ? 1.0 : -1.0);
    CHECK(std::abs(delta - expect) < 1e-6);
  }
}

TEST_CASE("adam: trajectory on w² matches the f64 reference") {
  auto p = scalar_params(1.0f);
  auto st = op::AdamState::for_params(p);
  oracle::AdamReference ref{0.0008, 0.9, 0.999, 1e-8};
  double w = 1.0;
  for (int t = 0; t < 10; ++t) {
    auto g = Grads::zeros_like(p);
    g.w_enc(0, 0) = 2.0f * p.w_enc(0, 0);
    op::adam_step(p, g, st);
    w = ref.step(w, 2.0 * w);
    CHECK(std::abs(p.w_enc(0, 0) - w) < 1e-6);
  }
}

TEST_CASE("adam: shape mismatch throws") {
  Rng rng(3);
  auto p = md::init(4, 2, rng);
  auto st = op::AdamState::for_params(p);
  Rng rng2(3);
  const auto other = md::init(5, 2, rng2);
  CHECK_THROWS_AS(op::adam_step(p, Grads::zeros_like(other), st), saekit::ShapeError);
}

TEST_CASE("decoder projection: parallel, orthogonal, idempotent") {
  md::SaeParams p = scalar_params(0.0f);
  p.w_enc = Matrix(3, 2);
  p.w_dec = Matrix(3, 2, {1.0f, 0.0f, 0.0f, 1.0f, 0.0f, 0.0f});
  p.b_enc.assign(3, 0.0f);
  p.b_dec.assign(2, 0.0f);
  auto g = Grads::zeros_like(p);
  g.w_dec = Matrix(3, 2, {3.0f, 0.0f, 2.0f, 0.0f, 1.0f, 1.0f});
  CHECK(op::project_decoder_grads(p, g) == 1);
  CHECK(g.w_dec(0, 0) == 0.0f);
  CHECK(g.w_dec(0, 1) == 0.0f);
  CHECK(g.w_dec(1, 0) == 2.0f);
  CHECK(g.w_dec(1, 1) == 0.0f);
  CHECK(g.w_dec(2, 0) == 1.0f);
  CHECK(g.w_dec(2, 1) == 1.0f);

  Rng rng(4);
  auto q = md::init(10, 6, rng);
  auto gr = Grads::zeros_like(q);
  gr.w_dec = oracle::random_matrix(10, 6, rng);
  op::project_decoder_grads(q, gr);
  const auto once = gr.w_dec;
  op::project_decoder_grads(q, gr);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(std::abs(once.data()[i] - gr.w_dec.data()[i]) < 1e-6);
  for (std::size_t r = 0; r < 10; ++r) CHECK(std::abs(saekit::linalg::dot(q.w_dec.row(r), gr.w_dec.row(r))) < 1e-6);
}

TEST_CASE("renormalize: unit rows after an Adam step, zero rows untouched") {
  Rng rng(5);
  auto p = md::init(12, 5, rng);
  for (float& v : p.w_dec.row(3)) v = 0.0f;
  auto g = Grads::zeros_like(p);
  g.w_dec = oracle::random_matrix(12, 5, rng);
  auto st = op::AdamState::for_params(p, {0.1, 0.9, 0.999, 1e-8});
  CHECK(op::project_decoder_grads(p, g) == 1);
  op::adam_step(p, g, st);
  // Row 3 received a raw gradient step; zero it again to check the skip.
  for (float& v : p.w_dec.row(3)) v = 0.0f;
  CHECK(op::renormalize_decoder(p) == 1);
  const auto norms = saekit::linalg::row_norms(p.w_dec);
  for (std::size_t r = 0; r < 12; ++r) {
    if (r == 3) {
      CHECK(norms[r] == 0.0f);
    } else {
      CHECK(std::abs(norms[r] - 1.0f) < 1e-5);
    }
  }
}
