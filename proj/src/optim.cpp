#include "saekit/optim.hpp"

#include <cmath>
#include <span>

#include "saekit/errors.hpp"
#include "saekit/parallel.hpp"

namespace saekit::optim {

namespace {

void update_tensor(std::span<float> p, std::span<const float> g, std::span<float> m, std::span<float> v,
                   const AdamConfig& c, double corr1, double corr2) {
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
    throw ShapeError("adam_step: parameter/gradient/moment sizes differ");
  }
  const float b1 = static_cast<float>(c.beta1);
  const float b2 = static_cast<float>(c.beta2);
  const float step_size = static_cast<float>(c.lr / corr1);
  const float inv_sqrt_corr2 = static_cast<float>(1.0 / std::sqrt(corr2));
  const float eps = static_cast<float>(c.eps);
  parallel_for(p.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const float gi = g[i];
      m[i] = b1 * m[i] + (1.0f - b1) * gi;
      v[i] = b2 * v[i] + (1.0f - b2) * gi * gi;
      // lr·m̂/(√v̂ + ε) with m̂ = m/corr1, v̂ = v/corr2.
      p[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_corr2 + eps);
    }
  }, 1 << 14);
}

}  // namespace

AdamState AdamState::for_params(const model::SaeParams& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.m_w_enc.assign(params.w_enc.size(), 0.0f);
  s.v_w_enc.assign(params.w_enc.size(), 0.0f);
  s.m_b_enc.assign(params.b_enc.size(), 0.0f);
  s.v_b_enc.assign(params.b_enc.size(), 0.0f);
  s.m_w_dec.assign(params.w_dec.size(), 0.0f);
  s.v_w_dec.assign(params.w_dec.size(), 0.0f);
  s.m_b_dec.assign(params.b_dec.size(), 0.0f);
  s.v_b_dec.assign(params.b_dec.size(), 0.0f);
  return s;
}

void adam_step(model::SaeParams& params, const hloss::Grads& grads, AdamState& state) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(state.config.beta1, t);
  const double corr2 = 1.0 - std::pow(state.config.beta2, t);
  update_tensor(params.w_enc.data(), grads.w_enc.data(), state.m_w_enc, state.v_w_enc, state.config, corr1, corr2);
  update_tensor(params.b_enc, grads.b_enc, state.m_b_enc, state.v_b_enc, state.config, corr1, corr2);
  update_tensor(params.w_dec.data(), grads.w_dec.data(), state.m_w_dec, state.v_w_dec, state.config, corr1, corr2);
  update_tensor(params.b_dec, grads.b_dec, state.m_b_dec, state.v_b_dec, state.config, corr1, corr2);
}

std::size_t project_decoder_grads(const model::SaeParams& params, hloss::Grads& grads) {
  if (grads.w_dec.rows() != params.w_dec.rows() || grads.w_dec.cols() != params.w_dec.cols()) {
    throw ShapeError("project_decoder_grads: gradient shape mismatch");
  }
  std::size_t zero_rows = 0;
  for (std::size_t i = 0; i < params.w_dec.rows(); ++i) {
    const auto e = params.w_dec.row(i);
    auto g = grads.w_dec.row(i);
    double ee = 0.0, ge = 0.0;
    for (std::size_t c = 0; c < e.size(); ++c) {
      ee += static_cast<double>(e[c]) * e[c];
      ge += static_cast<double>(g[c]) * e[c];
    }
    if (ee == 0.0) {
      ++zero_rows;
      continue;
    }
    if (ge == 0.0) continue;
    const float coef = static_cast<float>(ge / ee);
    for (std::size_t c = 0; c < e.size(); ++c) g[c] -= coef * e[c];
  }
  return zero_rows;
}

std::size_t renormalize_decoder(model::SaeParams& params) {
  std::size_t zero_rows = 0;
  for (std::size_t i = 0; i < params.w_dec.rows(); ++i) {
    auto e = params.w_dec.row(i);
    double ee = 0.0;
    for (float v : e) ee += static_cast<double>(v) * v;
    if (ee == 0.0) {
      ++zero_rows;
      continue;
    }
    const double inv = 1.0 / std::sqrt(ee);
    for (float& v : e) v = static_cast<float>(v * inv);
  }
  return zero_rows;
}

}  // namespace saekit::optim
