#pragma once

#include <cstdint>
#include <vector>

#include "saekit/hloss.hpp"
#include "saekit/model.hpp"

namespace saekit::optim {

struct AdamConfig {
  double lr = 0.0008;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments for each SaeParams tensor plus the shared step counter.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<float> m_w_enc, v_w_enc;
  std::vector<float> m_b_enc, v_b_enc;
  std::vector<float> m_w_dec, v_w_dec;
  std::vector<float> m_b_dec, v_b_dec;

  static AdamState for_params(const model::SaeParams& params, AdamConfig config = {});
};

/// One bias-corrected Adam update of every tensor. Throws ShapeError when
/// params, grads and state disagree.
void adam_step(model::SaeParams& params, const hloss::Grads& grads, AdamState& state);

/// Removes from each decoder-row gradient its component along that row, so
/// the step is tangent to the unit sphere. Returns the number of zero-norm
/// rows, which are left untouched.
std::size_t project_decoder_grads(const model::SaeParams& params, hloss::Grads& grads);

/// Rescales every decoder row to unit norm. Returns the number of zero rows
/// (left unchanged).
std::size_t renormalize_decoder(model::SaeParams& params);

}  // namespace saekit::optim
