#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "saekit/codes.hpp"
#include "saekit/linalg.hpp"
#include "saekit/model.hpp"

namespace saekit::hloss {

/// Mean squared error at each supervised level and their average.
///
/// per_level[t] is the error of the level-`levels[t]` reconstruction, averaged
/// over batch and hidden coordinates; total is the mean of per_level.
struct LossValue {
  double total = 0.0;
  std::vector<std::size_t> levels;
  std::vector<double> per_level;

  /// Value for level j; throws DomainError if j is not supervised.
  double at(std::size_t j) const;
};

/// Gradients with the same shapes as SaeParams.
struct Grads {
  linalg::Matrix w_enc;
  std::vector<float> b_enc;
  linalg::Matrix w_dec;
  std::vector<float> b_dec;

  static Grads zeros_like(const model::SaeParams& params);
  void zero();
};

/// Reference implementation: gathers every active embedding, materializes
/// the B×K×h cumulative reconstruction tensor (in f64), and reads each level
/// off it. Levels past a sample's code length reuse its full reconstruction.
LossValue loss_naive(const model::SaeParams& params, std::span<const codes::SparseCode> codes,
                     const linalg::Matrix& targets, const codes::IndexSchedule& schedule);

/// Streaming loss and analytic gradients in one sweep per sample, with
/// O(h + K) scratch. Gradients are *added* into `grads`. The encoder receives
/// gradient only through the selected entries; the selection itself is held
/// fixed. `targets` doubles as the encoder input.
LossValue loss_fused_with_grads(const model::SaeParams& params, std::span<const codes::SparseCode> codes,
                                const linalg::Matrix& targets, const codes::IndexSchedule& schedule,
                                Grads& grads);

std::pair<LossValue, Grads> loss_fused_with_grads(const model::SaeParams& params,
                                                  std::span<const codes::SparseCode> codes,
                                                  const linalg::Matrix& targets,
                                                  const codes::IndexSchedule& schedule);

/// Plain reconstruction loss: the fused path with the singleton schedule {K},
/// K = longest code in the batch.
LossValue loss_topk(const model::SaeParams& params, std::span<const codes::SparseCode> codes,
                    const linalg::Matrix& targets, Grads& grads);

LossValue loss_topk(const model::SaeParams& params, std::span<const codes::SparseCode> codes,
                    const linalg::Matrix& targets);

}  // namespace saekit::hloss
