#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "saekit/codes.hpp"
#include "saekit/linalg.hpp"
#include "saekit/rng.hpp"

namespace saekit::model {

/// One-layer SAE. Both weight matrices are stored D×h: encoder row i produces
/// latent i, decoder row i is the embedding that latent i scales.
struct SaeParams {
  linalg::Matrix w_enc;
  std::vector<float> b_enc;
  linalg::Matrix w_dec;
  std::vector<float> b_dec;

  std::size_t dict_size() const noexcept { return w_enc.rows(); }
  std::size_t hidden_dim() const noexcept { return w_enc.cols(); }

  /// Throws ShapeError if the four tensors disagree.
  void validate() const;

  friend bool operator==(const SaeParams&, const SaeParams&) = default;
};

/// Gaussian decoder rows normalized to unit length, encoder = copy of decoder,
/// zero biases.
SaeParams init(std::size_t dict_size, std::size_t hidden_dim, linalg::Rng& rng);

/// W_enc·x + b_enc (pre-activation; the sparsifier is applied by codes::).
std::vector<float> encode(const SaeParams& params, std::span<const float> x);

/// Row-wise encode of a B×h batch into B×D pre-activations.
linalg::Matrix encode_batch(const SaeParams& params, const linalg::Matrix& x);

/// b_dec + Σ over the first min(j, L) code entries of value·embedding.
std::vector<float> decode_prefix(const SaeParams& params, const codes::SparseCode& code, std::size_t j);

std::vector<float> decode(const SaeParams& params, const codes::SparseCode& code);

linalg::Matrix decode_batch(const SaeParams& params, std::span<const codes::SparseCode> codes);

/// Fingerprint of all parameter bytes.
std::string digest(const SaeParams& params);

}  // namespace saekit::model
