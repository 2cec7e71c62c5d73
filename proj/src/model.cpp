#include "saekit/model.hpp"

#include <algorithm>
#include <cmath>

#include "saekit/digest.hpp"
#include "saekit/errors.hpp"
#include "saekit/parallel.hpp"

namespace saekit::model {

void SaeParams::validate() const {
  const std::size_t d = w_enc.rows();
  const std::size_t h = w_enc.cols();
  if (w_dec.rows() != d || w_dec.cols() != h || b_enc.size() != d || b_dec.size() != h) {
    throw ShapeError("SaeParams: inconsistent tensor shapes");
  }
}

SaeParams init(std::size_t dict_size, std::size_t hidden_dim, linalg::Rng& rng) {
  if (dict_size < 1 || hidden_dim < 1) throw DomainError("init: dictionary size and hidden dim must be >= 1");
  SaeParams p;
  p.w_dec = linalg::Matrix(dict_size, hidden_dim);
  for (std::size_t i = 0; i < dict_size; ++i) {
    auto row = p.w_dec.row(i);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (float& v : row) {
        v = static_cast<float>(rng.normal());
        norm2 += static_cast<double>(v) * v;
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (float& v : row) v = static_cast<float>(v * inv);
  }
  p.w_enc = p.w_dec;
  p.b_enc.assign(dict_size, 0.0f);
  p.b_dec.assign(hidden_dim, 0.0f);
  return p;
}

std::vector<float> encode(const SaeParams& params, std::span<const float> x) {
  if (x.size() != params.hidden_dim()) {
    throw ShapeError("encode: input length " + std::to_string(x.size()) + " != hidden dim " +
                     std::to_string(params.hidden_dim()));
  }
  std::vector<float> out(params.dict_size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(linalg::dot(params.w_enc.row(i), x) + params.b_enc[i]);
  }
  return out;
}

linalg::Matrix encode_batch(const SaeParams& params, const linalg::Matrix& x) {
  if (x.cols() != params.hidden_dim()) throw ShapeError("encode_batch: input width != hidden dim");
  linalg::Matrix pre = linalg::matmul_transposed(x, params.w_enc);
  linalg::add_row_vector(pre, params.b_enc);
  return pre;
}

std::vector<float> decode_prefix(const SaeParams& params, const codes::SparseCode& code, std::size_t j) {
  std::vector<float> out(params.b_dec);
  const std::size_t n = std::min(j, code.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (code.indices[i] >= params.dict_size()) throw ShapeError("decode: code index out of range");
    linalg::axpy(code.values[i], params.w_dec.row(code.indices[i]), out);
  }
  return out;
}

std::vector<float> decode(const SaeParams& params, const codes::SparseCode& code) {
  return decode_prefix(params, code, code.size());
}

linalg::Matrix decode_batch(const SaeParams& params, std::span<const codes::SparseCode> codes) {
  linalg::Matrix out(codes.size(), params.hidden_dim());
  parallel_for(codes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      const auto rec = decode(params, codes[r]);
      std::copy(rec.begin(), rec.end(), out.row(r).begin());
    }
  });
  return out;
}

std::string digest(const SaeParams& params) {
  Fnv1a h;
  h.update(params.w_enc.data());
  h.update(std::span<const float>(params.b_enc));
  h.update(params.w_dec.data());
  h.update(std::span<const float>(params.b_dec));
  return h.hex();
}

}  // namespace saekit::model
