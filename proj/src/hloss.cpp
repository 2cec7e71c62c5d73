#include "saekit/hloss.hpp"

#include <algorithm>
#include <string>

#include "saekit/errors.hpp"

namespace saekit::hloss {

namespace {

void check_inputs(const model::SaeParams& params, std::span<const codes::SparseCode> codes,
                  const linalg::Matrix& targets) {
  if (codes.empty()) throw DomainError("hierarchical loss: empty batch");
  if (codes.size() != targets.rows()) {
    throw ShapeError("hierarchical loss: " + std::to_string(codes.size()) + " codes for " +
                     std::to_string(targets.rows()) + " targets");
  }
  if (targets.cols() != params.hidden_dim()) throw ShapeError("hierarchical loss: target width != hidden dim");
  for (const auto& c : codes) {
    if (c.indices.size() != c.values.size()) throw ShapeError("sparse code indices/values length mismatch");
    for (auto idx : c.indices) {
      if (idx >= params.dict_size()) throw ShapeError("sparse code index out of dictionary range");
    }
  }
}

LossValue finish(const codes::IndexSchedule& schedule, std::vector<double> sums, double denom) {
  LossValue out;
  out.levels = schedule.levels();
  out.per_level = std::move(sums);
  double total = 0.0;
  for (double& v : out.per_level) {
    v /= denom;
    total += v;
  }
  out.total = total / static_cast<double>(out.per_level.size());
  return out;
}

}  // namespace

double LossValue::at(std::size_t j) const {
  const auto it = std::find(levels.begin(), levels.end(), j);
  if (it == levels.end()) throw DomainError("level " + std::to_string(j) + " is not in the schedule");
  return per_level[static_cast<std::size_t>(it - levels.begin())];
}

Grads Grads::zeros_like(const model::SaeParams& params) {
  Grads g;
  g.w_enc = linalg::Matrix(params.w_enc.rows(), params.w_enc.cols());
  g.b_enc.assign(params.b_enc.size(), 0.0f);
  g.w_dec = linalg::Matrix(params.w_dec.rows(), params.w_dec.cols());
  g.b_dec.assign(params.b_dec.size(), 0.0f);
  return g;
}

void Grads::zero() {
  w_enc.fill(0.0f);
  std::fill(b_enc.begin(), b_enc.end(), 0.0f);
  w_dec.fill(0.0f);
  std::fill(b_dec.begin(), b_dec.end(), 0.0f);
}

LossValue loss_naive(const model::SaeParams& params, std::span<const codes::SparseCode> codes,
                     const linalg::Matrix& targets, const codes::IndexSchedule& schedule) {
  check_inputs(params, codes, targets);
  const std::size_t batch = codes.size();
  const std::size_t k = schedule.max_level();
  const std::size_t h = params.hidden_dim();

  // cum[b][i][:] = b_dec + Σ_{m<=i} v_m e_m, zero-padded past the code length.
  std::vector<double> cum(batch * k * h, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& code = codes[b];
    for (std::size_t i = 0; i < k; ++i) {
      double* slot = &cum[(b * k + i) * h];
      if (i < code.size()) {
        const auto e = params.w_dec.row(code.indices[i]);
        for (std::size_t c = 0; c < h; ++c) slot[c] = static_cast<double>(code.values[i]) * e[c];
      }
      if (i > 0) {
        const double* prev = slot - h;
        for (std::size_t c = 0; c < h; ++c) slot[c] += prev[c];
      }
    }
  }

  std::vector<double> sums(schedule.size(), 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto x = targets.row(b);
    for (std::size_t t = 0; t < schedule.size(); ++t) {
      const double* slot = &cum[(b * k + schedule.levels()[t] - 1) * h];
      for (std::size_t c = 0; c < h; ++c) {
        const double d = slot[c] + params.b_dec[c] - x[c];
        sums[t] += d * d;
      }
    }
  }
  return finish(schedule, std::move(sums), static_cast<double>(batch * h));
}

LossValue loss_fused_with_grads(const model::SaeParams& params, std::span<const codes::SparseCode> codes,
                                const linalg::Matrix& targets, const codes::IndexSchedule& schedule,
                                Grads& grads) {
  check_inputs(params, codes, targets);
  if (grads.w_dec.rows() != params.dict_size() || grads.w_dec.cols() != params.hidden_dim() ||
      grads.w_enc.rows() != params.dict_size() || grads.w_enc.cols() != params.hidden_dim() ||
      grads.b_enc.size() != params.dict_size() || grads.b_dec.size() != params.hidden_dim()) {
    throw ShapeError("gradient buffers do not match parameter shapes");
  }

  const std::size_t batch = codes.size();
  const std::size_t h = params.hidden_dim();
  const std::size_t k = schedule.max_level();
  const auto& levels = schedule.levels();
  const double n_levels = static_cast<double>(levels.size());
  const double scale = 2.0 / (n_levels * static_cast<double>(batch) * static_cast<double>(h));

  // coverage[i] = number of supervised levels that include atom i (1-based),
  // i.e. #{j in schedule : j >= i}.
  std::vector<double> coverage(k + 1, 0.0);
  {
    std::size_t t = levels.size();
    for (std::size_t i = k; i >= 1; --i) {
      while (t > 0 && levels[t - 1] >= i) --t;
      coverage[i] = static_cast<double>(levels.size() - t);
    }
  }

  std::vector<double> resid(h);      // r_{i-1} = b_dec + Σ_{m<i} v_m e_m − x
  std::vector<double> tail(h);       // U_i = Σ_{m>=i} coverage_m v_m e_m
  std::vector<double> sq_norm(k + 1);  // ‖r_i‖² for i = 0..L
  std::vector<double> sums(levels.size(), 0.0);

  for (std::size_t b = 0; b < batch; ++b) {
    const auto& code = codes[b];
    const std::size_t len = std::min(code.size(), k);
    const float* x = targets.row(b).data();

    for (std::size_t c = 0; c < h; ++c) {
      resid[c] = static_cast<double>(params.b_dec[c]) - x[c];
      tail[c] = 0.0;
    }
    for (std::size_t i = 1; i <= len; ++i) {
      const float* e = params.w_dec.row(code.indices[i - 1]).data();
      const double w = coverage[i] * code.values[i - 1];
      for (std::size_t c = 0; c < h; ++c) tail[c] += w * e[c];
    }
    // Σ_{j in schedule} r_min(j,L) = |J|·r_0 + U_1.
    for (std::size_t c = 0; c < h; ++c) {
      grads.b_dec[c] += static_cast<float>(scale * (n_levels * resid[c] + tail[c]));
    }

    double* r = resid.data();
    double* u = tail.data();
    for (std::size_t i = 1; i <= len; ++i) {
      const std::uint32_t idx = code.indices[i - 1];
      const double v = code.values[i - 1];
      const double n = coverage[i];
      const float* e = params.w_dec.row(idx).data();
      float* de = grads.w_dec.row(idx).data();
      const double cv = scale * v;
      const double nv = n * v;
      double e_dot_r = 0.0;
      double e_dot_u = 0.0;
      double rr = 0.0;
      // S_i = n_i·r_{i-1} + U_i is the suffix sum of supervised residuals that
      // atom i participates in.
#pragma omp simd reduction(+ : e_dot_r, e_dot_u, rr)
      for (std::size_t c = 0; c < h; ++c) {
        const double ec = e[c];
        const double rc = r[c];
        const double uc = u[c];
        e_dot_r += ec * rc;
        e_dot_u += ec * uc;
        rr += rc * rc;
        de[c] += static_cast<float>(cv * (n * rc + uc));
        r[c] = rc + v * ec;
        u[c] = uc - nv * ec;
      }
      sq_norm[i - 1] = rr;

      const double dv = scale * (n * e_dot_r + e_dot_u);
      grads.b_enc[idx] += static_cast<float>(dv);
      const float dvf = static_cast<float>(dv);
      float* dwe = grads.w_enc.row(idx).data();
      for (std::size_t c = 0; c < h; ++c) dwe[c] += dvf * x[c];
    }
    double rr = 0.0;
#pragma omp simd reduction(+ : rr)
    for (std::size_t c = 0; c < h; ++c) rr += r[c] * r[c];
    sq_norm[len] = rr;

    for (std::size_t t = 0; t < levels.size(); ++t) sums[t] += sq_norm[std::min(levels[t], len)];
  }
  return finish(schedule, std::move(sums), static_cast<double>(batch * h));
}

std::pair<LossValue, Grads> loss_fused_with_grads(const model::SaeParams& params,
                                                  std::span<const codes::SparseCode> codes,
                                                  const linalg::Matrix& targets,
                                                  const codes::IndexSchedule& schedule) {
  Grads g = Grads::zeros_like(params);
  LossValue v = loss_fused_with_grads(params, codes, targets, schedule, g);
  return {std::move(v), std::move(g)};
}

namespace {
codes::IndexSchedule topk_schedule(std::span<const codes::SparseCode> codes) {
  std::size_t k = 1;
  for (const auto& c : codes) k = std::max(k, c.size());
  return codes::IndexSchedule::singleton(k);
}
}  // namespace

LossValue loss_topk(const model::SaeParams& params, std::span<const codes::SparseCode> codes,
                    const linalg::Matrix& targets, Grads& grads) {
  return loss_fused_with_grads(params, codes, targets, topk_schedule(codes), grads);
}

LossValue loss_topk(const model::SaeParams& params, std::span<const codes::SparseCode> codes,
                    const linalg::Matrix& targets) {
  Grads g = Grads::zeros_like(params);
  return loss_topk(params, codes, targets, g);
}

}  // namespace saekit::hloss
