#include "saekit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "saekit/errors.hpp"
#include "saekit/train.hpp"

namespace saekit::evalkit {

double fvu(const linalg::Matrix& targets, const linalg::Matrix& recons) {
  if (targets.rows() != recons.rows() || targets.cols() != recons.cols()) {
    throw ShapeError("fvu: targets and reconstructions differ in shape");
  }
  const std::size_t n = targets.rows();
  const std::size_t h = targets.cols();
  if (n < 2) throw DomainError("fvu: need at least two rows");

  std::vector<double> mean_x(h, 0.0), mean_r(h, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    const auto x = targets.row(b);
    const auto y = recons.row(b);
    for (std::size_t c = 0; c < h; ++c) {
      mean_x[c] += x[c];
      mean_r[c] += static_cast<double>(x[c]) - y[c];
    }
  }
  for (std::size_t c = 0; c < h; ++c) {
    mean_x[c] /= static_cast<double>(n);
    mean_r[c] /= static_cast<double>(n);
  }
  double var_x = 0.0, var_r = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const auto x = targets.row(b);
    const auto y = recons.row(b);
    for (std::size_t c = 0; c < h; ++c) {
      const double dx = x[c] - mean_x[c];
      const double dr = (static_cast<double>(x[c]) - y[c]) - mean_r[c];
      var_x += dx * dx;
      var_r += dr * dr;
    }
  }
  if (var_x == 0.0) throw DomainError("fvu: targets have zero variance");
  return var_r / var_x;
}

double l0(std::span<const codes::SparseCode> codes) {
  if (codes.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& c : codes) total += c.size();
  return static_cast<double>(total) / static_cast<double>(codes.size());
}

std::size_t almost_dead_count(std::span<const double> frequencies, double threshold) {
  return static_cast<std::size_t>(
      std::count_if(frequencies.begin(), frequencies.end(), [threshold](double f) { return f < threshold; }));
}

const char* to_string(InferenceMode m) {
  switch (m) {
    case InferenceMode::kTopK: return "topk";
    case InferenceMode::kBatchTopK: return "batchtopk";
    case InferenceMode::kJumpRelu: return "jumprelu";
  }
  return "?";
}

InferenceMode parse_mode(const std::string& name) {
  if (name == "topk" || name == "hierarchical") return InferenceMode::kTopK;
  if (name == "batchtopk") return InferenceMode::kBatchTopK;
  if (name == "jumprelu") return InferenceMode::kJumpRelu;
  throw DomainError("unknown inference mode '" + name + "' (expected topk, batchtopk or jumprelu)");
}

std::vector<std::size_t> parse_k_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream is(text);
  std::string item;
  auto number = [&](const std::string& s) -> std::size_t {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-') throw DomainError("bad k-grid value '" + s + "'");
    return static_cast<std::size_t>(v);
  };
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(number(item));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    const std::size_t start = number(item.substr(0, c1));
    const std::size_t stop = number(item.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1));
    const std::size_t step = c2 == std::string::npos ? 1 : number(item.substr(c2 + 1));
    if (step == 0) throw DomainError("k-grid step must be >= 1");
    if (stop < start) throw DomainError("k-grid range '" + item + "' is empty");
    for (std::size_t k = start; k <= stop; k += step) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw DomainError("empty k-grid");
  if (out.front() == 0) throw DomainError("k-grid values must be >= 1");
  return out;
}

std::vector<codes::SparseCode> select(const linalg::Matrix& preacts, std::size_t k, InferenceMode mode,
                                      std::size_t batch_rows, double* theta) {
  switch (mode) {
    case InferenceMode::kTopK:
      return codes::topk_select_rows(preacts, k);
    case InferenceMode::kBatchTopK: {
      const std::size_t chunk = batch_rows == 0 ? preacts.rows() : batch_rows;
      std::vector<codes::SparseCode> out;
      out.reserve(preacts.rows());
      for (std::size_t b = 0; b < preacts.rows(); b += chunk) {
        const auto part = codes::batchtopk_select(linalg::slice_rows(preacts, b, std::min(preacts.rows(), b + chunk)), k);
        out.insert(out.end(), part.begin(), part.end());
      }
      return out;
    }
    case InferenceMode::kJumpRelu: {
      const auto t = codes::calibrate_jumprelu(preacts, k);
      if (theta) *theta = t.theta;
      return codes::apply_jumprelu_rows(preacts, t);
    }
  }
  return {};
}

std::vector<SweepEntry> sweep(const model::SaeParams& params, const linalg::Matrix& data,
                              std::span<const std::size_t> k_grid, InferenceMode mode, const SweepOptions& options) {
  const linalg::Matrix pre = model::encode_batch(params, data);
  std::vector<std::size_t> grid(k_grid.begin(), k_grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<SweepEntry> out;
  for (std::size_t k : grid) {
    if (k < 1 || k > params.dict_size()) throw DomainError("sweep: k = " + std::to_string(k) + " out of range");
    SweepEntry e;
    e.k = k;
    e.mode = mode;
    double theta = 0.0;
    const auto c = select(pre, k, mode, options.batch_rows, &theta);
    if (mode == InferenceMode::kJumpRelu) e.theta = theta;
    const auto rec = model::decode_batch(params, c);
    e.fvu = fvu(data, rec);
    e.l0 = l0(c);
    train::FreqTracker tracker(params.dict_size(), options.freq_window == 0 ? data.rows() : options.freq_window);
    tracker.update(c);
    const auto freq = tracker.frequencies();
    e.almost_dead = almost_dead_count(freq, options.dead_threshold);
    e.live = tracker.live_count();
    out.push_back(e);
  }
  return out;
}

std::vector<double> cosine_profile(const model::SaeParams& params, const linalg::Matrix& data, std::size_t k,
                                   CosineReference reference) {
  const auto pre = model::encode_batch(params, data);
  const auto c = codes::topk_select_rows(pre, k);
  const auto norms = linalg::row_norms(params.w_dec);
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (const auto& code : c) {
    for (std::size_t i = 0; i < code.size(); ++i) {
      const std::size_t ref_rank = reference == CosineReference::kTop1 ? 0 : (i == 0 ? 0 : i - 1);
      const auto a = code.indices[ref_rank];
      const auto b = code.indices[i];
      const double denom = static_cast<double>(norms[a]) * norms[b];
      const double cosv = denom > 0.0 ? linalg::dot(params.w_dec.row(a), params.w_dec.row(b)) / denom : 0.0;
      sum[i] += std::clamp(cosv, -1.0, 1.0);
      ++count[i];
    }
  }
  std::vector<double> out(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) out[i] = count[i] ? sum[i] / static_cast<double>(count[i]) : 0.0;
  return out;
}

Histogram log_histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (!(lo > 0.0) || !(hi > lo) || bins < 1) throw DomainError("log_histogram: need 0 < lo < hi and bins >= 1");
  Histogram hist;
  hist.edges.resize(bins + 1);
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (std::size_t i = 0; i <= bins; ++i) {
    hist.edges[i] = std::pow(10.0, llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(bins));
  }
  hist.counts.assign(bins, 0);
  for (double v : values) {
    std::size_t bin = 0;
    if (v > lo) {
      const double pos = (std::log10(v) - llo) / (lhi - llo) * static_cast<double>(bins);
      bin = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, pos)));
    }
    ++hist.counts[bin];
  }
  return hist;
}

ActivationDistributions activation_distributions(const model::SaeParams& params, const linalg::Matrix& data,
                                                 std::size_t k) {
  const auto pre = model::encode_batch(params, data);
  const auto c = codes::topk_select_rows(pre, k);
  const std::size_t d = params.dict_size();
  std::vector<std::size_t> fires(d, 0);
  std::vector<double> sq(d, 0.0);
  for (const auto& code : c) {
    for (std::size_t i = 0; i < code.size(); ++i) {
      ++fires[code.indices[i]];
      sq[code.indices[i]] += static_cast<double>(code.values[i]) * code.values[i];
    }
  }
  ActivationDistributions out;
  out.frequency.resize(d);
  out.mean_sq.assign(d, 0.0);
  out.active.assign(d, false);
  std::vector<double> participating;
  for (std::size_t i = 0; i < d; ++i) {
    out.frequency[i] = data.rows() ? static_cast<double>(fires[i]) / static_cast<double>(data.rows()) : 0.0;
    if (fires[i] > 0) {
      out.active[i] = true;
      out.mean_sq[i] = sq[i] / static_cast<double>(fires[i]);
      participating.push_back(out.mean_sq[i]);
    }
  }
  out.frequency_hist = log_histogram(out.frequency, 1e-7, 1.0);
  if (!participating.empty()) {
    double lo = *std::min_element(participating.begin(), participating.end());
    double hi = *std::max_element(participating.begin(), participating.end());
    if (!(hi > lo)) {
      lo /= 2.0;
      hi *= 2.0;
    }
    out.mean_sq_hist = log_histogram(participating, lo, hi);
  }
  return out;
}

InferenceComparison compare_modes(const model::SaeParams& params, const linalg::Matrix& data, std::size_t k,
                                  InferenceMode mode_a, InferenceMode mode_b) {
  const auto pre = model::encode_batch(params, data);
  InferenceComparison out;
  out.k = k;
  out.mode_a = mode_a;
  out.mode_b = mode_b;
  auto run = [&](InferenceMode m, double& f, double& l) {
    double theta = 0.0;
    const auto c = select(pre, k, m, 0, &theta);
    if (m == InferenceMode::kJumpRelu) out.theta = theta;
    f = fvu(data, model::decode_batch(params, c));
    l = l0(c);
  };
  run(mode_a, out.fvu_a, out.l0_a);
  run(mode_b, out.fvu_b, out.l0_b);
  return out;
}

InferenceComparison compare_inference_modes(const model::SaeParams& params, const linalg::Matrix& data,
                                            std::size_t k) {
  return compare_modes(params, data, k, InferenceMode::kTopK, InferenceMode::kJumpRelu);
}

}  // namespace saekit::evalkit
