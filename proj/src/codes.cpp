#include "saekit/codes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "saekit/errors.hpp"
#include "saekit/parallel.hpp"

namespace saekit::codes {

namespace {

struct Entry {
  float value;
  std::uint32_t index;
};

// Descending value, ascending index on ties.
bool stronger(const Entry& a, const Entry& b) {
  return a.value > b.value || (a.value == b.value && a.index < b.index);
}

SparseCode to_code(std::span<const Entry> entries) {
  SparseCode code;
  code.indices.reserve(entries.size());
  code.values.reserve(entries.size());
  for (const Entry& e : entries) {
    code.indices.push_back(e.index);
    code.values.push_back(e.value);
  }
  return code;
}

void check_k(std::size_t k, std::size_t dim) {
  if (k < 1 || k > dim) {
    throw DomainError("k = " + std::to_string(k) + " outside [1, " + std::to_string(dim) + "]");
  }
}

}  // namespace

SparseCode truncate(const SparseCode& code, std::size_t j) {
  const std::size_t n = std::min(j, code.size());
  SparseCode out;
  out.indices.assign(code.indices.begin(), code.indices.begin() + static_cast<std::ptrdiff_t>(n));
  out.values.assign(code.values.begin(), code.values.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

bool is_canonical(const SparseCode& code) {
  if (code.indices.size() != code.values.size()) return false;
  std::unordered_set<std::uint32_t> seen;
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (!(code.values[i] > 0.0f)) return false;
    if (!seen.insert(code.indices[i]).second) return false;
    if (i > 0) {
      const Entry prev{code.values[i - 1], code.indices[i - 1]};
      const Entry cur{code.values[i], code.indices[i]};
      if (!stronger(prev, cur)) return false;
    }
  }
  return true;
}

IndexSchedule::IndexSchedule(std::vector<std::size_t> levels, bool endpoint_appended)
    : levels_(std::move(levels)), endpoint_appended_(endpoint_appended) {
  if (levels_.empty()) throw DomainError("index schedule must contain at least one level");
  if (levels_.front() < 1) throw DomainError("index schedule levels must be >= 1");
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    if (levels_[i] <= levels_[i - 1]) throw DomainError("index schedule must be strictly increasing");
  }
}

std::string IndexSchedule::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < levels_.size(); ++i) os << (i ? "," : "") << levels_[i];
  os << '}';
  return os.str();
}

IndexSchedule IndexSchedule::parse(const std::string& text) {
  std::string body = text;
  if (!body.empty() && body.front() == '{') body.erase(body.begin());
  if (!body.empty() && body.back() == '}') body.pop_back();
  std::vector<std::size_t> levels;
  std::istringstream is(body);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      levels.push_back(std::stoul(tok));
    } catch (const std::exception&) {
      throw DomainError("bad schedule level '" + tok + "'");
    }
  }
  return IndexSchedule(std::move(levels));
}

IndexSchedule make_schedule(std::size_t stride, std::size_t k) {
  if (stride < 1 || k < 1) throw DomainError("make_schedule: stride and k must be >= 1");
  std::vector<std::size_t> levels{1};
  for (std::size_t i = 2; i <= k; ++i) {
    if (i % stride == 0) levels.push_back(i);
  }
  bool appended = false;
  if (levels.back() != k) {
    levels.push_back(k);
    appended = true;
  }
  return IndexSchedule(std::move(levels), appended);
}

SparseCode topk_select(std::span<const float> preacts, std::size_t k) {
  check_k(k, preacts.size());
  std::vector<Entry> pos;
  pos.reserve(preacts.size());
  for (std::size_t i = 0; i < preacts.size(); ++i) {
    if (preacts[i] > 0.0f) pos.push_back({preacts[i], static_cast<std::uint32_t>(i)});
  }
  const std::size_t keep = std::min(k, pos.size());
  if (keep < pos.size()) {
    std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(keep), pos.end(), stronger);
  }
  std::sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(keep), stronger);
  return to_code(std::span(pos.data(), keep));
}

std::vector<SparseCode> topk_select_rows(const linalg::Matrix& preacts, std::size_t k) {
  check_k(k, preacts.cols());
  std::vector<SparseCode> out(preacts.rows());
  parallel_for(preacts.rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) out[r] = topk_select(preacts.row(r), k);
  });
  return out;
}

std::vector<SparseCode> batchtopk_select(const linalg::Matrix& preacts, std::size_t k) {
  check_k(k, preacts.cols());
  const std::size_t batch = preacts.rows();
  struct Flat {
    float value;
    std::uint32_t sample;
    std::uint32_t index;
  };
  auto flat_stronger = [](const Flat& a, const Flat& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.sample != b.sample) return a.sample < b.sample;
    return a.index < b.index;
  };
  std::vector<Flat> pos;
  for (std::size_t s = 0; s < batch; ++s) {
    auto row = preacts.row(s);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] > 0.0f) pos.push_back({row[i], static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(i)});
    }
  }
  const std::size_t keep = std::min(batch * k, pos.size());
  if (keep < pos.size()) {
    std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(keep), pos.end(), flat_stronger);
  }
  std::vector<std::vector<Entry>> per_sample(batch);
  for (std::size_t i = 0; i < keep; ++i) per_sample[pos[i].sample].push_back({pos[i].value, pos[i].index});
  std::vector<SparseCode> out(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    std::sort(per_sample[s].begin(), per_sample[s].end(), stronger);
    out[s] = to_code(per_sample[s]);
  }
  return out;
}

JumpReluThreshold calibrate_jumprelu(const linalg::Matrix& preacts, std::size_t target_k) {
  if (preacts.rows() == 0 || preacts.cols() == 0) throw DomainError("calibrate_jumprelu: empty stream");
  if (target_k < 1) throw DomainError("calibrate_jumprelu: target_k must be >= 1");
  const std::size_t dim = preacts.cols();
  if (target_k >= dim) return {0.0f};

  std::vector<float> pooled(preacts.data().begin(), preacts.data().end());
  for (float& v : pooled) v = std::max(v, 0.0f);
  const double q = 1.0 - static_cast<double>(target_k) / static_cast<double>(dim);
  const double pos = q * static_cast<double>(pooled.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);

  std::nth_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(lo), pooled.end());
  const double lo_val = pooled[lo];
  double hi_val = lo_val;
  if (lo + 1 < pooled.size()) {
    hi_val = *std::min_element(pooled.begin() + static_cast<std::ptrdiff_t>(lo + 1), pooled.end());
  }
  return {static_cast<float>(lo_val + frac * (hi_val - lo_val))};
}

SparseCode apply_jumprelu(std::span<const float> preacts, JumpReluThreshold threshold) {
  if (threshold.theta < 0.0f) throw DomainError("JumpReLU threshold must be >= 0");
  std::vector<Entry> kept;
  for (std::size_t i = 0; i < preacts.size(); ++i) {
    if (preacts[i] > 0.0f && preacts[i] > threshold.theta) {
      kept.push_back({preacts[i], static_cast<std::uint32_t>(i)});
    }
  }
  std::sort(kept.begin(), kept.end(), stronger);
  return to_code(kept);
}

std::vector<SparseCode> apply_jumprelu_rows(const linalg::Matrix& preacts, JumpReluThreshold threshold) {
  std::vector<SparseCode> out(preacts.rows());
  parallel_for(preacts.rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) out[r] = apply_jumprelu(preacts.row(r), threshold);
  });
  return out;
}

}  // namespace saekit::codes
