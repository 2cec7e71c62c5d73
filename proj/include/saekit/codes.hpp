#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "saekit/linalg.hpp"

namespace saekit::codes {

/// Active latents of one sample, strongest first. Values are strictly
/// positive and non-increasing; equal values are ordered by ascending index.
/// The first j entries are the sample's top-j set, so a prefix of the code is
/// exactly the partial reconstruction support at level j.
struct SparseCode {
  std::vector<std::uint32_t> indices;
  std::vector<float> values;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }

  friend bool operator==(const SparseCode&, const SparseCode&) = default;
};

/// First min(j, size) entries.
SparseCode truncate(const SparseCode& code, std::size_t j);

/// Checks the ordering/positivity/uniqueness invariants.
bool is_canonical(const SparseCode& code);

/// Supervised sparsity levels: strictly increasing, starting at >= 1, ending at
/// the training budget K.
class IndexSchedule {
 public:
  /// Throws DomainError unless `levels` is non-empty, positive and strictly increasing.
  explicit IndexSchedule(std::vector<std::size_t> levels, bool endpoint_appended = false);

  static IndexSchedule singleton(std::size_t k) { return IndexSchedule({k}); }

  const std::vector<std::size_t>& levels() const noexcept { return levels_; }
  std::size_t max_level() const noexcept { return levels_.back(); }
  std::size_t size() const noexcept { return levels_.size(); }

  /// True when K was not a multiple of the stride and had to be added.
  bool endpoint_appended() const noexcept { return endpoint_appended_; }

  /// "{1,8,16}" form used in logs and metadata.
  std::string to_string() const;
  static IndexSchedule parse(const std::string& text);

  friend bool operator==(const IndexSchedule& a, const IndexSchedule& b) {
    return a.levels_ == b.levels_;
  }

 private:
  std::vector<std::size_t> levels_;
  bool endpoint_appended_ = false;
};

/// {1} ∪ {i : i mod stride = 0, 1 < i <= k}, plus k itself when stride does
/// not divide k.
IndexSchedule make_schedule(std::size_t stride, std::size_t k);

struct JumpReluThreshold {
  float theta = 0.0f;
};

/// ReLU, then the k largest positive entries. Throws DomainError unless 1 <= k <= D.
SparseCode topk_select(std::span<const float> preacts, std::size_t k);

/// The B·k largest positive entries across the whole batch; per-sample counts vary.
std::vector<SparseCode> batchtopk_select(const linalg::Matrix& preacts, std::size_t k);

/// Row-wise topk_select.
std::vector<SparseCode> topk_select_rows(const linalg::Matrix& preacts, std::size_t k);

/// theta = linearly interpolated (1 - target_k/D) quantile of every post-ReLU
/// value in the stream (rows of `preacts`). target_k >= D gives 0.
JumpReluThreshold calibrate_jumprelu(const linalg::Matrix& preacts, std::size_t target_k);

/// Entries strictly above theta (and above zero), strongest first.
SparseCode apply_jumprelu(std::span<const float> preacts, JumpReluThreshold threshold);

std::vector<SparseCode> apply_jumprelu_rows(const linalg::Matrix& preacts, JumpReluThreshold threshold);

}  // namespace saekit::codes
