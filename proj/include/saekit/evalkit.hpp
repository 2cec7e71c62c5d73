#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saekit/codes.hpp"
#include "saekit/linalg.hpp"
#include "saekit/model.hpp"

namespace saekit::evalkit {

/// Σ_c Var_b(x − x̂)[c] / Σ_c Var_b(x)[c] with population variances over the
/// batch. Throws ShapeError on mismatched shapes, DomainError for B < 2 or
/// constant targets.
double fvu(const linalg::Matrix& targets, const linalg::Matrix& recons);

/// Mean number of active entries per code.
double l0(std::span<const codes::SparseCode> codes);

/// Features whose frequency is strictly below `threshold`.
std::size_t almost_dead_count(std::span<const double> frequencies, double threshold = 1e-5);

enum class InferenceMode { kTopK, kBatchTopK, kJumpRelu };

const char* to_string(InferenceMode m);
InferenceMode parse_mode(const std::string& name);

/// "start:stop:step" ranges (inclusive) and comma lists, freely mixed.
/// The result is sorted and deduplicated.
std::vector<std::size_t> parse_k_grid(const std::string& text);

struct SweepEntry {
  std::size_t k = 0;
  InferenceMode mode = InferenceMode::kTopK;
  double l0 = 0.0;
  double fvu = 0.0;
  std::size_t live = 0;
  std::size_t almost_dead = 0;
  std::optional<double> theta;  // jumprelu only
};

struct SweepOptions {
  double dead_threshold = 1e-5;
  /// Frequency window in tokens; 0 uses all rows of the data.
  std::uint64_t freq_window = 0;
  /// Rows per selection batch in batchtopk mode; 0 selects over all rows.
  std::size_t batch_rows = 0;
};

/// Codes for every row of `preacts` under the given inference mode at k.
/// In jumprelu mode the threshold is calibrated on `preacts` itself and
/// written to `theta`.
std::vector<codes::SparseCode> select(const linalg::Matrix& preacts, std::size_t k, InferenceMode mode,
                                      std::size_t batch_rows = 0, double* theta = nullptr);

std::vector<SweepEntry> sweep(const model::SaeParams& params, const linalg::Matrix& data,
                              std::span<const std::size_t> k_grid, InferenceMode mode,
                              const SweepOptions& options = {});

enum class CosineReference { kTop1, kAdjacent };

/// profile[i] = mean over samples with > i active latents of the cosine
/// between the rank-(i+1) embedding and the rank-1 embedding (or the
/// rank-i embedding for kAdjacent). Length k.
std::vector<double> cosine_profile(const model::SaeParams& params, const linalg::Matrix& data, std::size_t k,
                                   CosineReference reference = CosineReference::kTop1);

struct Histogram {
  std::vector<double> edges;  // bins + 1, log-spaced
  std::vector<std::size_t> counts;
};

/// Frequencies use 64 log-spaced bins on [1e-7, 1]; anything below the first
/// edge (including never-active features) lands in bin 0. Mean squared
/// activations use 64 log-spaced bins on the observed [min, max] and only
/// count features that were active at least once.
struct ActivationDistributions {
  std::vector<double> frequency;
  std::vector<double> mean_sq;  // 0 for never-active features
  std::vector<bool> active;
  Histogram frequency_hist;
  Histogram mean_sq_hist;
};

inline constexpr std::size_t kHistogramBins = 64;

ActivationDistributions activation_distributions(const model::SaeParams& params, const linalg::Matrix& data,
                                                 std::size_t k);

Histogram log_histogram(std::span<const double> values, double lo, double hi, std::size_t bins = kHistogramBins);

struct InferenceComparison {
  std::size_t k = 0;
  InferenceMode mode_a = InferenceMode::kTopK;
  InferenceMode mode_b = InferenceMode::kJumpRelu;
  double fvu_a = 0.0;
  double fvu_b = 0.0;
  double l0_a = 0.0;
  double l0_b = 0.0;
  std::optional<double> theta;
  double difference() const { return fvu_b - fvu_a; }
};

InferenceComparison compare_modes(const model::SaeParams& params, const linalg::Matrix& data, std::size_t k,
                                  InferenceMode mode_a, InferenceMode mode_b);

/// Per-token TopK against a constant JumpReLU threshold calibrated to the
/// same expected ℓ0 on `data`.
InferenceComparison compare_inference_modes(const model::SaeParams& params, const linalg::Matrix& data,
                                            std::size_t k);

struct EvalReport {
  std::string model_digest;
  std::string data_digest;
  std::vector<SweepEntry> entries;
  std::vector<double> cosine_profile;
  std::optional<ActivationDistributions> distributions;
  std::optional<InferenceComparison> comparison;

  /// Pretty-printed JSON, stable key order.
  std::string to_json() const;
  /// "mode,k,l0,fvu" rows for plotting.
  std::string to_csv() const;
};

}  // namespace saekit::evalkit
