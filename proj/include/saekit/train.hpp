#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "saekit/checkpoint.hpp"
#include "saekit/codes.hpp"
#include "saekit/hloss.hpp"
#include "saekit/linalg.hpp"
#include "saekit/model.hpp"
#include "saekit/optim.hpp"

namespace saekit::train {

enum class Activation { kTopK, kBatchTopK, kHierarchical };

const char* to_string(Activation a);
/// Throws DomainError on an unknown name.
Activation parse_activation(const std::string& name);

/// Defaults are full-scale settings; small runs override them.
struct TrainConfig {
  Activation activation = Activation::kHierarchical;
  std::size_t k = 128;
  std::size_t stride = 1;
  std::size_t dict_size = 65536;
  std::size_t hidden_dim = 0;  // 0: take from the data
  optim::AdamConfig adam{};
  std::size_t batch_size = 8096;
  std::uint64_t steps = 0;  // 0: derive from `tokens`
  std::uint64_t tokens = 1'000'000'000;
  std::uint64_t seed = 0;          // parameter initialization
  std::uint64_t shuffle_seed = 0;  // batch order
  bool decoder_norm = true;
  std::uint64_t log_every = 100;
  std::uint64_t checkpoint_every = 0;  // 0: final checkpoint only
  std::size_t holdout_rows = 4096;
  std::uint64_t freq_window = 100'000;
  std::string data_path;
  std::string out_path;

  /// Supervised levels: J_stride up to k for hierarchical, {k} otherwise.
  codes::IndexSchedule schedule() const;
  std::uint64_t resolved_steps() const;
  /// Stable "key=value" rendering used for the config digest.
  std::string canonical() const;
  std::string digest() const;
  /// Throws DomainError for settings that cannot be trained.
  void validate() const;
};

/// Windowed activation-frequency estimate per dictionary feature.
///
/// Counts accumulate until `window` tokens have been seen, then are frozen
/// into the current estimate and reset. Before the first full window the
/// estimate is taken from the partial window.
class FreqTracker {
 public:
  FreqTracker(std::size_t dict_size, std::uint64_t window);

  void update(std::span<const codes::SparseCode> codes);

  std::vector<double> frequencies() const;
  std::uint64_t tokens_seen() const noexcept { return tokens_seen_; }
  std::size_t live_count() const;

 private:
  std::uint64_t window_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t window_tokens_ = 0;
  std::uint64_t tokens_seen_ = 0;
  std::vector<double> frozen_;
};

/// One line of the training log: "step=<n> key=value ...".
struct LogRecord {
  std::uint64_t step = 0;
  std::vector<std::pair<std::string, double>> metrics;
  std::string status;  // empty for ordinary records

  double get(const std::string& key) const;
  std::string to_line() const;
};

struct TrainResult {
  model::SaeParams params;
  model::CheckpointMeta meta;
  std::vector<LogRecord> log;
  hloss::LossValue initial_loss;
  hloss::LossValue final_loss;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, LogRecord record)
      : std::runtime_error(what), record_(std::move(record)) {}
  const LogRecord& record() const noexcept { return record_; }

 private:
  LogRecord record_;
};

/// Runs the training loop over `data`. The first `holdout_rows` rows (capped
/// at a quarter of the data) are held out for FVU logging and never trained
/// on. Log records are written to `log` as they are produced when non-null.
/// A non-finite loss throws TrainingAborted after logging a record.
TrainResult train(const TrainConfig& config, const linalg::Matrix& data, std::ostream* log = nullptr);

/// As above, reading `config.data_path` and saving to `config.out_path` when set.
TrainResult train(const TrainConfig& config, std::ostream* log = nullptr);

std::size_t holdout_size(std::size_t total_rows, std::size_t requested);

}  // namespace saekit::train
