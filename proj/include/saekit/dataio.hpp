#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "saekit/linalg.hpp"
#include "saekit/rng.hpp"

namespace saekit::dataio {

inline constexpr char kActivationMagic[8] = {'S', 'A', 'E', 'A', 'C', 'T', '0', '1'};
inline constexpr std::uint32_t kActivationVersion = 1;
inline constexpr std::uint32_t kDtypeF32 = 0;

/// 28-byte header: magic[8], u32 version, u64 num_rows, u32 dim, u32 dtype,
/// followed by num_rows·dim little-endian f32 values, row-major.
struct ActivationHeader {
  std::uint64_t num_rows = 0;
  std::uint32_t dim = 0;
  std::uint32_t dtype = kDtypeF32;
};

void write_activations(const linalg::Matrix& rows, const std::string& path);

/// Streams rows from an activation file without loading it whole. The header
/// and the file length are validated on open.
class ActivationReader {
 public:
  explicit ActivationReader(const std::string& path);

  const ActivationHeader& header() const noexcept { return header_; }
  std::uint64_t rows_remaining() const noexcept { return header_.num_rows - cursor_; }

  /// Up to `max_rows` further rows; an empty matrix once exhausted.
  linalg::Matrix read(std::size_t max_rows);

 private:
  std::ifstream in_;
  ActivationHeader header_;
  std::uint64_t cursor_ = 0;
};

linalg::Matrix read_activations(const std::string& path);

/// Ground-truth generator: `atoms` unit-norm directions in R^dim, each row the
/// sum of `active` distinct atoms with |N(coef_mean, coef_std)| weights plus
/// N(0, noise_std²) per coordinate.
struct SyntheticSpec {
  std::size_t atoms = 1024;
  std::size_t dim = 128;
  std::size_t active = 8;
  double coef_mean = 1.0;
  double coef_std = 0.25;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
  /// Row stream seed; when unset the rows continue the atom stream. Setting it
  /// draws fresh rows over the same atoms.
  std::optional<std::uint64_t> sample_seed;

  /// Throws DomainError on an invalid spec.
  void validate() const;
};

/// atoms × dim dictionary that generate_synthetic draws rows from.
linalg::Matrix synthetic_atoms(const SyntheticSpec& spec);

linalg::Matrix generate_synthetic(const SyntheticSpec& spec, std::size_t n_rows);

/// Epoch-wise shuffled mini-batches over rows [first_row, data.rows()).
/// Each epoch draws a fresh Fisher–Yates permutation from the seeded stream;
/// the trailing partial batch is dropped. epochs = 0 repeats indefinitely.
class BatchIterator {
 public:
  BatchIterator(const linalg::Matrix& data, std::size_t batch_size, std::uint64_t seed, std::size_t epochs = 1,
                std::size_t first_row = 0);

  /// Row indices (into `data`) of the next batch, or nullopt at the end.
  std::optional<std::vector<std::size_t>> next_indices();
  std::optional<linalg::Matrix> next();

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t dropped_per_epoch() const noexcept { return order_.size() % batch_size_; }
  std::size_t batches_per_epoch() const noexcept { return order_.size() / batch_size_; }

 private:
  void reshuffle();

  const linalg::Matrix& data_;
  std::size_t batch_size_;
  std::size_t epochs_;
  linalg::Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::size_t epoch_ = 0;
};

std::string digest(const linalg::Matrix& data);

}  // namespace saekit::dataio
