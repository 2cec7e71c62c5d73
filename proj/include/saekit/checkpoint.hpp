#pragma once

#include <cstdint>
#include <string>

#include "saekit/model.hpp"

namespace saekit::model {

/// Training provenance stored next to the tensors.
struct CheckpointMeta {
  std::size_t k = 0;
  std::string activation = "hierarchical";
  std::string schedule;
  std::string config_digest;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  SaeParams params;
  CheckpointMeta meta;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'E', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

/// Layout (all integers and floats little-endian):
///   8 bytes   magic "SAECKPT1"
///   1 byte    version (1)
///   u32       metadata length M
///   M bytes   UTF-8 metadata, one "key=value" per line
///   u64       payload length P (must equal 4·(2·D·h + D + h))
///   P bytes   f32 W_enc[D×h], b_enc[D], W_dec[D×h], b_dec[h]
void save(const std::string& path, const SaeParams& params, const CheckpointMeta& meta);

/// Throws FormatError with a kind per failure: kIo, kBadMagic, kBadVersion,
/// kBadMetadata, kShapeMismatch, kTruncated.
Checkpoint load(const std::string& path);

}  // namespace saekit::model
