#include "saekit/digest.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "saekit/errors.hpp"

namespace saekit {

void Fnv1a::update(std::span<const std::byte> bytes) noexcept {
  for (std::byte b : bytes) {
    h_ ^= static_cast<std::uint64_t>(b);
    h_ *= 0x100000001b3ULL;
  }
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h_));
  return buf;
}

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::kIo, "cannot open " + path);
  Fnv1a h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    h.update(std::as_bytes(std::span(buf.data(), got)));
  }
  return h.hex();
}

const char* to_string(FormatError::Kind kind) {
  switch (kind) {
    case FormatError::Kind::kIo: return "io";
    case FormatError::Kind::kBadMagic: return "bad-magic";
    case FormatError::Kind::kBadVersion: return "bad-version";
    case FormatError::Kind::kBadDtype: return "bad-dtype";
    case FormatError::Kind::kTruncated: return "truncated";
    case FormatError::Kind::kShapeMismatch: return "shape-mismatch";
    case FormatError::Kind::kBadMetadata: return "bad-metadata";
  }
  return "unknown";
}

}  // namespace saekit
