#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace saekit {

/// FNV-1a 64-bit, used for model/data/config fingerprints in reports.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes) noexcept;
  void update(std::span<const float> values) noexcept { update(std::as_bytes(values)); }
  void update(std::string_view s) noexcept { update(std::as_bytes(std::span(s.data(), s.size()))); }
  std::uint64_t value() const noexcept { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string digest_file(const std::string& path);

}  // namespace saekit
