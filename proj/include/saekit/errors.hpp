#pragma once

#include <stdexcept>
#include <string>

namespace saekit {

// Operand shapes disagree (matrix products, parameter/gradient tensors, inputs).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside an operation's domain (k out of range, empty input, zero variance).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent on-disk data.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kBadVersion, kBadDtype, kTruncated, kShapeMismatch, kBadMetadata };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(FormatError::Kind kind);

}  // namespace saekit
