#pragma once

#include <stdexcept>
#include <string>

namespace dynashield {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed experiment config, map file, or CLI usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// LTL text could not be tokenized or parsed; carries a 0-based position.
class LtlParseError : public Error {
 public:
  LtlParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Formula is outside the supported safety fragment.
class FragmentError : public Error {
 public:
  using Error::Error;
};

// A group's current configuration admits no k-step-safe strategy.
class UnsafeStartError : public Error {
 public:
  using Error::Error;
};

// Observed abstract label is not among the states the shield predicted.
// Signals a dynamics-model violation; runs must surface this loudly.
class LabelMismatchError : public Error {
 public:
  using Error::Error;
};

// Shield used past its remaining duration.
class ExpiredShieldError : public Error {
 public:
  using Error::Error;
};

// A clustering step produced a group larger than max_group_size.
class GroupTooLargeError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynashield
