#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hcshape {

enum class Errc {
  WrongMagic,
  Truncated,
  BadDigit,
  EmptyCloud,
  TooFewPoints,
  TooLarge,
  TooFew,
  Empty,
  MissingBlock,
  EmptyTrainingSet,
  ArityMismatch,
  KTooLarge,
  ClassTooSmall,
  LengthMismatch,
  TooFewFolds,
  MissingData,
  CacheCorrupt,
  InvalidConfig,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's JSON error reporter) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hcshape
