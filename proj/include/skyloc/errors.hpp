#pragma once

#include <stdexcept>
#include <string>

namespace skyloc {

// Base for all toolkit errors. `code()` is a stable identifier used by the
// CLI for machine-readable error lines.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define SKYLOC_DEFINE_ERROR(NAME)                       \
  class NAME : public Error {                           \
   public:                                              \
    explicit NAME(const std::string& message)           \
        : Error(#NAME, message) {}                      \
  }

SKYLOC_DEFINE_ERROR(DegenerateError);
SKYLOC_DEFINE_ERROR(HorizonError);
SKYLOC_DEFINE_ERROR(OutOfRangeError);
SKYLOC_DEFINE_ERROR(EmptySplitError);
SKYLOC_DEFINE_ERROR(InsufficientEdgesError);
SKYLOC_DEFINE_ERROR(ShapeError);
SKYLOC_DEFINE_ERROR(DomainError);
SKYLOC_DEFINE_ERROR(NonFiniteError);
SKYLOC_DEFINE_ERROR(EmptyIndexError);
SKYLOC_DEFINE_ERROR(MissingTruthError);
SKYLOC_DEFINE_ERROR(ConfigError);
SKYLOC_DEFINE_ERROR(FormatError);

#undef SKYLOC_DEFINE_ERROR

}  // namespace skyloc
