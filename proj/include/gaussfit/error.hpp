#pragma once

#include <stdexcept>
#include <string>

namespace gaussfit {

enum class ErrorCode {
  InvalidBody,
  Unbounded,
  Degenerate,
  NotInterior,
  EmptyInterval,
  NegativeWeight,
  EmptyBatch,
  DegenerateBody,
  NotNormalized,
  ConvergenceFailure,
  InsufficientSamples,
  InvalidConfig,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gaussfit
