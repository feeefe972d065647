#include "gaussfit/checks.hpp"
#include "gaussfit/error.hpp"

namespace gaussfit {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidBody: return "InvalidBody";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::NotInterior: return "NotInterior";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::DegenerateBody: return "DegenerateBody";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Skip: return "skip";
    case Verdict::Fail: return "fail";
  }
  return "?";
}

}  // namespace gaussfit
