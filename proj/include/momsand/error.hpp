#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace momsand {

enum class ErrorCode {
  InvalidArgument,
  InvalidSpec,
  ParseError,
  InvalidOrder,
  NonfiniteMoment,
  DegenerateZero,
  DegenerateModulus,
  NotNormalized,
  EmptyWindow,
  NoValidA,
  NoValidQ,
  KTooLarge,
  ChainLengthMismatch,
  RegimeMismatch,
  TooLarge,
  TooFewPoints,
  NotIncreasing,
  NotLacunary,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidOrder: return "InvalidOrder";
    case ErrorCode::NonfiniteMoment: return "NonfiniteMoment";
    case ErrorCode::DegenerateZero: return "DegenerateZero";
    case ErrorCode::DegenerateModulus: return "DegenerateModulus";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::NoValidA: return "NoValidA";
    case ErrorCode::NoValidQ: return "NoValidQ";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::ChainLengthMismatch: return "ChainLengthMismatch";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NotIncreasing: return "NotIncreasing";
    case ErrorCode::NotLacunary: return "NotLacunary";
  }
  return "Unknown";
}

/// Single exception type for the library; the code drives CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  /// Hypothesis failures: the law admits no certificate for the bounds.
  [[nodiscard]] bool is_hypothesis_failure() const noexcept {
    return code_ == ErrorCode::DegenerateModulus || code_ == ErrorCode::DegenerateZero ||
           code_ == ErrorCode::EmptyWindow || code_ == ErrorCode::NoValidA ||
           code_ == ErrorCode::NoValidQ || code_ == ErrorCode::KTooLarge ||
           code_ == ErrorCode::NotLacunary || code_ == ErrorCode::NotNormalized;
  }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace momsand
