#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lracma {

enum class ErrorCode {
  InvalidMatrix,
  NotPositiveDefinite,
  NumericalRange,
  InvalidConfig,
  InvalidInput,
  ObjectiveNaN,
  DegenerateVariance,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NumericalRange: return "NumericalRange";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ObjectiveNaN: return "ObjectiveNaN";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
  }
  return "Unknown";
}

/// Every failure raised by the library. `iteration()` is set when the error
/// escaped from inside an optimizer step.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<long> iteration = std::nullopt)
      : std::runtime_error(format(code, message, iteration)),
        code_(code),
        iteration_(iteration),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<long> iteration() const noexcept { return iteration_; }
  const std::string& detail() const noexcept { return detail_; }

  Error at_iteration(long t) const { return Error(code_, detail_, t); }

 private:
  static std::string format(ErrorCode code, const std::string& message,
                            std::optional<long> iteration) {
    std::string out(to_string(code));
    out += ": ";
    out += message;
    if (iteration) {
      out += " (iteration ";
      out += std::to_string(*iteration);
      out += ")";
    }
    return out;
  }

  ErrorCode code_;
  std::optional<long> iteration_;
  std::string detail_;
};

}  // namespace lracma
