#pragma once

#include <stdexcept>
#include <string>

namespace cbo {

/// Thrown when a correlation matrix cannot be factorized even after the
/// jitter-escalation ladder has been exhausted.  Carries the last jitter
/// value attempted so callers can report how far escalation went.
class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, double last_jitter)
      : std::runtime_error(what), last_jitter_(last_jitter) {}

  /// Largest diagonal jitter that was tried before giving up.
  double last_jitter() const noexcept { return last_jitter_; }

 private:
  double last_jitter_;
};

}  // namespace cbo
