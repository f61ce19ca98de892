#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace radcal {

// Coarse failure classes; the CLI prints the category name as the first
// token of its one-line error message.
enum class ErrorCategory {
  kUsage,
  kValidation,
  kFormat,
  kRange,
  kIo,
};

std::string_view CategoryName(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void Fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace radcal
