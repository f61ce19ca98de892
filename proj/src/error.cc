#include "radcal/error.h"

namespace radcal {

std::string_view CategoryName(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage: return "usage";
    case ErrorCategory::kValidation: return "validation";
    case ErrorCategory::kFormat: return "format";
    case ErrorCategory::kRange: return "range";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

}  // namespace radcal
