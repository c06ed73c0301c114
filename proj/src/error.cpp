#include "tactile/error.hpp"

namespace tactile {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::PatchOutsideSurface: return "patch-outside-surface";
    case ErrorCode::SingularPosition: return "singular-position";
    case ErrorCode::Diverged: return "diverged";
    case ErrorCode::NonMonotonicTime: return "non-monotonic-time";
    case ErrorCode::TooShort: return "too-short";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::ClassTooSmall: return "class-too-small";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::MalformedInput: return "malformed-input";
    case ErrorCode::SchemaMismatch: return "schema-mismatch";
    case ErrorCode::NoContact: return "no-contact";
    case ErrorCode::Io: return "io";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

}  // namespace tactile
