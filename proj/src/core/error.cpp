#include "mcgan/core/error.hpp"

namespace mcgan {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::load: return "checkpoint";
    case ErrorKind::input: return "input";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::shape: return "shape";
    case ErrorKind::internal: break;
  }
  return "internal";
}

}  // namespace mcgan
