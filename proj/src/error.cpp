#include "gltt/error.hpp"

#include <cstdlib>
#include <iostream>

namespace gltt {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::shape: return "shape";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::input: return "input";
    case ErrorCode::config: return "config";
    case ErrorCode::data: return "data";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::usage: return "usage";
    case ErrorCode::metric: return "metric";
    case ErrorCode::version: return "version";
  }
  return "unknown";
}

void debug_warn(const std::string& message) {
  static const bool enabled = std::getenv("GLTT_DEBUG") != nullptr;
  if (enabled) std::clog << "[gltt] " << message << '\n';
}

}  // namespace gltt
