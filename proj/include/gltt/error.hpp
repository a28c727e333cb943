#pragma once

#include <stdexcept>
#include <string>

namespace gltt {

enum class ErrorCode {
  shape,      // operand dimensions disagree
  parameter,  // argument outside its documented range
  input,      // malformed or non-finite input data
  config,     // invalid or incomplete configuration
  data,       // sequence files, point files, I/O
  numeric,    // non-finite values during training
  usage,      // API called out of order
  metric,     // invalid metric input
  version,    // checkpoint/config incompatibility
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define GLTT_DEFINE_ERROR(Name, Code)                                      \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

GLTT_DEFINE_ERROR(ShapeError, shape)
GLTT_DEFINE_ERROR(ParameterError, parameter)
GLTT_DEFINE_ERROR(InputError, input)
GLTT_DEFINE_ERROR(ConfigError, config)
GLTT_DEFINE_ERROR(DataError, data)
GLTT_DEFINE_ERROR(NumericError, numeric)
GLTT_DEFINE_ERROR(UsageError, usage)
GLTT_DEFINE_ERROR(MetricError, metric)
GLTT_DEFINE_ERROR(VersionError, version)

#undef GLTT_DEFINE_ERROR

// Writes to std::clog when the GLTT_DEBUG environment variable is set.
void debug_warn(const std::string& message);

}  // namespace gltt
