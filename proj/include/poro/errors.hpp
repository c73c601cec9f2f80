#pragma once

#include <stdexcept>
#include <string>

namespace poro {

// Error classes map 1:1 to CLI exit codes (see README).
enum class ErrorCode {
  internal = 1,
  config = 2,
  bad_spec = 3,
  parse = 4,
  unsupported_element = 5,
  missing_tag = 6,
  degenerate_element = 7,
  not_found = 8,
  invalid_poisson = 9,
  degenerate_stiffness = 10,
  nonphysical_density = 11,
  not_converged = 12,
  indefinite_matrix = 13,
  inconsistent_state = 14,
  missing_baseline = 15,
  io = 16,
  verify_failed = 17,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

private:
  ErrorCode code_;
};

#define PORO_DEFINE_ERROR(Name, code_value)                                       \
  class Name : public Error {                                                     \
  public:                                                                          \
    explicit Name(const std::string& what) : Error(ErrorCode::code_value, what) {} \
  }

PORO_DEFINE_ERROR(ConfigError, config);
PORO_DEFINE_ERROR(BadSpec, bad_spec);
PORO_DEFINE_ERROR(ParseError, parse);
PORO_DEFINE_ERROR(UnsupportedElement, unsupported_element);
PORO_DEFINE_ERROR(MissingTag, missing_tag);
PORO_DEFINE_ERROR(DegenerateElement, degenerate_element);
PORO_DEFINE_ERROR(NotFound, not_found);
PORO_DEFINE_ERROR(InvalidPoisson, invalid_poisson);
PORO_DEFINE_ERROR(DegenerateStiffness, degenerate_stiffness);
PORO_DEFINE_ERROR(NonphysicalDensity, nonphysical_density);
PORO_DEFINE_ERROR(NotConverged, not_converged);
PORO_DEFINE_ERROR(IndefiniteMatrix, indefinite_matrix);
PORO_DEFINE_ERROR(InconsistentState, inconsistent_state);
PORO_DEFINE_ERROR(MissingBaseline, missing_baseline);
PORO_DEFINE_ERROR(IoError, io);

#undef PORO_DEFINE_ERROR

}  // namespace poro
