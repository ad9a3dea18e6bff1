#ifndef ASMR_ERRORS_HPP_
#define ASMR_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace asmr {

// Base class for every error raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data loading and validation.
struct IoError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct AlignmentError : Error { using Error::Error; };

// Model-specification language.
struct ParseError : Error {
  int line = 0;
  int column = 0;
  ParseError(const std::string& msg, int line_, int column_)
      : Error(msg), line(line_), column(column_) {}
};
struct HeaderError : Error { using Error::Error; };
struct TypeError : Error { using Error::Error; };
struct EvalError : Error { using Error::Error; };

// Fitting.
struct LengthMismatch : Error { using Error::Error; };
struct OptimizerFailure : Error { using Error::Error; };

// Reviser.
struct EmptyRegretSet : Error { using Error::Error; };
struct NoProgramFound : Error { using Error::Error; };
struct MultiplePrograms : Error { using Error::Error; };

}  // namespace asmr

#endif  // ASMR_ERRORS_HPP_
