#ifndef ASMR_MSL_PARSE_HPP_
#define ASMR_MSL_PARSE_HPP_

#include <cstddef>
#include <string_view>

#include "asmr/msl/ast.hpp"

namespace asmr::msl {

// Parses a complete program; trailing content other than whitespace and
// comments is a ParseError. Throws ParseError, HeaderError or
// ValidationError (parameter reference out of range).
ModelProgram parse(std::string_view source);

// Parses one program starting at `offset` in `text` and reports how many
// characters it consumed, ignoring whatever follows. Used by the reviser to
// cut programs out of chat-endpoint responses.
ModelProgram parse_prefix(std::string_view text, std::size_t offset,
                          std::size_t& consumed);

}  // namespace asmr::msl

#endif  // ASMR_MSL_PARSE_HPP_
