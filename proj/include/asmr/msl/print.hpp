#ifndef ASMR_MSL_PRINT_HPP_
#define ASMR_MSL_PRINT_HPP_

#include <string>

#include "asmr/msl/ast.hpp"

namespace asmr::msl {

// Canonical source form: parse(print(p)) is structurally equal to p and
// print is idempotent. Numbers use the shortest round-tripping decimal form.
std::string print(const ModelProgram& program);

}  // namespace asmr::msl

#endif  // ASMR_MSL_PRINT_HPP_
