#include "lrsqn/errors.hpp"

namespace lrsqn {

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace lrsqn
