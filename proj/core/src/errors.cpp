#include "hsflow/errors.hpp"

#include <fmt/format.h>

namespace hsflow {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : InputError(fmt::format("line {}, column {}: {}", line, column, message)), line_(line), column_(column) {}

}  // namespace hsflow
