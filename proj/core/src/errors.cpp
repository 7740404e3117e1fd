#include "mns/errors.hpp"

namespace mns {

ParseError::ParseError(const std::string& file, std::size_t line,
                       std::size_t column, const std::string& what)
    : Error(file + ":" + std::to_string(line) +
            (column > 0 ? ":" + std::to_string(column) : std::string{}) +
            ": " + what),
      line_(line),
      column_(column) {}

}  // namespace mns
