#include "allabel/error.hpp"

namespace allabel {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

ParseError::ParseError(const std::string& source, const std::string& what)
    : Error(source + ": " + what) {}

}  // namespace allabel
