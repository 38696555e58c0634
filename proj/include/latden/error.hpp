#pragma once

#include <stdexcept>
#include <string>

namespace latden {

//! Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Input violates a documented precondition or invariant.
class ValidationError : public Error
{
public:
  using Error::Error;
};

//! A file or text input could not be parsed.
class ParseError : public Error
{
public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what)
    , line_(line)
  {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

//! A computation could not proceed with otherwise valid input.
class ComputationError : public Error
{
public:
  using Error::Error;
};

} // namespace latden
