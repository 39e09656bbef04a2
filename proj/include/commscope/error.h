#ifndef COMMSCOPE_ERROR_H_
#define COMMSCOPE_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace commscope {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid value passed to a constructor or operation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unknown preset or profile name.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Rank placement inconsistent with the hardware (e.g. node over capacity).
class LayoutError : public Error {
 public:
  using Error::Error;
};

// Ratio or ranking requested over a configuration that moves no bytes.
class DegenerateLayoutError : public Error {
 public:
  using Error::Error;
};

// String that does not name a member of a closed enumeration.
class EnumError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed JSON-lines input. line() is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string text, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason + ": " + text),
        line_(line),
        text_(std::move(text)) {}

  std::size_t line() const { return line_; }
  const std::string& text() const { return text_; }

 private:
  std::size_t line_;
  std::string text_;
};

}  // namespace commscope

#endif  // COMMSCOPE_ERROR_H_
