#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aptd {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed NSL-KDD input. `line` is 1-based; `field` is the 0-based field
// index, or npos when the whole line is at fault. `source` names the file
// when known.
class ParseError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  ParseError(std::size_t line, std::size_t field, const std::string& detail,
             const std::string& source = {})
      : Error(format(line, field, detail, source)),
        line_(line),
        field_(field),
        detail_(detail),
        source_(source) {}

  std::size_t line() const { return line_; }
  std::size_t field() const { return field_; }
  const std::string& detail() const { return detail_; }
  const std::string& source() const { return source_; }

 private:
  static std::string format(std::size_t line, std::size_t field, const std::string& detail,
                            const std::string& source) {
    std::string msg = source.empty() ? std::string() : source + ": ";
    msg += "line " + std::to_string(line);
    if (field != npos) msg += ", field " + std::to_string(field + 1);
    return msg + ": " + detail;
  }

  std::size_t line_;
  std::size_t field_;
  std::string detail_;
  std::string source_;
};

class ModelIoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Failure inside one cross-validation fold.
class FoldError : public Error {
 public:
  FoldError(std::size_t fold, const std::string& what)
      : Error("fold " + std::to_string(fold) + ": " + what), fold_(fold) {}
  std::size_t fold() const { return fold_; }

 private:
  std::size_t fold_;
};

// Failure of one experiment stage (ingest, preprocess, cv, evaluate, ...).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace aptd
