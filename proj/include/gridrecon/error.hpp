#pragma once

#include <stdexcept>
#include <string>

namespace gridrecon {

/// Malformed input document; `path` names the offending field (e.g. `lines[3].r_ohm`).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Well-formed input that breaks a model invariant (singular impedance, dangling id, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver returned a point that fails the independent feasibility audit.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridrecon
