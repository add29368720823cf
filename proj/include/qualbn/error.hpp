#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qualbn {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Graph-level problem: cycle, unknown node, Noisy-OR on a non-binary variable.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A location-tagged message produced by one of the text parsers.
struct Diagnostic {
  std::size_t line = 0;    // 1-based; 0 when not tied to a line
  std::size_t column = 0;  // 1-based; 0 when not tied to a column
  std::string message;

  std::string to_string() const;
  bool operator==(const Diagnostic&) const = default;
};

/// Thrown by parsers and binders; carries every diagnostic found, in source order.
class DiagnosticError : public Error {
 public:
  explicit DiagnosticError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

class ParseError : public DiagnosticError {
 public:
  using DiagnosticError::DiagnosticError;
};

class BindError : public DiagnosticError {
 public:
  using DiagnosticError::DiagnosticError;
};

/// The evidence set has joint probability zero under the model.
class ImpossibleEvidence : public Error {
 public:
  using Error::Error;
};

/// Joint enumeration was asked to visit more states than its cap allows.
class OracleTooLarge : public Error {
 public:
  using Error::Error;
};

}  // namespace qualbn
