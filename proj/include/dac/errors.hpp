#pragma once

#include <stdexcept>
#include <string>

namespace dac {

// Base class for all errors raised by the dac library. CLI maps these to
// exit code 1; anything else is an internal error (exit code 2).
class DacError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text in one of the block-format files. Carries a 1-based line
// number when the location is known (0 otherwise).
class ParseError : public DacError {
 public:
  ParseError(std::string message, std::size_t line)
      : DacError(line ? "line " + std::to_string(line) + ": " + message
                      : message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A structurally invalid pipeline or graph (duplicate producer, dangling
// reference, cycle, bad stage name, ...).
class ValidationError : public DacError {
 public:
  using DacError::DacError;
};

// Unknown revision, ref, stage, experiment, or a path absent at a revision.
class NotFoundError : public DacError {
 public:
  using DacError::DacError;
};

// An object id that is not present in the local store. Distinct from
// NotFoundError so callers can fall back to a remote fetch.
class ObjectMissingError : public DacError {
 public:
  explicit ObjectMissingError(const std::string& oid_hex)
      : DacError("object missing: " + oid_hex), oid_hex_(oid_hex) {}
  const std::string& oid_hex() const { return oid_hex_; }

 private:
  std::string oid_hex_;
};

// Tracked metadata files differ from the checked-out revision and --force
// was not given.
class DirtyWorkspaceError : public DacError {
 public:
  using DacError::DacError;
};

// A stage exists at the revision but has never been run there (no lock
// entry), so it has no loadable results.
class NoResultsError : public DacError {
 public:
  using DacError::DacError;
};

// Bad command-line usage.
class UsageError : public DacError {
 public:
  using DacError::DacError;
};

}  // namespace dac
