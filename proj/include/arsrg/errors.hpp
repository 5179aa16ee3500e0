#pragma once

#include <stdexcept>
#include <string>

namespace arsrg {

// Errors are split by how the caller should react: IoError and FormatError
// are bad-input diagnostics, DataError covers semantic problems in otherwise
// well-formed input, InternalError signals a broken invariant.

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InternalError : std::logic_error {
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace arsrg
