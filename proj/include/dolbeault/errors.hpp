#pragma once

#include <stdexcept>
#include <string>

namespace dolbeault {

/// Input rejected by a constructor or operation precondition.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A composed result could not be certified from the supplied inputs
/// (e.g. too few factor eigenvalues for a product spectrum).
class InsufficientInputError : public std::runtime_error {
 public:
  explicit InsufficientInputError(const std::string& what) : std::runtime_error(what) {}
};

/// Internal consistency check failed between independently assembled operators.
class ConsistencyError : public std::runtime_error {
 public:
  explicit ConsistencyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dolbeault
