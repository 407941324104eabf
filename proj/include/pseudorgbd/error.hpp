#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pseudorgbd {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by its caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input data is well-formed but unusable (empty cloud, NaN embedding, id mismatch...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// On-disk bytes do not follow the declared format.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace pseudorgbd
