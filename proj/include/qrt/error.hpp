#pragma once

#include <stdexcept>
#include <string>

namespace qrt {

/// Bad input data: unreadable files, malformed records, violated invariants.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or command-line usage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A remote embedding service could not produce a valid answer.
class RemoteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qrt
