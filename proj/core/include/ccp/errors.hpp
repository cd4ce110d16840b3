#pragma once

#include <stdexcept>
#include <string>

namespace ccp {

// Malformed bytes in an input file (CIFAR records, PPM headers, checkpoints).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed but unusable input: empty datasets, out-of-range labels,
// inconsistent shapes, invalid parameters.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal consistency violated. Seeing one of these is a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ccp
