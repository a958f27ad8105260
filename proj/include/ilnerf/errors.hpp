#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ilnerf {

// Bad caller input: wrong sizes, out-of-range values, non-finite numbers.
using InvalidArgument = std::invalid_argument;

// Numerically degenerate input (singular matrices and the like).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation whose cost exceeds its configured budget.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class Diverged : public std::runtime_error {
 public:
  Diverged(const std::string& what, long iteration, int stage = -1)
      : std::runtime_error(what), iteration_(iteration), stage_(stage) {}

  long iteration() const { return iteration_; }
  int stage() const { return stage_; }

 private:
  long iteration_;
  int stage_;
};

}  // namespace ilnerf
