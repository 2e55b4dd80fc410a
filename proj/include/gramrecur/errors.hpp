#pragma once

#include <stdexcept>
#include <string>

namespace gramrecur {

// Precondition violations on public operations.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical invariant failed (e.g. a Gram spectrum far below zero).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A finite deterministic bit stream ran out.
class StreamExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A statistic was requested over an empty sample.
class EmptySample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gramrecur
