#pragma once

#include <stdexcept>
#include <string>

namespace triplh {

// Caller passed something the contract does not accept (bad shape, bad index,
// bad config value).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data could not be read or is malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimization failed at runtime (non-finite loss or gradient).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace triplh
