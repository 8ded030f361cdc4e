#pragma once

#include <stdexcept>
#include <string>

namespace uavsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config or scenario field out of range. field() names the offending key path.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Input outside the mathematical domain of a model function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (masked action, empty mask, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// A belief was queried at a step earlier than its last update.
class ClockError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during training.
class TrainingHalt : public Error {
 public:
  using Error::Error;
};

}  // namespace uavsim
