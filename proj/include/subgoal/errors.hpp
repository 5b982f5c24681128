#pragma once

#include <stdexcept>
#include <string>

namespace subgoal {

// Base for all library failures. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent user input (files, observations, arguments).
// The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace subgoal
