#pragma once

#include <stdexcept>
#include <string>

namespace stormrain {

// Malformed or inconsistent input data (bad CSV rows, duplicate records,
// off-grid references, missing upstream artifacts). CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure inside an algorithm (non-finite log-density, failed
// factorization). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stormrain
