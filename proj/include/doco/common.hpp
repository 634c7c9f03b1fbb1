#ifndef DOCO_COMMON_HPP
#define DOCO_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace doco {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// 1-based round index, as in the protocol description (rounds 1..T).
using Round = std::int64_t;

// Error families. Callers catch by family; messages name the offending
// field, line or value.

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SequencingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace doco

#endif  // DOCO_COMMON_HPP
