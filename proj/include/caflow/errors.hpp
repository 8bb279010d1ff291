#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace caflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or inputs (resolution, matrices, configuration files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed grid geometry, e.g. a halo point that no face chart covers.
class GridError : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

// A per-node failure that carries where it happened.
class NodeError : public Error {
 public:
  NodeError(const std::string& what, std::size_t node, double value)
      : Error(what + " at node " + std::to_string(node) + " (value " + std::to_string(value) + ")"),
        node_(node),
        value_(value) {}
  std::size_t node() const { return node_; }
  double value() const { return value_; }

 private:
  std::size_t node_;
  double value_;
};

// det(∇̄²s + sI) ≤ 0 somewhere, or a log argument left the positive reals.
class ConvexityLost : public NodeError {
 public:
  using NodeError::NodeError;
};

// Support function reached zero: the origin is no longer enclosed.
class OriginCrossed : public NodeError {
 public:
  using NodeError::NodeError;
};

class NumericalBlowup : public NodeError {
 public:
  using NodeError::NodeError;
};

// The bracket [X_1, ..., X_n, X] is (numerically) zero.
class TransversalityLost : public NodeError {
 public:
  using NodeError::NodeError;
};

}  // namespace caflow
