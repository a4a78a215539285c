#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace sohot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One stream instance: feature vector plus class label in [0, k).
struct Sample {
  Vector features;
  int label = 0;
};

/// Thrown when a caller breaks a documented precondition (dimension
/// mismatch, invalid index, stale trace, ...).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace detail

}  // namespace sohot
