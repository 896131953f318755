#pragma once

#include <stdexcept>
#include <string>

namespace ikfom {

// Bad dimensions, off-manifold points, non-finite inputs.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operator evaluated where it has no unique value (e.g. antipodal points on the sphere).
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double rcond)
      : std::runtime_error(what + " (rcond=" + std::to_string(rcond) + ")"), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

}  // namespace ikfom
