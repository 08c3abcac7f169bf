#pragma once

#include <stdexcept>
#include <string>

namespace gramstab {

// Precondition / dimension violations.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the numeric domain of an operation.
class RangeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Symmetric matrix failed a positive (semi)definiteness requirement.
class NotSpdError : public std::runtime_error {
 public:
  NotSpdError(const std::string& msg, int pivot_index = -1)
      : std::runtime_error(msg), pivot_index_(pivot_index) {}
  int pivot_index() const { return pivot_index_; }

 private:
  int pivot_index_;
};

// Quadrature failed to converge under node doubling.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gramian construction produced a non-invertible Q.
class ControllabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Kalman and Gramian controllability verdicts disagree.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Kronecker Lyapunov system is singular (spectra of A+lambda*I and -(A+lambda*I)* overlap).
class SpectrumOverlapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed-loop assembly requested under hypotheses the pack does not satisfy.
class ModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Nonlinearity failed its declared Lipschitz / vanishing spot checks.
class RejectedNonlinearityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trajectory left the guarded basin during nonlinear integration.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Step-size control underflowed.
class StiffnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Audit precondition not met (e.g. energy identity off the coupled manifold).
class AuditNotApplicableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Insufficient samples for a decay fit.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gramstab
