#pragma once

#include <stdexcept>
#include <string>

namespace charax {

/// Base class of every error raised by the solver library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point left a box domain (interpolation query or characteristic exit).
class DomainViolation : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (grid too coarse, origin
/// outside the grid, mismatched grids, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A coefficient callback produced a non-finite value.
class CoefficientError : public Error {
 public:
  using Error::Error;
};

/// Picard iteration did not converge on the requested horizon.
class SegmentTooLong : public Error {
 public:
  SegmentTooLong(const std::string& what, double contraction)
      : Error(what), contraction_(contraction) {}
  double contraction_factor() const { return contraction_; }

 private:
  double contraction_;
};

/// An iterate's spatial Lipschitz constant went past the configured cap.
class LipCapExceeded : public Error {
 public:
  LipCapExceeded(const std::string& what, double lip) : Error(what), lip_(lip) {}
  double lip() const { return lip_; }

 private:
  double lip_;
};

/// Closed-form reference hit its singular time.
class BlowUpReached : public Error {
 public:
  using Error::Error;
};

/// Invalid run specification (CLI layer).
class SpecError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace charax
