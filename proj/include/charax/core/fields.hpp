#pragma once
// Batch-evaluated coefficient interfaces. Points and values are row-major:
// a batch of n points in dimension d is a span of n*d doubles.

#include <functional>
#include <memory>
#include <span>

namespace charax {

/// x -> R^out_dim (initial conditions, terminal data).
class SpatialField {
 public:
  virtual ~SpatialField() = default;
  virtual int in_dim() const = 0;
  virtual int out_dim() const = 0;
  virtual void eval(std::span<const double> x, std::span<double> out) const = 0;
};

/// (t, x) -> R^out_dim (the source A and drift B of a transport problem).
class TimeField {
 public:
  virtual ~TimeField() = default;
  virtual int in_dim() const = 0;
  virtual int out_dim() const = 0;
  virtual void eval(double t, std::span<const double> x, std::span<double> out) const = 0;
};

/// (x, p) -> R^out_dim (the nonlinearities F and G).
class StateField {
 public:
  virtual ~StateField() = default;
  virtual int in_dim() const = 0;
  virtual int p_dim() const = 0;
  virtual int out_dim() const = 0;
  virtual void eval(std::span<const double> x, std::span<const double> p, std::span<double> out) const = 0;
  /// True only when eval is known to return zeros (lets solvers skip work).
  virtual bool is_zero() const { return false; }
};

/// Self-map x -> S(x) of the state domain together with its Jacobian.
class PointMap {
 public:
  virtual ~PointMap() = default;
  virtual int dim() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> out) const = 0;
  /// Row-major d x d Jacobian per point (n*d*d values).
  virtual void jacobian(std::span<const double> x, std::span<double> out) const = 0;
};

using SpatialFn = std::function<void(const double* x, double* out)>;
using TimeFn = std::function<void(double t, const double* x, double* out)>;
using StateFn = std::function<void(const double* x, const double* p, double* out)>;

/// Pointwise adapters for callers that prefer plain lambdas.
std::shared_ptr<const SpatialField> make_spatial(int in_dim, int out_dim, SpatialFn fn);
std::shared_ptr<const TimeField> make_time(int in_dim, int out_dim, TimeFn fn);
std::shared_ptr<const StateField> make_state(int in_dim, int p_dim, int out_dim, StateFn fn);

/// Lifts a spatial field to a time-independent TimeField.
std::shared_ptr<const TimeField> constant_in_time(std::shared_ptr<const SpatialField> f);

/// The zero TimeField.
std::shared_ptr<const TimeField> zero_time_field(int in_dim, int out_dim);

/// Affine map S(x) = M x + b (constant Jacobian M).
std::shared_ptr<const PointMap> make_affine_map(int dim, std::span<const double> matrix, std::span<const double> offset);
std::shared_ptr<const PointMap> identity_map(int dim);

}  // namespace charax
