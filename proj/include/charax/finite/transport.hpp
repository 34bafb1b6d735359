#pragma once

#include <atomic>
#include <span>
#include <vector>

#include "charax/core/fields.hpp"
#include "charax/core/grid_function.hpp"

namespace charax::finite {

/// Backward characteristic x(s), s in [0, t], of dx/ds = B(t - s, x).
struct FlowResult {
  std::vector<double> s;     ///< substep times 0 = s_0 < ... = t
  std::vector<double> path;  ///< row-major (s.size() x dim)
  bool exited = false;       ///< box domains: left the domain beyond tolerance

  std::span<const double> at(std::size_t j, int dim) const {
    return {path.data() + j * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  std::span<const double> end(int dim) const { return at(s.size() - 1, dim); }
};

/// Classical RK4 with n_sub substeps per dt (the path takes
/// ceil(t/dt) * n_sub equal steps). Torus points are wrapped every step.
FlowResult solve_flow(const TimeField& B, double t, std::span<const double> x0, double dt, int n_sub,
                      const SpaceGrid& domain);

/// Drift and source of a transport problem evaluated together, so that
/// implementations sharing work between the two (phi_map interpolates U
/// once for both) can do so.
class TransportFields {
 public:
  virtual ~TransportFields() = default;
  virtual int dim() const = 0;
  virtual int out_dim() const = 0;
  virtual bool has_source() const = 0;
  virtual void drift(double t, std::span<const double> x, std::span<double> b) const = 0;
  /// b = B(t, x) and a = A(t, x).
  virtual void drift_and_source(double t, std::span<const double> x, std::span<double> b,
                                std::span<double> a) const = 0;
};

/// TransportFields from a separate drift B and source A (A == nullptr: A = 0).
class SplitFields final : public TransportFields {
 public:
  SplitFields(const TimeField* a, const TimeField& b) : a_(a), b_(b) {}
  int dim() const override { return b_.in_dim(); }
  int out_dim() const override { return a_ ? a_->out_dim() : -1; }
  bool has_source() const override { return a_ != nullptr; }
  void drift(double t, std::span<const double> x, std::span<double> b) const override { b_.eval(t, x, b); }
  void drift_and_source(double t, std::span<const double> x, std::span<double> b,
                        std::span<double> a) const override {
    b_.eval(t, x, b);
    if (a_) a_->eval(t, x, a);
  }

 private:
  const TimeField* a_;
  const TimeField& b_;
};

struct TransportOptions {
  int n_sub = 4;
  /// error: a characteristic leaving a box domain throws DomainViolation.
  /// extrapolate: it keeps going and is counted in `exits`.
  OutOfDomain exit_policy = OutOfDomain::error;
  std::atomic<long>* exits = nullptr;
};

/// Psi(t, x) = int_0^t A(t - s, x(s)) ds + U0(x(t)) at every node of
/// time x grid, trapezoid rule on the flow substeps.
GridFunction psi_transport(const TimeGrid& time, const SpaceGrid& grid, const TransportFields& fields,
                           const SpatialField& u0, const TransportOptions& opt = {});

/// Same with separate A and B; A == nullptr means A = 0.
GridFunction psi_transport(const TimeGrid& time, const SpaceGrid& grid, const TimeField* A, const TimeField& B,
                           const SpatialField& u0, const TransportOptions& opt = {});

}  // namespace charax::finite
