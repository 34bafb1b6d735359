#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "charax/core/fields.hpp"
#include "charax/core/grid.hpp"

namespace charax {

enum class Interp { linear, cubic };

/// Behaviour of box-domain queries outside [lo, hi].
enum class OutOfDomain {
  error,       ///< DomainViolation beyond a 1e-9 relative tolerance
  extrapolate  ///< linear extrapolation from the boundary cell
};

/// Vector-valued samples of a function on SpaceGrid (x TimeGrid).
/// values are indexed [time][node][component].
class GridFunction {
 public:
  GridFunction(SpaceGrid grid, std::optional<TimeGrid> time, int out_dim, Interp interp = Interp::linear);

  /// Samples fn(t, x, out) at every node.
  template <class Fn>
  static GridFunction sample(SpaceGrid grid, std::optional<TimeGrid> time, int out_dim, Fn&& fn,
                             Interp interp = Interp::linear);

  /// Samples a spatial field at the nodes (no time axis).
  static GridFunction from_field(const SpaceGrid& grid, const SpatialField& f, Interp interp = Interp::linear);

  /// Time-constant extension of a time-less function onto `time`.
  static GridFunction constant_extension(const GridFunction& slice, const TimeGrid& time);

  const SpaceGrid& grid() const { return grid_; }
  const std::optional<TimeGrid>& time() const { return time_; }
  int out_dim() const { return out_dim_; }
  Interp interp() const { return interp_; }
  void set_interp(Interp i) { interp_ = i; }

  std::size_t n_times() const { return time_ ? time_->n_nodes() : 1; }
  std::size_t n_space() const { return grid_.size(); }
  std::size_t slice_size() const { return n_space() * static_cast<std::size_t>(out_dim_); }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::span<double> slice(std::size_t k) { return {values_.data() + k * slice_size(), slice_size()}; }
  std::span<const double> slice(std::size_t k) const { return {values_.data() + k * slice_size(), slice_size()}; }
  double& at(std::size_t k, std::size_t node, int c = 0) { return values_[(k * n_space() + node) * out_dim_ + c]; }
  double at(std::size_t k, std::size_t node, int c = 0) const { return values_[(k * n_space() + node) * out_dim_ + c]; }
  double time_of(std::size_t k) const { return time_ ? time_->node(static_cast<int>(k)) : 0.0; }

  /// Interpolates time slice k at a batch of points (row-major n x dim).
  void eval_slice(std::size_t k, std::span<const double> pts, std::span<double> out,
                  OutOfDomain policy = OutOfDomain::error) const;

  /// Interpolates in time (linear between slices) and space.
  void eval(double t, std::span<const double> pts, std::span<double> out,
            OutOfDomain policy = OutOfDomain::error) const;

  /// Single-point convenience form.
  std::vector<double> interpolate(double t, std::span<const double> x, OutOfDomain policy = OutOfDomain::error) const;

  /// Copy of time slice k without a time axis.
  GridFunction time_slice(std::size_t k) const;
  /// First n_steps steps of the time axis (same dt).
  GridFunction truncated(int n_steps) const;

  bool all_finite() const;
  bool diverged() const { return diverged_; }
  void mark_diverged() { diverged_ = true; }

 private:
  void eval_slice_linear(const double* slice, std::span<const double> pts, std::span<double> out,
                         OutOfDomain policy) const;
  void eval_slice_cubic(const double* slice, std::span<const double> pts, std::span<double> out,
                        OutOfDomain policy) const;

  SpaceGrid grid_;
  std::optional<TimeGrid> time_;
  int out_dim_;
  Interp interp_;
  std::vector<double> values_;
  bool diverged_ = false;
};

/// Views a time-less GridFunction (or slice 0 of one) as a SpatialField.
std::shared_ptr<const SpatialField> as_spatial_field(std::shared_ptr<const GridFunction> f,
                                                     OutOfDomain policy = OutOfDomain::error);

/// Views a GridFunction as a TimeField (time-less ones are constant in t).
std::shared_ptr<const TimeField> as_time_field(std::shared_ptr<const GridFunction> f,
                                               OutOfDomain policy = OutOfDomain::error);

template <class Fn>
GridFunction GridFunction::sample(SpaceGrid grid, std::optional<TimeGrid> time, int out_dim, Fn&& fn, Interp interp) {
  GridFunction g(std::move(grid), std::move(time), out_dim, interp);
  const auto d = static_cast<std::size_t>(g.grid_.dim());
  std::vector<double> x(d);
  for (std::size_t k = 0; k < g.n_times(); ++k) {
    const double t = g.time_of(k);
    for (std::size_t i = 0; i < g.n_space(); ++i) {
      g.grid_.node(i, x);
      fn(t, static_cast<const double*>(x.data()), &g.at(k, i, 0));
    }
  }
  return g;
}

}  // namespace charax
