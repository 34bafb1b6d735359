#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace charax {

enum class DomainKind { box, torus };

/// Tensor-product grid on a box [lo, hi]^d (endpoints included) or on a
/// torus of given periods (duplicate endpoint excluded). Nodes are stored
/// with axis 0 varying fastest.
class SpaceGrid {
 public:
  struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    int n = 2;
  };

  static SpaceGrid box(std::vector<Axis> axes);
  static SpaceGrid torus(std::vector<double> periods, std::vector<int> n_points);

  /// Convenience 1-d constructors.
  static SpaceGrid box1d(double lo, double hi, int n) { return box({Axis{lo, hi, n}}); }
  static SpaceGrid torus1d(double period, int n) { return torus({period}, {n}); }

  DomainKind kind() const { return kind_; }
  bool is_torus() const { return kind_ == DomainKind::torus; }
  int dim() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return size_; }

  const Axis& axis(int a) const { return axes_[static_cast<std::size_t>(a)]; }
  int n_points(int a) const { return axis(a).n; }
  double lo(int a) const { return axis(a).lo; }
  double hi(int a) const { return axis(a).hi; }
  double period(int a) const { return axis(a).hi - axis(a).lo; }
  double spacing(int a) const { return spacing_[static_cast<std::size_t>(a)]; }
  double coord(int a, int i) const { return axis(a).lo + i * spacing(a); }

  /// Multi-index <-> flat index.
  std::size_t flat(std::span<const int> idx) const;
  void unflatten(std::size_t flat, std::span<int> idx) const;
  std::size_t stride(int a) const { return strides_[static_cast<std::size_t>(a)]; }

  void node(std::size_t flat, std::span<double> out) const;
  /// All nodes, row-major (size() x dim()).
  std::vector<double> nodes() const;

  /// Wraps a point into the fundamental cell (torus only; no-op on boxes).
  void wrap(std::span<double> pt) const;
  /// wrap() applied to a row-major batch of points.
  void wrap_all(std::span<double> pts) const;
  /// Box membership with an absolute tolerance per axis of tol*(hi-lo).
  bool contains(std::span<const double> pt, double rel_tol = 1e-9) const;

  bool same_as(const SpaceGrid& other) const;

 private:
  SpaceGrid(DomainKind kind, std::vector<Axis> axes);

  DomainKind kind_;
  std::vector<Axis> axes_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Uniform time grid 0 = t_0 < ... < t_n = t_max.
class TimeGrid {
 public:
  TimeGrid(double t_max, int n_steps);
  /// Grid with step as close to `dt` as possible that ends exactly at t_max.
  static TimeGrid with_step(double t_max, double dt);

  double t_max() const { return t_max_; }
  int n_steps() const { return n_steps_; }
  std::size_t n_nodes() const { return static_cast<std::size_t>(n_steps_) + 1; }
  double dt() const { return t_max_ / n_steps_; }
  double node(int k) const { return k == n_steps_ ? t_max_ : k * dt(); }

  /// Locates t: returns k and theta with t = (1-theta) t_k + theta t_{k+1}.
  /// Values within dt/2 outside [0, t_max] are clamped; further out throws.
  void locate(double t, int& k, double& theta) const;

  bool same_as(const TimeGrid& other) const;

 private:
  double t_max_;
  int n_steps_;
};

}  // namespace charax
