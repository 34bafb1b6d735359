#include "charax/core/grid.hpp"

#include <cmath>
#include <string>

#include "charax/core/errors.hpp"

namespace charax {

SpaceGrid::SpaceGrid(DomainKind kind, std::vector<Axis> axes) : kind_(kind), axes_(std::move(axes)) {
  if (axes_.empty()) throw PreconditionError("SpaceGrid: dimension must be positive");
  size_ = 1;
  for (const auto& ax : axes_) {
    if (ax.n < 2) throw PreconditionError("SpaceGrid: need at least 2 points per axis");
    if (!(ax.lo < ax.hi)) throw PreconditionError("SpaceGrid: lo < hi required on every axis");
    strides_.push_back(size_);
    size_ *= static_cast<std::size_t>(ax.n);
    const double h = kind_ == DomainKind::torus ? (ax.hi - ax.lo) / ax.n : (ax.hi - ax.lo) / (ax.n - 1);
    spacing_.push_back(h);
  }
}

SpaceGrid SpaceGrid::box(std::vector<Axis> axes) { return SpaceGrid(DomainKind::box, std::move(axes)); }

SpaceGrid SpaceGrid::torus(std::vector<double> periods, std::vector<int> n_points) {
  if (periods.size() != n_points.size()) throw PreconditionError("SpaceGrid::torus: periods/n_points size mismatch");
  std::vector<Axis> axes;
  for (std::size_t a = 0; a < periods.size(); ++a) {
    if (!(periods[a] > 0.0)) throw PreconditionError("SpaceGrid::torus: period must be positive");
    axes.push_back(Axis{0.0, periods[a], n_points[a]});
  }
  return SpaceGrid(DomainKind::torus, std::move(axes));
}

std::size_t SpaceGrid::flat(std::span<const int> idx) const {
  std::size_t f = 0;
  for (int a = 0; a < dim(); ++a) f += static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]) * stride(a);
  return f;
}

void SpaceGrid::unflatten(std::size_t f, std::span<int> idx) const {
  for (int a = 0; a < dim(); ++a) {
    const auto n = static_cast<std::size_t>(n_points(a));
    idx[static_cast<std::size_t>(a)] = static_cast<int>(f % n);
    f /= n;
  }
}

void SpaceGrid::node(std::size_t f, std::span<double> out) const {
  for (int a = 0; a < dim(); ++a) {
    const auto n = static_cast<std::size_t>(n_points(a));
    out[static_cast<std::size_t>(a)] = coord(a, static_cast<int>(f % n));
    f /= n;
  }
}

std::vector<double> SpaceGrid::nodes() const {
  const auto d = static_cast<std::size_t>(dim());
  std::vector<double> out(size_ * d);
  for (std::size_t i = 0; i < size_; ++i) node(i, std::span<double>(out.data() + i * d, d));
  return out;
}

void SpaceGrid::wrap(std::span<double> pt) const {
  if (kind_ != DomainKind::torus) return;
  for (int a = 0; a < dim(); ++a) {
    const double p = period(a);
    double& x = pt[static_cast<std::size_t>(a)];
    x -= p * std::floor((x - lo(a)) / p);
    if (x >= hi(a)) x -= p;
  }
}

void SpaceGrid::wrap_all(std::span<double> pts) const {
  if (kind_ != DomainKind::torus) return;
  const auto d = static_cast<std::size_t>(dim());
  const std::size_t n = pts.size() / d;
  for (std::size_t a = 0; a < d; ++a) {
    const double p = period(static_cast<int>(a));
    const double l = lo(static_cast<int>(a));
    const double h = hi(static_cast<int>(a));
    double* x = pts.data() + a;
    for (std::size_t i = 0; i < n; ++i) {
      double v = x[i * d];
      if (v >= l && v < h) continue;
      v -= p * std::floor((v - l) / p);
      if (v >= h) v -= p;
      x[i * d] = v;
    }
  }
}

bool SpaceGrid::contains(std::span<const double> pt, double rel_tol) const {
  if (kind_ == DomainKind::torus) return true;
  for (int a = 0; a < dim(); ++a) {
    const double tol = rel_tol * (hi(a) - lo(a));
    const double x = pt[static_cast<std::size_t>(a)];
    if (!(x >= lo(a) - tol && x <= hi(a) + tol)) return false;
  }
  return true;
}

bool SpaceGrid::same_as(const SpaceGrid& o) const {
  if (kind_ != o.kind_ || dim() != o.dim()) return false;
  for (int a = 0; a < dim(); ++a) {
    if (axis(a).n != o.axis(a).n || axis(a).lo != o.axis(a).lo || axis(a).hi != o.axis(a).hi) return false;
  }
  return true;
}

TimeGrid::TimeGrid(double t_max, int n_steps) : t_max_(t_max), n_steps_(n_steps) {
  if (n_steps < 1) throw PreconditionError("TimeGrid: n_steps must be positive");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw PreconditionError("TimeGrid: t_max must be positive and finite");
}

TimeGrid TimeGrid::with_step(double t_max, double dt) {
  if (!(dt > 0.0)) throw PreconditionError("TimeGrid::with_step: dt must be positive");
  const int n = std::max(1, static_cast<int>(std::lround(t_max / dt)));
  return TimeGrid(t_max, n);
}

void TimeGrid::locate(double t, int& k, double& theta) const {
  const double h = dt();
  if (t < -0.5 * h || t > t_max_ + 0.5 * h) {
    throw DomainViolation("TimeGrid: t = " + std::to_string(t) + " outside [0, " + std::to_string(t_max_) + "]");
  }
  if (t <= 0.0) {
    k = 0;
    theta = 0.0;
    return;
  }
  if (t >= t_max_) {
    k = n_steps_;
    theta = 0.0;
    return;
  }
  const double u = t / h;
  k = static_cast<int>(std::floor(u));
  if (k >= n_steps_) {
    k = n_steps_;
    theta = 0.0;
    return;
  }
  theta = u - k;
}

bool TimeGrid::same_as(const TimeGrid& o) const { return n_steps_ == o.n_steps_ && t_max_ == o.t_max_; }

}  // namespace charax
