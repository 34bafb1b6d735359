#include "charax/core/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "charax/core/errors.hpp"
#include "charax/simd/kernels.hpp"

namespace charax {

GridFunction::GridFunction(SpaceGrid grid, std::optional<TimeGrid> time, int out_dim, Interp interp)
    : grid_(std::move(grid)), time_(std::move(time)), out_dim_(out_dim), interp_(interp) {
  if (out_dim_ < 1) throw PreconditionError("GridFunction: out_dim must be positive");
  if (interp_ == Interp::cubic && grid_.dim() != 1) {
    throw PreconditionError("GridFunction: cubic interpolation is only available in 1-d");
  }
  values_.assign(n_times() * slice_size(), 0.0);
}

GridFunction GridFunction::from_field(const SpaceGrid& grid, const SpatialField& f, Interp interp) {
  if (f.in_dim() != grid.dim()) throw PreconditionError("GridFunction::from_field: dimension mismatch");
  GridFunction g(grid, std::nullopt, f.out_dim(), interp);
  const auto pts = grid.nodes();
  f.eval(pts, g.values_);
  return g;
}

GridFunction GridFunction::constant_extension(const GridFunction& slice, const TimeGrid& time) {
  GridFunction g(slice.grid_, time, slice.out_dim_, slice.interp_);
  const auto src = slice.slice(0);
  for (std::size_t k = 0; k < g.n_times(); ++k) std::copy(src.begin(), src.end(), g.slice(k).begin());
  return g;
}

namespace {

[[noreturn]] void throw_outside(const SpaceGrid& grid, std::span<const double> pt) {
  std::ostringstream os;
  os.precision(17);
  os << "point (";
  for (int a = 0; a < grid.dim(); ++a) os << (a ? ", " : "") << pt[static_cast<std::size_t>(a)];
  os << ") outside box domain";
  throw DomainViolation(os.str());
}

struct AxisLoc {
  std::size_t i0, i1;
  double frac;
};

AxisLoc locate_axis(const SpaceGrid& grid, int a, double x) {
  const int n = grid.n_points(a);
  const double u = (x - grid.lo(a)) / grid.spacing(a);
  if (grid.is_torus()) {
    const double nd = static_cast<double>(n);
    const double w = u - nd * std::floor(u / nd);
    const double fl = std::floor(w);
    long i0 = static_cast<long>(fl);
    if (i0 >= n) i0 -= n;
    if (i0 < 0) i0 += n;
    const long i1 = i0 + 1 == n ? 0 : i0 + 1;
    return {static_cast<std::size_t>(i0), static_cast<std::size_t>(i1), w - fl};
  }
  double fl = std::floor(u);
  fl = std::clamp(fl, 0.0, static_cast<double>(n - 2));
  const auto i0 = static_cast<std::size_t>(fl);
  return {i0, i0 + 1, u - fl};
}

}  // namespace

void GridFunction::eval_slice_linear(const double* sl, std::span<const double> pts, std::span<double> out,
                                     OutOfDomain policy) const {
  const int d = grid_.dim();
  const auto du = static_cast<std::size_t>(d);
  const std::size_t count = pts.size() / du;
  if (!grid_.is_torus() && policy == OutOfDomain::error) {
    for (std::size_t i = 0; i < count; ++i) {
      const auto p = pts.subspan(i * du, du);
      if (!grid_.contains(p)) throw_outside(grid_, p);
    }
  }
  if (d == 1 && out_dim_ == 1) {
    const auto& k = simd::kernels();
    const auto n = static_cast<std::size_t>(grid_.n_points(0));
    const double inv_dx = 1.0 / grid_.spacing(0);
    if (grid_.is_torus()) {
      k.lerp_periodic(sl, n, grid_.lo(0), inv_dx, pts.data(), out.data(), count);
    } else {
      k.lerp_clamped(sl, n, grid_.lo(0), inv_dx, pts.data(), out.data(), count);
    }
    return;
  }
  const auto od = static_cast<std::size_t>(out_dim_);
  std::vector<AxisLoc> loc(du);
  const std::size_t corners = std::size_t{1} << du;
  for (std::size_t i = 0; i < count; ++i) {
    for (int a = 0; a < d; ++a) loc[static_cast<std::size_t>(a)] = locate_axis(grid_, a, pts[i * du + a]);
    double* o = out.data() + i * od;
    std::fill(o, o + od, 0.0);
    for (std::size_t c = 0; c < corners; ++c) {
      double w = 1.0;
      std::size_t flat = 0;
      for (std::size_t a = 0; a < du; ++a) {
        const bool hi = (c >> a) & 1U;
        w *= hi ? loc[a].frac : 1.0 - loc[a].frac;
        flat += (hi ? loc[a].i1 : loc[a].i0) * grid_.stride(static_cast<int>(a));
      }
      const double* v = sl + flat * od;
      for (std::size_t q = 0; q < od; ++q) o[q] += w * v[q];
    }
  }
}

void GridFunction::eval_slice_cubic(const double* sl, std::span<const double> pts, std::span<double> out,
                                    OutOfDomain policy) const {
  const std::size_t count = pts.size();
  const int n = grid_.n_points(0);
  const auto od = static_cast<std::size_t>(out_dim_);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = pts[i];
    if (!grid_.is_torus() && policy == OutOfDomain::error && !grid_.contains(pts.subspan(i, 1))) {
      throw_outside(grid_, pts.subspan(i, 1));
    }
    const AxisLoc l = locate_axis(grid_, 0, x);
    const auto i0 = static_cast<long>(l.i0);
    long im, ip;
    bool linear = false;
    if (grid_.is_torus()) {
      im = i0 == 0 ? n - 1 : i0 - 1;
      ip = static_cast<long>(l.i1) + 1 == n ? 0 : static_cast<long>(l.i1) + 1;
    } else {
      im = i0 - 1;
      ip = static_cast<long>(l.i1) + 1;
      linear = im < 0 || ip >= n || l.frac < 0.0 || l.frac > 1.0;
    }
    for (std::size_t q = 0; q < od; ++q) {
      const double a1 = sl[static_cast<std::size_t>(i0) * od + q];
      const double a2 = sl[l.i1 * od + q];
      const double f = l.frac;
      if (linear) {
        out[i * od + q] = a1 + f * (a2 - a1);
        continue;
      }
      const double a0 = sl[static_cast<std::size_t>(im) * od + q];
      const double a3 = sl[static_cast<std::size_t>(ip) * od + q];
      out[i * od + q] =
          a1 + 0.5 * f * (a2 - a0 + f * (2.0 * a0 - 5.0 * a1 + 4.0 * a2 - a3 + f * (3.0 * (a1 - a2) + a3 - a0)));
    }
  }
}

void GridFunction::eval_slice(std::size_t k, std::span<const double> pts, std::span<double> out,
                              OutOfDomain policy) const {
  const double* sl = values_.data() + k * slice_size();
  if (interp_ == Interp::cubic) {
    eval_slice_cubic(sl, pts, out, policy);
  } else {
    eval_slice_linear(sl, pts, out, policy);
  }
}

void GridFunction::eval(double t, std::span<const double> pts, std::span<double> out, OutOfDomain policy) const {
  if (!time_) {
    eval_slice(0, pts, out, policy);
    return;
  }
  int k = 0;
  double theta = 0.0;
  time_->locate(t, k, theta);
  eval_slice(static_cast<std::size_t>(k), pts, out, policy);
  if (theta == 0.0) return;
  thread_local std::vector<double> next;
  next.resize(out.size());
  eval_slice(static_cast<std::size_t>(k) + 1, pts, next, policy);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] + theta * (next[i] - out[i]);
}

std::vector<double> GridFunction::interpolate(double t, std::span<const double> x, OutOfDomain policy) const {
  if (x.size() != static_cast<std::size_t>(grid_.dim())) throw PreconditionError("interpolate: point dimension");
  std::vector<double> out(static_cast<std::size_t>(out_dim_));
  eval(t, x, out, policy);
  return out;
}

GridFunction GridFunction::time_slice(std::size_t k) const {
  GridFunction g(grid_, std::nullopt, out_dim_, interp_);
  const auto s = slice(k);
  std::copy(s.begin(), s.end(), g.values_.begin());
  return g;
}

GridFunction GridFunction::truncated(int n_steps) const {
  if (!time_ || n_steps < 1 || n_steps > time_->n_steps()) throw PreconditionError("GridFunction::truncated");
  GridFunction g(grid_, TimeGrid(time_->node(n_steps), n_steps), out_dim_, interp_);
  std::copy(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(g.values_.size()), g.values_.begin());
  return g;
}

bool GridFunction::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

class GridSpatial final : public SpatialField {
 public:
  GridSpatial(std::shared_ptr<const GridFunction> f, OutOfDomain p) : f_(std::move(f)), policy_(p) {}
  int in_dim() const override { return f_->grid().dim(); }
  int out_dim() const override { return f_->out_dim(); }
  void eval(std::span<const double> x, std::span<double> out) const override { f_->eval_slice(0, x, out, policy_); }

 private:
  std::shared_ptr<const GridFunction> f_;
  OutOfDomain policy_;
};

class GridTime final : public TimeField {
 public:
  GridTime(std::shared_ptr<const GridFunction> f, OutOfDomain p) : f_(std::move(f)), policy_(p) {}
  int in_dim() const override { return f_->grid().dim(); }
  int out_dim() const override { return f_->out_dim(); }
  void eval(double t, std::span<const double> x, std::span<double> out) const override {
    f_->eval(t, x, out, policy_);
  }

 private:
  std::shared_ptr<const GridFunction> f_;
  OutOfDomain policy_;
};

}  // namespace

std::shared_ptr<const SpatialField> as_spatial_field(std::shared_ptr<const GridFunction> f, OutOfDomain policy) {
  return std::make_shared<GridSpatial>(std::move(f), policy);
}

std::shared_ptr<const TimeField> as_time_field(std::shared_ptr<const GridFunction> f, OutOfDomain policy) {
  return std::make_shared<GridTime>(std::move(f), policy);
}

}  // namespace charax
