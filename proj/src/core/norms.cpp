#include "charax/core/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "charax/core/errors.hpp"
#include "charax/simd/kernels.hpp"

namespace charax {
namespace {

double edge_slope(const GridFunction& f, const double* sl) {
  const auto& g = f.grid();
  const auto od = static_cast<std::size_t>(f.out_dim());
  if (g.dim() == 1 && od == 1) {
    return simd::kernels().max_edge_slope(sl, g.size(), 1.0 / g.spacing(0), g.is_torus());
  }
  std::vector<int> idx(static_cast<std::size_t>(g.dim()));
  double best = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) {
    g.unflatten(node, idx);
    for (int a = 0; a < g.dim(); ++a) {
      const int i = idx[static_cast<std::size_t>(a)];
      std::size_t nb;
      if (i + 1 < g.n_points(a)) {
        nb = node + g.stride(a);
      } else if (g.is_torus()) {
        nb = node - static_cast<std::size_t>(i) * g.stride(a);
      } else {
        continue;
      }
      double s = 0.0;
      for (std::size_t c = 0; c < od; ++c) {
        const double dv = sl[nb * od + c] - sl[node * od + c];
        s += dv * dv;
      }
      const double slope = std::sqrt(s) / g.spacing(a);
      if (std::isnan(slope)) return slope;
      best = std::max(best, slope);
    }
  }
  return best;
}

}  // namespace

double lipschitz_x_slice(const GridFunction& f, std::size_t k) { return edge_slope(f, f.slice(k).data()); }

double lipschitz_x(const GridFunction& f, double t) {
  if (!f.time()) return lipschitz_x_slice(f, 0);
  int k = 0;
  double theta = 0.0;
  f.time()->locate(t, k, theta);
  if (theta == 0.0) return lipschitz_x_slice(f, static_cast<std::size_t>(k));
  const auto a = f.slice(static_cast<std::size_t>(k));
  const auto b = f.slice(static_cast<std::size_t>(k) + 1);
  std::vector<double> blend(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) blend[i] = a[i] + theta * (b[i] - a[i]);
  return edge_slope(f, blend.data());
}

double growth_norm_slice(const GridFunction& f, std::size_t k) {
  const auto& g = f.grid();
  if (g.is_torus()) throw PreconditionError("growth_norm: requires a box grid");
  for (int a = 0; a < g.dim(); ++a) {
    if (!(g.lo(a) <= 0.0 && 0.0 <= g.hi(a))) throw PreconditionError("growth_norm: origin outside grid");
  }
  const auto d = static_cast<std::size_t>(g.dim());
  const auto od = static_cast<std::size_t>(f.out_dim());
  const auto sl = f.slice(k);
  std::vector<double> radius(g.size()), mag(g.size()), x(d);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, x);
    double r2 = 0.0, v2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    for (std::size_t c = 0; c < od; ++c) v2 += sl[i * od + c] * sl[i * od + c];
    radius[i] = std::sqrt(r2);
    mag[i] = std::sqrt(v2);
  }
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return radius[a] < radius[b]; });
  double running = 0.0, best = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const std::size_t i = order[j];
    running = std::max(running, mag[i]);
    const bool shell_end = j + 1 == order.size() || radius[order[j + 1]] != radius[i];
    if (shell_end && radius[i] > 0.0) best = std::max(best, running / radius[i]);
  }
  return best;
}

double growth_norm(const GridFunction& f) {
  double best = 0.0;
  for (std::size_t k = 0; k < f.n_times(); ++k) best = std::max(best, growth_norm_slice(f, k));
  return best;
}

double sup_norm_slice(const GridFunction& f, std::size_t k) {
  double m = 0.0;
  for (double v : f.slice(k)) {
    if (std::isnan(v)) return v;
    m = std::max(m, std::fabs(v));
  }
  return m;
}

double sup_norm(const GridFunction& f) {
  double m = 0.0;
  for (std::size_t k = 0; k < f.n_times(); ++k) {
    const double s = sup_norm_slice(f, k);
    if (std::isnan(s)) return s;
    m = std::max(m, s);
  }
  return m;
}

double sup_diff(const GridFunction& f, const GridFunction& g) {
  if (!f.grid().same_as(g.grid()) || f.values().size() != g.values().size()) {
    throw PreconditionError("sup_diff: grid mismatch");
  }
  return simd::kernels().max_abs_diff(f.values().data(), g.values().data(), f.values().size());
}

}  // namespace charax
