#include <cmath>
#include <cstdint>

#include "charax/simd/kernels.hpp"
#include "fv_cell.hpp"

namespace charax::simd {
namespace {

void lerp_periodic(const double* table, std::size_t n, double origin, double inv_dx, const double* x, double* out,
                   std::size_t count) {
  const double nd = static_cast<double>(n);
  const double inv_n = 1.0 / nd;
  for (std::size_t i = 0; i < count; ++i) {
    const double u = (x[i] - origin) * inv_dx;
    const double w = u - nd * std::floor(u * inv_n);
    const double fl = std::floor(w);
    const double frac = w - fl;
    auto i0 = static_cast<std::int64_t>(fl);
    if (i0 >= static_cast<std::int64_t>(n)) i0 -= static_cast<std::int64_t>(n);
    if (i0 < 0) i0 += static_cast<std::int64_t>(n);
    auto i1 = i0 + 1;
    if (i1 == static_cast<std::int64_t>(n)) i1 = 0;
    const double a = table[i0];
    const double b = table[i1];
    out[i] = a + frac * (b - a);
  }
}

void lerp_clamped(const double* table, std::size_t n, double origin, double inv_dx, const double* x, double* out,
                  std::size_t count) {
  const double last = static_cast<double>(n) - 2.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double u = (x[i] - origin) * inv_dx;
    double fl = std::floor(u);
    fl = fl < 0.0 ? 0.0 : fl;
    fl = fl > last ? last : fl;
    const double frac = u - fl;
    const auto i0 = static_cast<std::int64_t>(fl);
    const double a = table[i0];
    const double b = table[i0 + 1];
    out[i] = a + frac * (b - a);
  }
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  bool nan = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    nan |= std::isnan(d);
    m = d > m ? d : m;
  }
  return nan ? std::nan("") : m;
}

double max_edge_slope(const double* v, std::size_t n, double inv_dx, bool wrap) {
  double m = 0.0;
  bool nan = false;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = std::fabs(v[i + 1] - v[i]);
    nan |= std::isnan(d);
    m = d > m ? d : m;
  }
  if (wrap && n > 1) {
    const double d = std::fabs(v[0] - v[n - 1]);
    nan |= std::isnan(d);
    m = d > m ? d : m;
  }
  return nan ? std::nan("") : m * inv_dx;
}

}  // namespace

double fv_cell(double mm, double m0, double mp, double vm, double v0, double c, double k) {
  const double fl = (vm > 0.0 ? vm : 0.0) * mm + (vm < 0.0 ? vm : 0.0) * m0;
  const double fr = (v0 > 0.0 ? v0 : 0.0) * m0 + (v0 < 0.0 ? v0 : 0.0) * mp;
  return (m0 - c * (fr - fl)) + k * ((mp - m0) - (m0 - mm));
}

namespace {

void fv_step(const double* m, const double* vface, double* out, std::size_t n, double c, double k) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t im = i == 0 ? n - 1 : i - 1;
    const std::size_t ip = i + 1 == n ? 0 : i + 1;
    out[i] = fv_cell(m[im], m[i], m[ip], vface[im], vface[i], c, k);
  }
}

void em_advance(double* x, const double* drift, const double* noise, std::size_t count, double h, double vol,
                double period) {
  if (period > 0.0) {
    const double inv_p = 1.0 / period;
    for (std::size_t i = 0; i < count; ++i) {
      const double y = (x[i] + drift[i] * h) + vol * noise[i];
      x[i] = y - period * std::floor(y * inv_p);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) x[i] = (x[i] + drift[i] * h) + vol * noise[i];
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", lerp_periodic, lerp_clamped, max_abs_diff, max_edge_slope, fv_step,
                                 em_advance};
  return table;
}

}  // namespace charax::simd
