#pragma once
// Data-parallel inner loops shared by the solvers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2 variant selected at runtime. Variants are required to agree bit for
// bit: the AVX2 code performs the same IEEE operations in the same order
// (no FMA contraction), so switching the active table never changes
// solver output. tests/unit/test_kernels.cpp enforces this.

#include <cstddef>
#include <string_view>

namespace charax::simd {

struct KernelTable {
  const char* name;

  /// out[i] = piecewise-linear interpolant of a periodic table (n samples,
  /// first sample at `origin`, spacing 1/inv_dx) evaluated at x[i].
  void (*lerp_periodic)(const double* table, std::size_t n, double origin, double inv_dx, const double* x,
                        double* out, std::size_t count);

  /// Same on a non-periodic table; queries beyond the ends extrapolate
  /// linearly from the boundary cell.
  void (*lerp_clamped)(const double* table, std::size_t n, double origin, double inv_dx, const double* x,
                       double* out, std::size_t count);

  /// max_i |a[i] - b[i]|; NaN if any difference is NaN. 0 for n == 0.
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);

  /// max_i |v[i+1] - v[i]| * inv_dx, including |v[0] - v[n-1]| when wrap.
  double (*max_edge_slope)(const double* v, std::size_t n, double inv_dx, bool wrap);

  /// One explicit conservative finite-volume step on a periodic 1-d grid:
  /// upwind advective flux with face velocity vface[i] (face between cell i
  /// and i+1), centered diffusion with number k = sigma*dt/dx^2, c = dt/dx.
  void (*fv_step)(const double* m, const double* vface, double* out, std::size_t n, double c, double k);

  /// x[i] = (x[i] + drift[i]*h) + vol*noise[i], wrapped into [0, period)
  /// when period > 0.
  void (*em_advance)(double* x, const double* drift, const double* noise, std::size_t count, double h, double vol,
                     double period);
};

/// The scalar reference table.
const KernelTable& scalar_kernels();

/// The AVX2 table, or nullptr when not compiled in or unsupported by the CPU.
const KernelTable* avx2_kernels();

/// Table used by the solvers. Chosen once: AVX2 when available unless the
/// environment variable CHARAX_KERNELS=scalar is set.
const KernelTable& kernels();

/// Overrides the active table ("scalar" or "avx2"); returns false if the
/// requested variant is unavailable.
bool select_kernels(std::string_view name);

}  // namespace charax::simd
