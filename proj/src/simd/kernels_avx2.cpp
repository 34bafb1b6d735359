// AVX2 variants of the kernels in kernels_scalar.cpp. Compiled with -mavx2
// (and without -mfma); each lane performs exactly the scalar operation
// sequence so results are bit-identical.

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "charax/simd/kernels.hpp"
#include "fv_cell.hpp"

namespace charax::simd {
namespace {

inline __m256d vabs(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

inline __m256d vfloor(__m256d v) { return _mm256_round_pd(v, _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC); }

void lerp_periodic(const double* table, std::size_t n, double origin, double inv_dx, const double* x, double* out,
                   std::size_t count) {
  const double nd = static_cast<double>(n);
  const double inv_n = 1.0 / nd;
  const __m256d vorg = _mm256_set1_pd(origin);
  const __m256d vinv = _mm256_set1_pd(inv_dx);
  const __m256d vn = _mm256_set1_pd(nd);
  const __m256d vinv_n = _mm256_set1_pd(inv_n);
  const __m128i in = _mm_set1_epi32(static_cast<int>(n));
  const __m128i zero = _mm_setzero_si128();
  const __m128i one = _mm_set1_epi32(1);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d u = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vorg), vinv);
    const __m256d w = _mm256_sub_pd(u, _mm256_mul_pd(vn, vfloor(_mm256_mul_pd(u, vinv_n))));
    const __m256d fl = vfloor(w);
    const __m256d frac = _mm256_sub_pd(w, fl);
    __m128i i0 = _mm256_cvttpd_epi32(fl);
    // i0 >= n -> i0 - n ; i0 < 0 -> i0 + n
    const __m128i ge = _mm_cmpgt_epi32(i0, _mm_sub_epi32(in, one));
    i0 = _mm_sub_epi32(i0, _mm_and_si128(ge, in));
    const __m128i lt = _mm_cmplt_epi32(i0, zero);
    i0 = _mm_add_epi32(i0, _mm_and_si128(lt, in));
    __m128i i1 = _mm_add_epi32(i0, one);
    const __m128i eq = _mm_cmpeq_epi32(i1, in);
    i1 = _mm_andnot_si128(eq, i1);
    const __m256d a = _mm256_i32gather_pd(table, i0, 8);
    const __m256d b = _mm256_i32gather_pd(table, i1, 8);
    _mm256_storeu_pd(out + i, _mm256_add_pd(a, _mm256_mul_pd(frac, _mm256_sub_pd(b, a))));
  }
  if (i < count) scalar_kernels().lerp_periodic(table, n, origin, inv_dx, x + i, out + i, count - i);
}

void lerp_clamped(const double* table, std::size_t n, double origin, double inv_dx, const double* x, double* out,
                  std::size_t count) {
  const __m256d vorg = _mm256_set1_pd(origin);
  const __m256d vinv = _mm256_set1_pd(inv_dx);
  const __m256d vzero = _mm256_setzero_pd();
  const __m256d vlast = _mm256_set1_pd(static_cast<double>(n) - 2.0);
  const __m128i one = _mm_set1_epi32(1);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d u = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vorg), vinv);
    __m256d fl = vfloor(u);
    // Matches the scalar `fl < 0 ? 0 : fl` / `fl > last ? last : fl` (NaN passes through).
    fl = _mm256_blendv_pd(fl, vzero, _mm256_cmp_pd(fl, vzero, _CMP_LT_OQ));
    fl = _mm256_blendv_pd(fl, vlast, _mm256_cmp_pd(fl, vlast, _CMP_GT_OQ));
    const __m256d frac = _mm256_sub_pd(u, fl);
    const __m128i i0 = _mm256_cvttpd_epi32(fl);
    const __m256d a = _mm256_i32gather_pd(table, i0, 8);
    const __m256d b = _mm256_i32gather_pd(table, _mm_add_epi32(i0, one), 8);
    _mm256_storeu_pd(out + i, _mm256_add_pd(a, _mm256_mul_pd(frac, _mm256_sub_pd(b, a))));
  }
  if (i < count) scalar_kernels().lerp_clamped(table, n, origin, inv_dx, x + i, out + i, count - i);
}

inline double hmax(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  double m = lanes[0];
  for (int j = 1; j < 4; ++j) m = lanes[j] > m ? lanes[j] : m;
  return m;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  __m256d vm = _mm256_setzero_pd();
  __m256d vnan = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = vabs(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    vnan = _mm256_or_pd(vnan, _mm256_cmp_pd(d, d, _CMP_UNORD_Q));
    vm = _mm256_max_pd(d, vm);
  }
  double m = hmax(vm);
  bool nan = _mm256_movemask_pd(vnan) != 0;
  if (i < n) {
    const double tail = scalar_kernels().max_abs_diff(a + i, b + i, n - i);
    nan |= std::isnan(tail);
    m = tail > m ? tail : m;
  }
  return nan ? std::nan("") : m;
}

double max_edge_slope(const double* v, std::size_t n, double inv_dx, bool wrap) {
  if (n < 2) return 0.0;
  __m256d vm = _mm256_setzero_pd();
  __m256d vnan = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 5 <= n; i += 4) {
    const __m256d d = vabs(_mm256_sub_pd(_mm256_loadu_pd(v + i + 1), _mm256_loadu_pd(v + i)));
    vnan = _mm256_or_pd(vnan, _mm256_cmp_pd(d, d, _CMP_UNORD_Q));
    vm = _mm256_max_pd(d, vm);
  }
  double m = hmax(vm);
  bool nan = _mm256_movemask_pd(vnan) != 0;
  for (; i + 1 < n; ++i) {
    const double d = std::fabs(v[i + 1] - v[i]);
    nan |= std::isnan(d);
    m = d > m ? d : m;
  }
  if (wrap) {
    const double d = std::fabs(v[0] - v[n - 1]);
    nan |= std::isnan(d);
    m = d > m ? d : m;
  }
  return nan ? std::nan("") : m * inv_dx;
}

inline __m256d vpos(__m256d v) {
  const __m256d z = _mm256_setzero_pd();
  return _mm256_blendv_pd(z, v, _mm256_cmp_pd(v, z, _CMP_GT_OQ));
}
inline __m256d vneg(__m256d v) {
  const __m256d z = _mm256_setzero_pd();
  return _mm256_blendv_pd(z, v, _mm256_cmp_pd(v, z, _CMP_LT_OQ));
}

void fv_step(const double* m, const double* vface, double* out, std::size_t n, double c, double k) {
  if (n < 6) {
    scalar_kernels().fv_step(m, vface, out, n, c, k);
    return;
  }
  out[0] = fv_cell(m[n - 1], m[0], m[1], vface[n - 1], vface[0], c, k);
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vk = _mm256_set1_pd(k);
  std::size_t i = 1;
  for (; i + 4 <= n - 1; i += 4) {
    const __m256d mm = _mm256_loadu_pd(m + i - 1);
    const __m256d m0 = _mm256_loadu_pd(m + i);
    const __m256d mp = _mm256_loadu_pd(m + i + 1);
    const __m256d vm = _mm256_loadu_pd(vface + i - 1);
    const __m256d v0 = _mm256_loadu_pd(vface + i);
    const __m256d fl = _mm256_add_pd(_mm256_mul_pd(vpos(vm), mm), _mm256_mul_pd(vneg(vm), m0));
    const __m256d fr = _mm256_add_pd(_mm256_mul_pd(vpos(v0), m0), _mm256_mul_pd(vneg(v0), mp));
    const __m256d adv = _mm256_sub_pd(m0, _mm256_mul_pd(vc, _mm256_sub_pd(fr, fl)));
    const __m256d lap = _mm256_sub_pd(_mm256_sub_pd(mp, m0), _mm256_sub_pd(m0, mm));
    _mm256_storeu_pd(out + i, _mm256_add_pd(adv, _mm256_mul_pd(vk, lap)));
  }
  for (; i < n - 1; ++i) out[i] = fv_cell(m[i - 1], m[i], m[i + 1], vface[i - 1], vface[i], c, k);
  out[n - 1] = fv_cell(m[n - 2], m[n - 1], m[0], vface[n - 2], vface[n - 1], c, k);
}

void em_advance(double* x, const double* drift, const double* noise, std::size_t count, double h, double vol,
                double period) {
  const __m256d vh = _mm256_set1_pd(h);
  const __m256d vv = _mm256_set1_pd(vol);
  std::size_t i = 0;
  if (period > 0.0) {
    const __m256d vp = _mm256_set1_pd(period);
    const __m256d vip = _mm256_set1_pd(1.0 / period);
    for (; i + 4 <= count; i += 4) {
      const __m256d y = _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(_mm256_loadu_pd(drift + i), vh)),
                                      _mm256_mul_pd(vv, _mm256_loadu_pd(noise + i)));
      _mm256_storeu_pd(x + i, _mm256_sub_pd(y, _mm256_mul_pd(vp, vfloor(_mm256_mul_pd(y, vip)))));
    }
  } else {
    for (; i + 4 <= count; i += 4) {
      const __m256d y = _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(_mm256_loadu_pd(drift + i), vh)),
                                      _mm256_mul_pd(vv, _mm256_loadu_pd(noise + i)));
      _mm256_storeu_pd(x + i, y);
    }
  }
  if (i < count) scalar_kernels().em_advance(x + i, drift + i, noise + i, count - i, h, vol, period);
}

}  // namespace

const KernelTable* avx2_kernels_impl() {
  static const KernelTable table{"avx2", lerp_periodic, lerp_clamped, max_abs_diff, max_edge_slope, fv_step,
                                 em_advance};
  return &table;
}

}  // namespace charax::simd
