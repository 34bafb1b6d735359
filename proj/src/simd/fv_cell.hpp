#pragma once

namespace charax::simd {

// Reference update of one finite-volume cell; the scalar kernel and the
// AVX2 boundary cells both go through it.
double fv_cell(double mm, double m0, double mp, double vm, double v0, double c, double k);

}  // namespace charax::simd
