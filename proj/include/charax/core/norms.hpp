#pragma once

#include <optional>

#include "charax/core/grid_function.hpp"

namespace charax {

/// Snapshot of the size of an iterate at one time.
struct LipEstimate {
  double lip_x = 0.0;
  std::optional<double> lip_m;        ///< measure problems only
  double sup_norm = 0.0;
  std::optional<double> growth_norm;  ///< Hilbert problems only
};

/// Discrete spatial Lipschitz constant of f(t, .): max over grid edges of
/// |f(node') - f(node)| / spacing (Euclidean norm on the value vector;
/// torus grids include the wrap edge). Time between nodes is interpolated.
double lipschitz_x(const GridFunction& f, double t = 0.0);
double lipschitz_x_slice(const GridFunction& f, std::size_t k);

/// sup over node radii R > 0 of R^{-1} max_{|x| <= R} |f(x)|, maximized
/// over time slices. Requires a box grid containing the origin.
double growth_norm(const GridFunction& f);
double growth_norm_slice(const GridFunction& f, std::size_t k);

/// max over nodes and components of |f|.
double sup_norm(const GridFunction& f);
double sup_norm_slice(const GridFunction& f, std::size_t k);

/// max over nodes and components of |f - g|; grids must match.
double sup_diff(const GridFunction& f, const GridFunction& g);

}  // namespace charax
