#pragma once
// Named coefficient fields used by the CLI and the tests.

#include <memory>
#include <vector>

#include "charax/core/fields.hpp"

namespace charax::builtin {

/// F(x, p) = p (Burgers-type transport by the solution itself).
std::shared_ptr<const StateField> identity_p(int dim);
/// G(x, p) = -rate * p.
std::shared_ptr<const StateField> linear_decay(int dim, double rate = 1.0);
std::shared_ptr<const StateField> zero_state(int dim);
/// Constant value c regardless of (x, p).
std::shared_ptr<const StateField> constant_state(std::vector<double> c);
/// F(x, p) = c * x.
std::shared_ptr<const StateField> scaled_x(int dim, double c);

/// One term coef * prod x_a^x_pow[a] * prod p_a^p_pow[a] added to `component`.
struct Monomial {
  int component = 0;
  double coef = 0.0;
  std::vector<int> x_pow;
  std::vector<int> p_pow;
};
std::shared_ptr<const StateField> polynomial_state(int dim, std::vector<Monomial> terms);

/// U0_i(x) = amplitude * sin(2 pi freq x_i + phase).
std::shared_ptr<const SpatialField> sine(int dim, double amplitude = 1.0, double freq = 1.0, double phase = 0.0);
/// U0_i(x) = amplitude * cos(2 pi freq x_i).
std::shared_ptr<const SpatialField> cosine(int dim, double amplitude = 1.0, double freq = 1.0);
std::shared_ptr<const SpatialField> constant_field(std::vector<double> c);
/// U0(x) = M x with M row-major dim x dim.
std::shared_ptr<const SpatialField> linear_field(int dim, std::vector<double> matrix);
/// U0_i(x) = sum over terms of coef * prod x_a^pow[a] (Monomial.p_pow ignored).
std::shared_ptr<const SpatialField> polynomial_field(int dim, std::vector<Monomial> terms);

}  // namespace charax::builtin
