#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "charax/core/grid_function.hpp"
#include "charax/finite/solver.hpp"

namespace charax::verify {

/// sup over time steps and interior nodes of
/// |dV/dt + <F(x,V), grad> V - G(x,V) + lambda (V - DS^T V(S x))|,
/// forward differences in t, central in x. Needs a time grid and at least
/// 3 nodes per axis.
double residual_finite(const GridFunction& V, const finite::FiniteProblem& problem);

struct Certificate {
  double epsilon = 0.0;
  double init_gap = 0.0;
  double sup_gap = 0.0;
  std::vector<double> times, gaps, bounds;  ///< per time node
  double C_used = 0.0;
  bool passed = false;
  /// 2 max(epsilon, init_gap) e^{C t} at t = T.
  double bound() const { return bounds.empty() ? 0.0 : bounds.back(); }
};

/// Data-driven constant Lip_p(G) + lambda (1 + |DS|) + lip_x(U) Lip_p(F),
/// with Lipschitz constants in p sampled over the value range of U and V.
double default_constant(const GridFunction& U, const GridFunction& V, const finite::FiniteProblem& problem,
                        std::uint64_t seed = 3);

/// Checks sup_x |U(t) - V(t)| <= 2 max(epsilon, init_gap) e^{C t} at every
/// time node, epsilon = residual_finite(V). C defaults to default_constant.
Certificate strong_weak_certificate(const GridFunction& U, const GridFunction& V,
                                    const finite::FiniteProblem& problem, std::optional<double> C = std::nullopt);

struct TimeLipschitz {
  double measured = 0.0;
  double bound = 0.0;
  bool passed = false;
};

/// measured = max |U(t+dt) - U(t)| / dt; bound = 1.1 (sup|G(.,U)| +
/// lambda sup|U - DS^T U o S| + sup|F(.,U)| lip_x(U)).
TimeLipschitz time_lipschitz_check(const GridFunction& U, const finite::FiniteProblem& problem);

}  // namespace charax::verify
