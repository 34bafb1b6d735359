#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "charax/core/errors.hpp"
#include "charax/core/grid_function.hpp"
#include "charax/core/norms.hpp"

namespace charax {

struct PicardConfig {
  double tol_sup = 1e-8;        ///< stop when ||Phi(U) - U||_inf <= tol_sup
  int max_iters = 60;
  double lip_cap = 1e3;         ///< blow-up threshold on lip_x (and growth_norm)
  double segment_shrink = 0.5;  ///< factor applied to a failed segment length
  int mc_samples = 1000;        ///< Monte Carlo paths
  std::uint64_t seed = 20240611;

  double dt = 1e-3;             ///< time-grid step
  int n_sub = 4;                ///< characteristic substeps per dt
  int em_sub = 4;               ///< Euler-Maruyama substeps per dt
  double segment_scale = 0.5;   ///< first segment length = segment_scale / (1 + lip_x)
  Interp interp = Interp::linear;

  void validate() const;
};

struct PicardReport {
  int iters = 0;
  std::vector<double> residuals;
  double contraction_factor = 0.0;  ///< max ratio of consecutive residuals from the third on
  bool converged = false;
};

enum class Termination { horizon_reached, lip_cap_exceeded, segment_underflow };
std::string to_string(Termination t);

struct Segment {
  double t_start = 0.0;
  double t_end = 0.0;
  GridFunction solution;
};

struct ContinuationResult {
  std::vector<Segment> segments;
  std::vector<std::pair<double, LipEstimate>> lip_history;
  /// Last accepted time, or +infinity when the horizon was reached.
  double t_c_estimate = std::numeric_limits<double>::infinity();
  /// First time known to fail (over the cap or not solvable), +infinity if none.
  double t_c_upper = std::numeric_limits<double>::infinity();
  Termination termination = Termination::horizon_reached;
  std::vector<PicardReport> reports;
  int failed_attempts = 0;
  std::vector<std::string> warnings;

  double t_reached() const { return segments.empty() ? 0.0 : segments.back().t_end; }
};

/// Generic Picard loop: U <- phi(U) until dist(phi(U), U) <= tol_sup.
/// Throws SegmentTooLong on non-convergence (non-finite iterate, three
/// consecutive residual increases, or max_iters) and LipCapExceeded when
/// size(iterate) passes cfg.lip_cap. Returns the last iterate phi(U).
template <class T, class Map, class Dist, class Size, class Finite>
std::pair<T, PicardReport> picard_iterate(T initial, Map&& phi, Dist&& dist, Size&& size, Finite&& finite,
                                          const PicardConfig& cfg) {
  PicardReport rep;
  T u = std::move(initial);
  int increases = 0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    T v = phi(u);
    rep.iters = it;
    if (!finite(v)) {
      throw SegmentTooLong("Picard iterate " + std::to_string(it) + " is not finite",
                           std::numeric_limits<double>::infinity());
    }
    const double r = dist(v, u);
    if (!rep.residuals.empty()) {
      const double prev = rep.residuals.back();
      if (rep.residuals.size() >= 2 && prev > 0.0) rep.contraction_factor = std::max(rep.contraction_factor, r / prev);
      increases = r > prev ? increases + 1 : 0;
    }
    rep.residuals.push_back(r);
    const double s = size(v);
    if (!(s <= cfg.lip_cap)) {
      throw LipCapExceeded("Picard iterate " + std::to_string(it) + " has Lipschitz constant " + std::to_string(s), s);
    }
    u = std::move(v);
    if (r <= cfg.tol_sup) {
      rep.converged = true;
      return {std::move(u), std::move(rep)};
    }
    if (increases >= 3) {
      throw SegmentTooLong("Picard residuals increased three times in a row", std::max(1.0, rep.contraction_factor));
    }
  }
  throw SegmentTooLong("Picard iteration hit max_iters without reaching tol_sup", rep.contraction_factor);
}

/// Solves one segment of length L from initial condition u0 (a spatial field).
using SegmentSolve =
    std::function<std::pair<GridFunction, PicardReport>(std::shared_ptr<const SpatialField> u0, double length)>;
/// Size estimate of time slice k of a solved segment.
using SliceEstimate = std::function<LipEstimate(const GridFunction& u, std::size_t k)>;

/// Continuation to the maximal existence time: restarts Picard on
/// consecutive segments, shrinking failed segments by cfg.segment_shrink and
/// stopping at the horizon, when lip_x (or growth_norm) passes lip_cap, or
/// when a segment would be shorter than cfg.dt.
ContinuationResult continue_segments(std::shared_ptr<const SpatialField> u0, const SpaceGrid& grid, double t_horizon,
                                     const PicardConfig& cfg, const SegmentSolve& solve,
                                     const SliceEstimate& estimate, OutOfDomain seed_policy = OutOfDomain::error);

}  // namespace charax
