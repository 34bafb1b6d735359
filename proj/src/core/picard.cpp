#include "charax/core/picard.hpp"

#include <algorithm>
#include <cmath>

namespace charax {

void PicardConfig::validate() const {
  if (!(tol_sup > 0.0)) throw PreconditionError("tol_sup must be positive");
  if (max_iters < 1) throw PreconditionError("max_iters must be positive");
  if (!(lip_cap > 0.0)) throw PreconditionError("lip_cap must be positive");
  if (!(segment_shrink > 0.0 && segment_shrink < 1.0)) throw PreconditionError("segment_shrink must lie in (0, 1)");
  if (mc_samples < 1) throw PreconditionError("mc_samples must be positive");
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  if (n_sub < 1 || em_sub < 1) throw PreconditionError("n_sub and em_sub must be at least 1");
  if (!(segment_scale > 0.0)) throw PreconditionError("segment_scale must be positive");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::horizon_reached: return "horizon_reached";
    case Termination::lip_cap_exceeded: return "lip_cap_exceeded";
    case Termination::segment_underflow: return "segment_underflow";
  }
  return "unknown";
}

namespace {

bool over_cap(const LipEstimate& e, double cap) {
  if (!(e.lip_x <= cap)) return true;
  return e.growth_norm && !(*e.growth_norm <= cap);
}

}  // namespace

ContinuationResult continue_segments(std::shared_ptr<const SpatialField> u0, const SpaceGrid& grid, double t_horizon,
                                     const PicardConfig& cfg, const SegmentSolve& solve,
                                     const SliceEstimate& estimate, OutOfDomain seed_policy) {
  cfg.validate();
  if (!(t_horizon > 0.0)) throw PreconditionError("t_horizon must be positive");

  ContinuationResult res;
  const double dt = cfg.dt;
  const long n_total = std::max(1L, std::lround(t_horizon / dt));

  const GridFunction g0 = GridFunction::from_field(grid, *u0, cfg.interp);
  const LipEstimate e0 = estimate(g0, 0);
  res.lip_history.emplace_back(0.0, e0);
  {
    double min_dx = grid.spacing(0);
    for (int a = 1; a < grid.dim(); ++a) min_dx = std::min(min_dx, grid.spacing(a));
    const double ceiling = 2.0 * e0.sup_norm / min_dx;
    if (e0.sup_norm > 0.0 && cfg.lip_cap > ceiling) {
      res.warnings.push_back("lip_cap " + std::to_string(cfg.lip_cap) +
                             " is above the largest grid slope 2 sup|U0|/dx = " + std::to_string(ceiling) +
                             "; blow-up may only show up as segment underflow");
    }
  }
  if (over_cap(e0, cfg.lip_cap)) {
    res.termination = Termination::lip_cap_exceeded;
    res.t_c_estimate = 0.0;
    res.t_c_upper = 0.0;
    return res;
  }

  long k0 = 0;
  double lip = e0.lip_x;
  std::shared_ptr<const SpatialField> seed = std::move(u0);

  while (k0 < n_total) {
    // length in units of dt; fractional part kept so repeated shrinking is exact
    double len = std::max(1.0, std::floor(cfg.segment_scale / (1.0 + lip) / dt + 1e-9));
    len = std::min(len, static_cast<double>(n_total - k0));
    long n_seg = static_cast<long>(len);

    std::optional<std::pair<GridFunction, PicardReport>> solved;
    while (!solved) {
      try {
        solved.emplace(solve(seed, static_cast<double>(n_seg) * dt));
      } catch (const SegmentTooLong&) {
      } catch (const LipCapExceeded&) {
      }
      if (solved) break;
      ++res.failed_attempts;
      len *= cfg.segment_shrink;
      n_seg = static_cast<long>(std::floor(len + 1e-9));
      if (n_seg < 1) {
        res.termination = Termination::segment_underflow;
        res.t_c_estimate = static_cast<double>(k0) * dt;
        res.t_c_upper = static_cast<double>(k0 + 1) * dt;
        return res;
      }
    }

    GridFunction& u = solved->first;
    res.reports.push_back(std::move(solved->second));
    const long n_steps = static_cast<long>(u.n_times()) - 1;

    for (long k = 1; k <= n_steps; ++k) {
      const LipEstimate e = estimate(u, static_cast<std::size_t>(k));
      if (over_cap(e, cfg.lip_cap)) {
        const long keep = k - 1;
        if (keep >= 1) {
          res.segments.push_back(
              {static_cast<double>(k0) * dt, static_cast<double>(k0 + keep) * dt, u.truncated(static_cast<int>(keep))});
        }
        res.termination = Termination::lip_cap_exceeded;
        res.t_c_estimate = static_cast<double>(k0 + keep) * dt;
        res.t_c_upper = static_cast<double>(k0 + k) * dt;
        return res;
      }
      res.lip_history.emplace_back(static_cast<double>(k0 + k) * dt, e);
      lip = e.lip_x;
    }

    auto last = std::make_shared<const GridFunction>(u.time_slice(static_cast<std::size_t>(n_steps)));
    seed = as_spatial_field(last, seed_policy);
    res.segments.push_back({static_cast<double>(k0) * dt, static_cast<double>(k0 + n_steps) * dt, std::move(u)});
    k0 += n_steps;
  }

  res.termination = Termination::horizon_reached;
  return res;
}

}  // namespace charax
