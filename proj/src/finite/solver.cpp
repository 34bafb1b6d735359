#include "charax/finite/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "charax/core/errors.hpp"
#include "charax/core/norms.hpp"

namespace charax::finite {

void FiniteProblem::check() const {
  const int d = dim();
  if (!F || !G || !U0) throw PreconditionError("finite problem: F, G and U0 are required");
  if (F->in_dim() != d || F->p_dim() != d || F->out_dim() != d) throw PreconditionError("finite problem: F shape");
  if (G->in_dim() != d || G->p_dim() != d || G->out_dim() != d) throw PreconditionError("finite problem: G shape");
  if (U0->in_dim() != d || U0->out_dim() != d) throw PreconditionError("finite problem: U0 shape");
  if (S && S->dim() != d) throw PreconditionError("finite problem: S shape");
  if (!(lambda >= 0.0)) throw PreconditionError("finite problem: lambda must be nonnegative");
}

DomainReport validate_domain(const FiniteProblem& problem, double p_radius, int n_boundary, int n_p,
                             std::uint64_t seed) {
  problem.check();
  const SpaceGrid& g = problem.domain;
  if (g.is_torus()) throw PreconditionError("validate_domain: box domain required");
  if (!(p_radius > 0.0)) throw PreconditionError("validate_domain: p_radius must be positive");
  const int d = g.dim();
  const auto du = static_cast<std::size_t>(d);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // momenta: 0, +-p_radius e_a, random points of the ball
  std::vector<double> ps(du, 0.0);
  for (int a = 0; a < d; ++a)
    for (double sgn : {1.0, -1.0}) {
      std::vector<double> p(du, 0.0);
      p[a] = sgn * p_radius;
      ps.insert(ps.end(), p.begin(), p.end());
    }
  for (int j = 0; j < n_p; ++j) {
    std::vector<double> p(du);
    double r2 = 0.0;
    for (auto& v : p) {
      v = gauss(rng);
      r2 += v * v;
    }
    const double r = p_radius * std::pow(unit(rng), 1.0 / d) / std::sqrt(std::max(r2, 1e-300));
    for (auto& v : p) v *= r;
    ps.insert(ps.end(), p.begin(), p.end());
  }
  const std::size_t np = ps.size() / du;

  DomainReport rep;
  auto note = [&](const std::string& s) {
    rep.ok = false;
    ++rep.n_violations;
    if (rep.violations.size() < 20) rep.violations.push_back(s);
  };

  std::vector<double> xs(np * du), fo(np * du);
  for (int b = 0; b < n_boundary; ++b) {
    const int face = b % (2 * d);
    const int axis = face / 2;
    const bool upper = face % 2 == 1;
    std::vector<double> x(du);
    for (int a = 0; a < d; ++a) x[a] = g.lo(a) + (0.02 + 0.96 * unit(rng)) * (g.hi(a) - g.lo(a));
    x[axis] = upper ? g.hi(axis) : g.lo(axis);
    for (std::size_t j = 0; j < np; ++j) std::copy(x.begin(), x.end(), xs.begin() + j * du);
    problem.F->eval(xs, ps, fo);
    const double eta = upper ? 1.0 : -1.0;
    for (std::size_t j = 0; j < np; ++j) {
      ++rep.n_checked;
      const double dot = eta * fo[j * du + axis];
      if (!(dot >= -1e-10)) {
        std::ostringstream os;
        os << "<eta, F> = " << dot << " on face " << (upper ? "+" : "-") << axis << " at x=(";
        for (int a = 0; a < d; ++a) os << (a ? "," : "") << x[a];
        os << ")";
        note(os.str());
      }
    }
  }

  if (problem.S) {
    std::vector<double> x(du), sx(du);
    for (int j = 0; j < n_boundary; ++j) {
      for (int a = 0; a < d; ++a) x[a] = g.lo(a) + unit(rng) * (g.hi(a) - g.lo(a));
      problem.S->apply(x, sx);
      ++rep.n_checked;
      if (!g.contains(sx)) note("S maps a sampled point outside the domain");
    }
  }
  return rep;
}

CharacteristicFields::CharacteristicFields(const GridFunction& u, std::shared_ptr<const StateField> F,
                                           std::shared_ptr<const StateField> G, double lambda,
                                           std::shared_ptr<const PointMap> S, OutOfDomain policy)
    : u_(u), F_(std::move(F)), G_(std::move(G)), lambda_(lambda), S_(std::move(S)), policy_(policy) {
  has_source_ = (G_ && !G_->is_zero()) || lambda_ != 0.0;
}

void CharacteristicFields::drift(double t, std::span<const double> x, std::span<double> b) const {
  thread_local std::vector<double> u;
  u.resize(x.size() / dim() * out_dim());
  u_.eval(t, x, u, policy_);
  F_->eval(x, u, b);
  for (auto& v : b) v = -v;
}

void CharacteristicFields::drift_and_source(double t, std::span<const double> x, std::span<double> b,
                                            std::span<double> a) const {
  thread_local std::vector<double> u, us, sx, jac;
  const auto d = static_cast<std::size_t>(dim());
  const std::size_t n = x.size() / d;
  u.resize(n * d);
  u_.eval(t, x, u, policy_);
  F_->eval(x, u, b);
  for (auto& v : b) v = -v;
  if (G_ && !G_->is_zero()) {
    G_->eval(x, u, a);
  } else {
    std::fill(a.begin(), a.end(), 0.0);
  }
  if (lambda_ == 0.0) return;

  // jump term -lambda (U(y) - DS(y)^T U(S y))
  us.resize(n * d);
  if (S_) {
    sx.resize(n * d);
    jac.resize(n * d * d);
    S_->apply(x, sx);
    S_->jacobian(x, jac);
    u_.eval(t, sx, us, policy_);
  } else {
    u_.eval(t, x, us, policy_);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d; ++r) {
      double st = us[i * d + r];
      if (S_) {
        st = 0.0;
        for (std::size_t c = 0; c < d; ++c) st += jac[i * d * d + c * d + r] * us[i * d + c];
      }
      a[i * d + r] -= lambda_ * (u[i * d + r] - st);
    }
}

GridFunction phi_map(const GridFunction& U, const FiniteProblem& problem, int n_sub) {
  problem.check();
  if (!U.time()) throw PreconditionError("phi_map: U needs a time axis");
  if (!U.grid().same_as(problem.domain)) throw PreconditionError("phi_map: U is not on the problem grid");
  CharacteristicFields f(U, problem.F, problem.G, problem.lambda, problem.S, OutOfDomain::error);
  TransportOptions opt;
  opt.n_sub = n_sub;
  GridFunction out = psi_transport(*U.time(), U.grid(), f, *problem.U0, opt);
  out.set_interp(U.interp());
  return out;
}

namespace {

double max_lip(const GridFunction& u) {
  double l = 0.0;
  for (std::size_t k = 0; k < u.n_times(); ++k) l = std::max(l, lipschitz_x_slice(u, k));
  return l;
}

}  // namespace

std::pair<GridFunction, PicardReport> picard_solve(const FiniteProblem& problem, double T, const PicardConfig& cfg) {
  cfg.validate();
  problem.check();
  if (!(T > 0.0)) throw PreconditionError("picard_solve: T must be positive");
  const TimeGrid tg = TimeGrid::with_step(T, cfg.dt);
  const GridFunction g0 = GridFunction::from_field(problem.domain, *problem.U0, cfg.interp);
  if (!std::isfinite(lipschitz_x_slice(g0, 0))) throw PreconditionError("picard_solve: U0 is not Lipschitz");

  return picard_iterate(
      GridFunction::constant_extension(g0, tg),
      [&](const GridFunction& u) { return phi_map(u, problem, cfg.n_sub); },
      [](const GridFunction& a, const GridFunction& b) { return sup_diff(a, b); }, max_lip,
      [](const GridFunction& u) { return u.all_finite(); }, cfg);
}

LipEstimate estimate_slice(const GridFunction& u, std::size_t k) {
  LipEstimate e;
  e.lip_x = lipschitz_x_slice(u, k);
  e.sup_norm = sup_norm_slice(u, k);
  return e;
}

ContinuationResult continue_to_blowup(const FiniteProblem& problem, double t_horizon, const PicardConfig& cfg) {
  problem.check();
  SegmentSolve solve = [&](std::shared_ptr<const SpatialField> u0, double len) {
    FiniteProblem p = problem;
    p.U0 = std::move(u0);
    return picard_solve(p, len, cfg);
  };
  return continue_segments(problem.U0, problem.domain, t_horizon, cfg, solve, estimate_slice);
}

}  // namespace charax::finite
