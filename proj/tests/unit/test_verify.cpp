#include <cmath>

#include "charax/core/errors.hpp"
#include "charax/core/norms.hpp"
#include "charax/finite/builtins.hpp"
#include "charax/finite/solver.hpp"
#include "charax/verify/verify.hpp"
#include "doctest.h"

using namespace charax;

namespace {

finite::FiniteProblem linear_decay(int n = 64) {
  finite::FiniteProblem p;
  p.domain = SpaceGrid::torus1d(1.0, n);
  p.F = builtin::zero_state(1);
  p.G = builtin::linear_decay(1, 1.0);
  p.U0 = builtin::sine(1);
  return p;
}

finite::FiniteProblem burgers(int n) {
  finite::FiniteProblem p;
  p.domain = SpaceGrid::torus1d(1.0, n);
  p.F = builtin::identity_p(1);
  p.G = builtin::zero_state(1);
  p.U0 = builtin::sine(1);
  return p;
}

GridFunction solve(const finite::FiniteProblem& p, double T, double dt) {
  PicardConfig cfg;
  cfg.dt = dt;
  cfg.n_sub = 2;
  cfg.tol_sup = 1e-11;
  return finite::picard_solve(p, T, cfg).first;
}

GridFunction shifted(const GridFunction& U, double c, double slope = 0.0) {
  GridFunction V = U;
  for (std::size_t k = 0; k < V.n_times(); ++k) {
    for (std::size_t i = 0; i < V.n_space(); ++i) V.values()[k * V.n_space() + i] += c + slope * V.time_of(k);
  }
  return V;
}

}  // namespace

TEST_CASE("residual of a constant solution") {
  auto p = burgers(16);
  p.U0 = builtin::constant_field({0.3});
  GridFunction V(p.domain, TimeGrid(1.0, 10), 1);
  std::fill(V.values().begin(), V.values().end(), 0.3);
  CHECK(verify::residual_finite(V, p) <= 1e-10);
}

TEST_CASE("residual needs three nodes per axis") {
  const auto p = burgers(16);
  GridFunction V(SpaceGrid::box1d(0.0, 1.0, 2), TimeGrid(1.0, 2), 1);
  CHECK_THROWS_AS(verify::residual_finite(V, p), PreconditionError);
}

TEST_CASE("residual of the Burgers solve decreases under refinement") {
  const double r1 = verify::residual_finite(solve(burgers(64), 0.1, 4e-3), burgers(64));
  const double r2 = verify::residual_finite(solve(burgers(128), 0.1, 2e-3), burgers(128));
  const double r3 = verify::residual_finite(solve(burgers(256), 0.1, 1e-3), burgers(256));
  MESSAGE("residuals " << r1 << " " << r2 << " " << r3);
  CHECK(r2 < r1);
  CHECK(r3 < r2);
  CHECK(std::log2(r1 / r3) / 2.0 >= 0.9);
}

TEST_CASE("residual of U + 0.01 t") {
  const auto p = burgers(128);
  const auto U = solve(p, 0.1, 2e-3);
  const double base = verify::residual_finite(U, p);
  const double lip = lipschitz_x(U, 0.1);
  const double r = verify::residual_finite(shifted(U, 0.0, 0.01), p);
  CHECK(std::abs(r - 0.01) <= base + 0.01 * 0.1 * lip + 1e-12);
}

TEST_CASE("strong-weak certificate on the linear-decay problem") {
  const auto p = linear_decay();
  const auto U = solve(p, 1.0, 1e-2);
  const auto same = verify::strong_weak_certificate(U, U, p);
  CHECK(same.passed);
  CHECK(same.sup_gap == 0.0);

  const double e0 = 1e-2;
  const auto V = shifted(U, e0);
  const auto cert = verify::strong_weak_certificate(U, V, p);
  CHECK(cert.passed);
  CHECK(cert.sup_gap == doctest::Approx(e0).epsilon(1e-9));
  CHECK(cert.init_gap == doctest::Approx(e0).epsilon(1e-9));
  CHECK(cert.epsilon >= e0 * 0.99);
  CHECK(cert.epsilon <= e0 + 1e-2);

  const auto rev = verify::strong_weak_certificate(V, U, p);
  for (std::size_t k = 0; k < cert.gaps.size(); ++k) CHECK(rev.gaps[k] == cert.gaps[k]);
}

TEST_CASE("certificate is monotone in C") {
  const auto p = burgers(64);
  const auto U = solve(p, 0.1, 4e-3);
  auto q = p;
  q.U0 = builtin::sine(1, 1.05);
  const auto V = solve(q, 0.1, 4e-3);
  bool seen_pass = false;
  for (double C : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
    const auto c = verify::strong_weak_certificate(U, V, p, C);
    if (seen_pass) CHECK(c.passed);
    seen_pass = seen_pass || c.passed;
  }
  CHECK(seen_pass);
}

TEST_CASE("time-Lipschitz check") {
  auto p = burgers(16);
  p.U0 = builtin::constant_field({0.4});
  GridFunction C(p.domain, TimeGrid(1.0, 4), 1);
  std::fill(C.values().begin(), C.values().end(), 0.4);
  const auto c = verify::time_lipschitz_check(C, p);
  CHECK(c.measured == 0.0);
  CHECK(c.passed);

  const auto pb = burgers(128);
  const auto U = solve(pb, 0.1, 2e-3);
  const auto b = verify::time_lipschitz_check(U, pb);
  CHECK(b.passed);
  CHECK(b.measured <= sup_norm(U) * lipschitz_x(U, 0.1) * 1.1 + 1e-12);

  const auto pd = linear_decay();
  const auto D = solve(pd, 1.0, 1e-2);
  const auto d = verify::time_lipschitz_check(D, pd);
  CHECK(d.passed);
  CHECK(d.measured == doctest::Approx(sup_norm(D)).epsilon(1e-2));
  CHECK(d.bound == doctest::Approx(1.1 * sup_norm(D)).epsilon(1e-9));
}
