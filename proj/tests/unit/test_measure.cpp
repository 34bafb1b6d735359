#include <cmath>
#include <random>

#include "charax/core/errors.hpp"
#include "charax/finite/builtins.hpp"
#include "charax/measure/measure.hpp"
#include "doctest.h"
#include "oracles/oracles.hpp"

using namespace charax;
using namespace charax::measure;

namespace {

const double pi2 = oracle::two_pi;

SpaceGrid grid128() { return SpaceGrid::torus1d(1.0, 128); }

FPDrift const_drift(double c) {
  return [c](double, std::span<const double>, const MeasureState&, std::span<double> o) {
    std::fill(o.begin(), o.end(), c);
  };
}

std::vector<double> as_vec(const MeasureState& m) { return {m.density().begin(), m.density().end()}; }

InitFn cos_init() {
  return [](std::span<const double> x, const MeasureState&, std::span<double> o) {
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = std::cos(pi2 * x[i]);
  };
}

}  // namespace

TEST_CASE("d1 on the circle") {
  const auto g = grid128();
  const auto a = MeasureState::spike(g, 0.0);
  CHECK(d1_distance(a, a) == 0.0);
  CHECK(d1_distance(a, MeasureState::spike(g, 0.25)) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(d1_distance(a, MeasureState::spike(g, 0.75)) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(d1_distance(a, MeasureState::uniform(SpaceGrid::torus1d(1.0, 64))), PreconditionError);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const auto m1 = MeasureState::wrapped_gaussian(g, u(rng), 0.02 + 0.2 * u(rng));
    const auto m2 = MeasureState::mixture(m1, MeasureState::spike(g, u(rng)), u(rng));
    CHECK(d1_distance(m1, m2) == doctest::Approx(oracle::circle_w1(as_vec(m1), as_vec(m2))).epsilon(1e-9));
  }
}

TEST_CASE("d1 is a metric on generated anchors") {
  const auto an = generate_anchors(grid128(), 8);
  for (std::size_t a = 0; a < an.size(); ++a) {
    CHECK(d1_distance(an[a], an[a]) <= 1e-12);
    for (std::size_t b = 0; b < an.size(); ++b) {
      CHECK(d1_distance(an[a], an[b]) == d1_distance(an[b], an[a]));
      if (a != b) CHECK(d1_distance(an[a], an[b]) > 1e-6);
      for (std::size_t c = 0; c < an.size(); ++c) {
        CHECK(d1_distance(an[a], an[c]) <= d1_distance(an[a], an[b]) + d1_distance(an[b], an[c]) + 1e-14);
      }
    }
  }
}

TEST_CASE("Fokker-Planck: uniform stays uniform under constant drift") {
  const auto g = grid128();
  const auto traj = fokker_planck_solve(const_drift(0.7), 0.05, MeasureState::uniform(g), 0.3, 5);
  REQUIRE(traj.size() == 6);
  for (double v : traj.back().density()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Fokker-Planck: spike relaxes toward uniform") {
  const auto g = grid128();
  FPStats st;
  const auto traj = fokker_planck_solve(const_drift(0.0), 0.05, MeasureState::spike(g, 0.3), 0.5, 10, &st);
  const auto uni = MeasureState::uniform(g);
  for (std::size_t j = 1; j < traj.size(); ++j) CHECK(d1_distance(traj[j], uni) < d1_distance(traj[j - 1], uni));
  CHECK(st.max_mass_drift <= 1e-13);
  CHECK(st.min_density >= 0.0);
}

TEST_CASE("Fokker-Planck: heat kernel on the torus") {
  const auto g = grid128();
  const auto m0 = MeasureState::wrapped_gaussian(g, 0.3, 0.05);
  const auto traj = fokker_planck_solve(const_drift(0.0), 0.05, m0, 0.1, 4);
  const auto ref = MeasureState(g, oracle::heat_flow(as_vec(m0), 0.05, 0.1));
  CHECK(d1_distance(traj.back(), ref) <= 1e-3);
}

TEST_CASE("Fokker-Planck: conservation and positivity under rough drift") {
  const auto g = grid128();
  FPDrift rough = [](double s, std::span<const double> x, const MeasureState&, std::span<double> o) {
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = 3.0 * std::sin(pi2 * 3 * x[i] + 10 * s) + (i % 7 == 0 ? 2.0 : -0.5);
  };
  FPStats st;
  const auto traj = fokker_planck_solve(rough, 0.01, MeasureState::spike(g, 0.5), 0.4, 8, &st);
  CHECK(st.max_mass_drift <= 1e-13);
  CHECK(st.min_density >= 0.0);
  CHECK(traj.back().mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Fokker-Planck: NaN drift is a coefficient error") {
  FPDrift bad = [](double, std::span<const double>, const MeasureState&, std::span<double> o) {
    o[3] = std::nan("");
  };
  CHECK_THROWS_AS(fokker_planck_solve(bad, 0.05, MeasureState::uniform(grid128()), 0.1, 2), CoefficientError);
}

TEST_CASE("pushforward examples") {
  const auto g = grid128();
  const auto id = GridFunction::from_field(g, *charax::builtin::linear_field(1, {1.0}));
  const auto m = MeasureState::wrapped_gaussian(g, 0.6, 0.1);
  const auto same = pushforward([](double p) { return p; }, id, m);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(same[i] == doctest::Approx(m[i]).epsilon(1e-12));

  const auto moved = pushforward([](double p) { return p + 0.25; }, id, MeasureState::spike(g, 0.0));
  CHECK(moved[32] == doctest::Approx(128.0).epsilon(1e-9));

  const auto half = pushforward([](double p) { return 0.5 * p; }, id, MeasureState::uniform(g));
  std::vector<double> exact(g.size(), 0.0);
  for (std::size_t i = 0; i < 64; ++i) exact[i] = 2.0;
  CHECK(d1_distance(half, MeasureState(g, exact)) <= 2.0 * g.spacing(0));
  CHECK(half.mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("psi_grad: static data is frozen") {
  const auto g = grid128();
  const auto an = generate_anchors(g, 3);
  const TimeGrid time(0.2, 4);
  GradData d;
  d.W0 = cos_init();
  const PathBatch batch(50, 16, 1, 0.2 / 16, 1);
  const auto W = psi_grad(time, g, d, 0.0, 1e-6, batch, an, PsiOptions{4});
  for (std::size_t k = 0; k < W.n_times(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(W.slice(k, 1)[i] == doctest::Approx(std::cos(pi2 * g.coord(0, static_cast<int>(i)))).epsilon(1e-12));
  }
}

TEST_CASE("psi_grad: heat decay of cos within 3 SE") {
  const auto g = SpaceGrid::torus1d(1.0, 64);
  const auto an = generate_anchors(g, 2);
  const TimeGrid time(0.2, 4);
  GradData d;
  d.W0 = cos_init();
  const double sigma = 0.05;
  const PathBatch batch(4000, 16, 1, 0.2 / 16, 2);
  const auto W = psi_grad(time, g, d, sigma, 0.05, batch, an, PsiOptions{4});
  for (std::size_t k = 1; k < W.n_times(); ++k) {
    const double t = time.node(static_cast<int>(k));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double ex = std::cos(pi2 * g.coord(0, static_cast<int>(i))) * std::exp(-pi2 * pi2 * sigma * t);
      CHECK(std::abs(W.slice(k, 0)[i] - ex) <= 3.0 * W.se_slice(k, 0)[i]);
    }
  }
}

TEST_CASE("psi_grad: source equal to the mean of m") {
  const auto g = grid128();
  const auto an = generate_anchors(g, 4);
  const TimeGrid time(0.3, 3);
  GradData d;
  d.W0 = [](std::span<const double>, const MeasureState&, std::span<double> o) { std::fill(o.begin(), o.end(), 0.0); };
  d.A = [](double, std::span<const double>, const MeasureState& m, std::span<double> o) {
    std::fill(o.begin(), o.end(), m.mean());
  };
  const PathBatch batch(10, 6, 1, 0.05, 3);
  const auto W = psi_grad(time, g, d, 0.0, 1e-9, batch, an, PsiOptions{2});
  for (std::size_t a = 0; a < an.size(); ++a) {
    CHECK(W.slice(3, a)[17] == doctest::Approx(0.3 * an[a].mean()).epsilon(1e-6));
  }
}

TEST_CASE("WField blending picks the exact anchor") {
  const auto g = grid128();
  const auto an = generate_anchors(g, 4);
  WField W(g, TimeGrid(1.0, 1), an);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t k = 0; k < 2; ++k) std::fill(W.slice(k, a).begin(), W.slice(k, a).end(), double(a));
  }
  const double x[] = {0.3};
  double out[1];
  W.eval(0.5, x, an[2], out);
  CHECK(out[0] == 2.0);
  const auto w = W.weights(MeasureState::mixture(an[1], an[2], 0.5));
  CHECK(std::abs(w[0] + w[1] + w[2] + w[3] - 1.0) < 1e-14);
  CHECK(W.lip_x() == 0.0);
  CHECK(W.lip_m() > 0.0);
}

TEST_CASE("MeasureProblem checks derivative callbacks") {
  MeasureProblem p;
  p.anchors = generate_anchors(p.grid, 3);
  measure::builtin::quadratic(p, 0.3);
  measure::builtin::b_momentum(p);
  measure::builtin::u0_sine(p, 0.5);
  CHECK_NOTHROW(p.check());
  p.DpH = [](std::span<const double>, std::span<const double> q, const MeasureState&, std::span<double> o) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = 2.0 * q[i];
  };
  CHECK_THROWS_AS(p.check(), PreconditionError);
  measure::builtin::nonlocal_mean(p);
  CHECK_NOTHROW(p.check());
  p.sigma = 0.0;
  CHECK_THROWS_AS(p.check(), PreconditionError);
}

TEST_CASE("picard_solve_grad: H = 0, B = 0 keeps grad U0") {
  MeasureProblem p;
  p.grid = SpaceGrid::torus1d(1.0, 64);
  p.anchors = generate_anchors(p.grid, 3);
  measure::builtin::zero_hamiltonian(p);
  measure::builtin::b_zero(p);
  measure::builtin::u0_sine(p, 0.5);
  PicardConfig cfg;
  cfg.dt = 0.05;
  cfg.mc_samples = 4000;
  const auto sol = picard_solve_grad(p, 0.1, cfg);
  CHECK(sol.report.converged);
  for (std::size_t i = 0; i < 64; ++i) {
    const double x = p.grid.coord(0, static_cast<int>(i));
    const double ex = 0.5 * std::cos(pi2 * x) * std::exp(-pi2 * pi2 * p.sigma * 0.1);
    CHECK(std::abs(sol.W.slice(2, 1)[i] - ex) <= 3.0 * sol.W.se_slice(2, 1)[i] + 1e-12);
  }
}

TEST_CASE("picard_solve_grad: nonlocal mean drift against direct characteristics") {
  MeasureProblem p;
  p.grid = SpaceGrid::torus1d(1.0, 64);
  p.anchors = {MeasureState::wrapped_gaussian(p.grid, 0.3, 0.05), MeasureState::wrapped_gaussian(p.grid, 0.6, 0.1)};
  measure::builtin::nonlocal_mean(p);
  measure::builtin::b_zero(p);
  measure::builtin::u0_sine(p, 0.5);
  PicardConfig cfg;
  cfg.dt = 0.05;
  cfg.mc_samples = 4000;
  const double T = 0.2;
  const auto sol = picard_solve_grad(p, T, cfg);
  CHECK(sol.report.iters <= 3);
  for (std::size_t a = 0; a < 2; ++a) {
    // m_s is heat flow of the anchor; X drifts at -mean(m_s).
    double D = 0.0;
    const int n = 400;
    for (int j = 0; j < n; ++j) {
      const double s = (j + 0.5) * T / n;
      const auto ms = oracle::heat_flow(as_vec(p.anchors[a]), p.sigma_prime, s);
      double mu = 0.0;
      for (std::size_t i = 0; i < ms.size(); ++i) mu += p.grid.coord(0, static_cast<int>(i)) * ms[i] / 64.0;
      D += mu * T / n;
    }
    for (std::size_t i = 0; i < 64; ++i) {
      const double x = p.grid.coord(0, static_cast<int>(i));
      const double ex = 0.5 * std::cos(pi2 * (x - D)) * std::exp(-pi2 * pi2 * p.sigma * T);
      CHECK(std::abs(sol.W.slice(4, a)[i] - ex) <= 3.0 * sol.W.se_slice(4, a)[i] + 2e-3);
    }
  }
}

TEST_CASE("reconstruct_value: constant U0 and zero H") {
  MeasureProblem p;
  p.grid = SpaceGrid::torus1d(1.0, 32);
  p.anchors = generate_anchors(p.grid, 2);
  measure::builtin::zero_hamiltonian(p);
  measure::builtin::b_zero(p);
  p.U0 = [](std::span<const double>, const MeasureState&, std::span<double> o) { std::fill(o.begin(), o.end(), 1.5); };
  p.gradU0 = [](std::span<const double>, const MeasureState&, std::span<double> o) {
    std::fill(o.begin(), o.end(), 0.0);
  };
  PicardConfig cfg;
  cfg.dt = 0.1;
  cfg.mc_samples = 100;
  const WField W(p.grid, TimeGrid(0.2, 2), p.anchors);
  const auto U = reconstruct_value(W, p, cfg);
  for (double v : U.values()) CHECK(v == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("reconstruct_value: gradient consistency on viscous Burgers") {
  MeasureProblem p;
  p.grid = SpaceGrid::torus1d(1.0, 64);
  p.anchors = generate_anchors(p.grid, 2);
  measure::builtin::quadratic(p);
  measure::builtin::b_momentum(p);
  measure::builtin::u0_sine(p, 0.5);
  PicardConfig cfg;
  cfg.dt = 0.05;
  cfg.mc_samples = 4000;
  const auto sol = picard_solve_grad(p, 0.2, cfg);
  const auto U = reconstruct_value(sol.W, p, cfg);
  const double dx = p.grid.spacing(0);
  double worst = 0.0;
  for (std::size_t k = 0; k < U.n_times(); ++k) {
    const auto u = U.slice(k, 0);
    for (std::size_t i = 0; i < 64; ++i) {
      const double fd = (u[(i + 1) % 64] - u[(i + 63) % 64]) / (2 * dx);
      worst = std::max(worst, std::abs(fd - sol.W.slice(k, 0)[i]));
    }
  }
  CHECK(worst <= 2e-2);
}

TEST_CASE("common noise: constant data stays constant") {
  const auto g = SpaceGrid::torus1d(1.0, 32);
  const auto an = generate_anchors(g, 2);
  const TimeGrid time(0.2, 2);
  GradData d;
  d.W0 = [](std::span<const double>, const MeasureState&, std::span<double> o) { std::fill(o.begin(), o.end(), 0.7); };
  const PathBatch batch(20, 8, 1, 0.025, 1), common(8, 8, 1, 0.025, 2);
  const auto W = psi_grad_common_noise(time, g, d, 0.05, 0.05, 0.1, batch, common, an, PsiOptions{4});
  for (double v : W.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("common noise adds to the volatility of X") {
  const auto g = SpaceGrid::torus1d(1.0, 32);
  const auto an = generate_anchors(g, 1);
  const TimeGrid time(0.2, 2);
  GradData d;
  d.W0 = cos_init();
  const double sigma = 0.05, sigma0 = 0.03;
  const PathBatch batch(200, 8, 1, 0.025, 3), common(200, 8, 1, 0.025, 4);
  const auto W = psi_grad_common_noise(time, g, d, sigma, 0.05, sigma0, batch, common, an, PsiOptions{4});
  for (std::size_t k = 1; k < W.n_times(); ++k) {
    const double t = time.node(static_cast<int>(k));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double ex = std::cos(pi2 * g.coord(0, static_cast<int>(i))) * std::exp(-pi2 * pi2 * (sigma + sigma0) * t);
      CHECK(std::abs(W.slice(k, 0)[i] - ex) <= 3.0 * W.se_slice(k, 0)[i]);
    }
  }
}

TEST_CASE("common noise: sigma_0 -> 0 matches psi_grad") {
  const auto g = SpaceGrid::torus1d(1.0, 32);
  const auto an = generate_anchors(g, 2);
  const TimeGrid time(0.2, 2);
  GradData d;
  d.W0 = [](std::span<const double> x, const MeasureState&, std::span<double> o) {
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = 0.5 * std::cos(pi2 * x[i]);
  };
  d.b = [](double, std::span<const double> x, const MeasureState& m, std::span<double> o) {
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = -0.5 * std::cos(pi2 * x[i]) + m.mean();
  };
  d.F = [](double, std::span<const double> x, const MeasureState&, std::span<double> o) {
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = std::sin(pi2 * x[i]);
  };
  const PathBatch batch(1000, 8, 1, 0.025, 5), common(4, 8, 1, 0.025, 6);
  const auto W0 = psi_grad(time, g, d, 0.05, 0.05, batch, an, PsiOptions{4});
  const auto W1 = psi_grad_common_noise(time, g, d, 0.05, 0.05, 1e-12, batch, common, an, PsiOptions{4});
  for (std::size_t j = 0; j < W0.values().size(); ++j) {
    CHECK(std::abs(W0.values()[j] - W1.values()[j]) <= 3.0 * W0.stderrs()[j] + 1e-12);
  }
}

TEST_CASE("translation trick against direct shifted simulation") {
  const auto g = grid128();
  const auto m0 = MeasureState::wrapped_gaussian(g, 0.4, 0.1);
  FPDrift F = [](double s, std::span<const double> x, const MeasureState& m, std::span<double> o) {
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = 0.5 * std::sin(pi2 * x[i]) + m.mean() - 0.5 + s;
  };
  const int steps = 40;
  const double h = 0.01, c = std::sqrt(2.0 * 0.05), sp = 0.05;
  const PathBatch common(1, steps, 1, h, 9);
  std::vector<double> path(steps + 1, 0.0);
  for (int j = 0; j < steps; ++j) path[j + 1] = path[j] + c * common.increments(j, 0)[0];
  const auto trick = shifted_fp_path(F, sp, m0, h, path);

  MeasureState direct = m0;
  double worst = 0.0;
  for (int j = 0; j < steps; ++j) {
    FPDrift Fj = [&, j](double s, std::span<const double> x, const MeasureState& m, std::span<double> o) {
      F(j * h + s, x, m, o);
    };
    direct = fokker_planck_solve(Fj, sp, direct, h, 1).back();
    auto v = oracle::spectral_shift(as_vec(direct), path[j + 1] - path[j]);
    for (double& z : v) z = std::max(z, 0.0);
    direct = MeasureState(g, v);
    worst = std::max(worst, d1_distance(direct, trick[j + 1]));
  }
  CHECK(worst <= 2.0 * g.spacing(0));
}
