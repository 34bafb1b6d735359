#include "charax/hilbert/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "charax/core/errors.hpp"
#include "charax/core/norms.hpp"
#include "charax/core/parallel.hpp"
#include "charax/finite/solver.hpp"
#include "charax/simd/kernels.hpp"

namespace charax::hilbert {

void HilbertProblem::check() const {
  if (n < 1) throw PreconditionError("hilbert problem: n must be positive");
  if (solve_box.is_torus()) throw PreconditionError("hilbert problem: solve_box must be a box");
  if (solve_box.dim() != n) throw PreconditionError("hilbert problem: solve_box dimension must equal n");
  if (!F || !G || !U0) throw PreconditionError("hilbert problem: F, G and U0 are required");
  if (F->in_dim() != n || F->p_dim() != n || F->out_dim() != n) throw PreconditionError("hilbert problem: F shape");
  if (G->in_dim() != n || G->p_dim() != n || G->out_dim() != n) throw PreconditionError("hilbert problem: G shape");
  if (U0->in_dim() != n || U0->out_dim() != n) throw PreconditionError("hilbert problem: U0 shape");
  if (static_cast<int>(lambdas.size()) != n) throw PreconditionError("hilbert problem: need one lambda per coordinate");
  for (double l : lambdas)
    if (!(l >= 0.0) || !std::isfinite(l)) throw PreconditionError("hilbert problem: lambdas must be finite and >= 0");
}

double HilbertProblem::lambda_sum() const {
  double s = 0.0;
  for (double l : lambdas) s += l;
  return s;
}

GridFunction psi_deterministic(const TimeGrid& time, const SpaceGrid& grid, const finite::TransportFields& fields,
                               const SpatialField& u0, int n_sub, std::atomic<long>* exits) {
  finite::TransportOptions opt;
  opt.n_sub = n_sub;
  opt.exit_policy = OutOfDomain::extrapolate;
  opt.exits = exits;
  return finite::psi_transport(time, grid, fields, u0, opt);
}

namespace {

// x <- (x + b h) + vol dW for every path and coordinate. One coordinate is
// handed to the kernel directly when the batch is 1-d.
void em_step(std::vector<double>& x, const std::vector<double>& b, const PathBatch& batch, int step,
             const std::vector<double>& vol, double h, double period) {
  const int d = batch.dim();
  const auto P = static_cast<std::size_t>(batch.n_paths());
  if (d == 1) {
    simd::kernels().em_advance(x.data(), b.data(), batch.increments(step, 0), P, h, vol[0], period);
    return;
  }
  for (int c = 0; c < d; ++c) {
    const double* dw = batch.increments(step, c);
    for (std::size_t p = 0; p < P; ++p) {
      double& v = x[p * d + c];
      v = (v + b[p * d + c] * h) + vol[static_cast<std::size_t>(c)] * dw[p];
    }
  }
}

}  // namespace

FKResult psi_feynman_kac(const TimeGrid& time, const SpaceGrid& grid, const finite::TransportFields& fields,
                         const SpatialField& u0, const std::vector<double>& lambdas, const PathBatch& batch,
                         const FKOptions& opt) {
  const int d = grid.dim();
  const auto du = static_cast<std::size_t>(d);
  if (fields.dim() != d || u0.in_dim() != d || batch.dim() != d || static_cast<int>(lambdas.size()) != d) {
    throw PreconditionError("psi_feynman_kac: dimension mismatch");
  }
  if (opt.em_sub < 1) throw PreconditionError("psi_feynman_kac: em_sub must be at least 1");
  const double h = time.dt() / opt.em_sub;
  if (std::fabs(batch.h() - h) > 1e-12 * h || batch.n_steps() < time.n_steps() * opt.em_sub) {
    throw PreconditionError("psi_feynman_kac: path batch does not match the time grid");
  }
  const int od = u0.out_dim();
  const auto odu = static_cast<std::size_t>(od);
  if (fields.has_source() && fields.out_dim() != od) throw PreconditionError("psi_feynman_kac: source dimension");
  if (grid.is_torus() && d > 1) throw PreconditionError("psi_feynman_kac: torus grids must be 1-d");

  std::vector<double> vol(du);
  for (std::size_t c = 0; c < du; ++c) vol[c] = std::sqrt(2.0 * lambdas[c]);
  const double period = grid.is_torus() ? grid.period(0) : 0.0;

  FKResult res{GridFunction(grid, time, od), GridFunction(grid, time, od), 0};
  const std::size_t N = grid.size();
  const auto P = static_cast<std::size_t>(batch.n_paths());
  const std::vector<double> nodes = grid.nodes();
  const bool source = fields.has_source();
  std::atomic<long> exits{0};

  parallel_for(time.n_nodes() * N, [&](std::size_t item) {
    const std::size_t k = item / N;
    const std::size_t i = item % N;
    thread_local std::vector<double> x, b, a0, a1, acc, val;
    x.resize(P * du);
    b.resize(P * du);
    acc.assign(P * odu, 0.0);
    val.resize(P * odu);
    for (std::size_t p = 0; p < P; ++p) std::copy_n(nodes.begin() + i * du, du, x.begin() + p * du);

    const long steps = static_cast<long>(k) * opt.em_sub;
    long local_exits = 0;
    if (steps > 0) {
      if (source) {
        a0.resize(P * odu);
        a1.resize(P * odu);
        fields.drift_and_source(static_cast<double>(steps) * h, x, b, a0);
      } else {
        fields.drift(static_cast<double>(steps) * h, x, b);
      }
      for (long j = 0; j < steps; ++j) {
        em_step(x, b, batch, static_cast<int>(j), vol, h, period);
        if (d > 1 && grid.is_torus()) grid.wrap_all(x);
        if (!grid.is_torus()) {
          for (std::size_t p = 0; p < P; ++p)
            if (!grid.contains(std::span<const double>(x).subspan(p * du, du), 1e-8)) ++local_exits;
        }
        const double tau = static_cast<double>(steps - j - 1) * h;
        if (source) {
          fields.drift_and_source(tau, x, b, a1);
          for (std::size_t q = 0; q < P * odu; ++q) acc[q] += 0.5 * h * (a0[q] + a1[q]);
          std::swap(a0, a1);
        } else if (j + 1 < steps) {
          fields.drift(tau, x, b);
        }
      }
    }
    u0.eval(x, val);
    for (std::size_t c = 0; c < odu; ++c) {
      double s = 0.0;
      for (std::size_t p = 0; p < P; ++p) {
        val[p * odu + c] += acc[p * odu + c];
        s += val[p * odu + c];
      }
      const double mean = s / static_cast<double>(P);
      double ss = 0.0;
      for (std::size_t p = 0; p < P; ++p) {
        const double e = val[p * odu + c] - mean;
        ss += e * e;
      }
      const double var = P > 1 ? ss / static_cast<double>(P - 1) : 0.0;
      res.mean.at(k, i, static_cast<int>(c)) = mean;
      res.stderr_.at(k, i, static_cast<int>(c)) = std::sqrt(var / static_cast<double>(P));
    }
    if (local_exits) exits.fetch_add(local_exits, std::memory_order_relaxed);
  });
  res.exits = exits.load();
  return res;
}

std::vector<double> simulate_paths(const finite::TransportFields& fields, double t, std::span<const double> x0,
                                   const std::vector<double>& lambdas, const PathBatch& batch, int n_steps) {
  const int d = batch.dim();
  const auto du = static_cast<std::size_t>(d);
  if (static_cast<int>(x0.size()) != d || fields.dim() != d || static_cast<int>(lambdas.size()) != d) {
    throw PreconditionError("simulate_paths: dimension mismatch");
  }
  if (n_steps < 1 || n_steps > batch.n_steps()) throw PreconditionError("simulate_paths: bad step count");
  const double h = t / n_steps;
  const auto P = static_cast<std::size_t>(batch.n_paths());
  std::vector<double> vol(du);
  for (std::size_t c = 0; c < du; ++c) vol[c] = std::sqrt(2.0 * lambdas[c]);
  // the batch was drawn with its own h; rescale the increments to this step
  const double scale = std::sqrt(h / batch.h());
  std::vector<double> x(P * du), b(P * du), out;
  for (std::size_t p = 0; p < P; ++p) std::copy(x0.begin(), x0.end(), x.begin() + p * du);
  out.insert(out.end(), x.begin(), x.end());
  for (int j = 0; j < n_steps; ++j) {
    fields.drift(t - j * h, x, b);
    for (std::size_t c = 0; c < du; ++c) {
      const double* dw = batch.increments(j, static_cast<int>(c));
      for (std::size_t p = 0; p < P; ++p) {
        double& v = x[p * du + c];
        v = (v + b[p * du + c] * h) + vol[c] * (scale * dw[p]);
      }
    }
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

LipEstimate estimate_slice(const GridFunction& u, std::size_t k) {
  LipEstimate e;
  e.lip_x = lipschitz_x_slice(u, k);
  e.sup_norm = sup_norm_slice(u, k);
  const SpaceGrid& g = u.grid();
  if (!g.is_torus()) {
    const std::vector<double> origin(static_cast<std::size_t>(g.dim()), 0.0);
    if (g.contains(origin, 0.0)) e.growth_norm = growth_norm_slice(u, k);
  }
  return e;
}

HilbertSolution picard_solve_hilbert(const HilbertProblem& problem, double T, const PicardConfig& cfg, bool noise) {
  cfg.validate();
  problem.check();
  if (!(T > 0.0)) throw PreconditionError("picard_solve_hilbert: T must be positive");
  const TimeGrid tg = TimeGrid::with_step(T, cfg.dt);
  const SpaceGrid& box = problem.solve_box;
  const GridFunction g0 = GridFunction::from_field(box, *problem.U0, cfg.interp);

  std::optional<PathBatch> batch;
  if (noise) batch.emplace(cfg.mc_samples, tg.n_steps() * cfg.em_sub, problem.n, tg.dt() / cfg.em_sub, cfg.seed);

  std::optional<GridFunction> se;
  std::atomic<long> exits{0};
  auto phi = [&](const GridFunction& u) {
    finite::CharacteristicFields f(u, problem.F, problem.G, 0.0, nullptr, OutOfDomain::extrapolate);
    if (!noise) return psi_deterministic(tg, box, f, *problem.U0, cfg.n_sub, &exits);
    FKResult r = psi_feynman_kac(tg, box, f, *problem.U0, problem.lambdas, *batch, FKOptions{cfg.em_sub});
    exits += r.exits;
    se = std::move(r.stderr_);
    return std::move(r.mean);
  };
  auto size = [](const GridFunction& u) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.n_times(); ++k) {
      const LipEstimate e = estimate_slice(u, k);
      s = std::max({s, e.lip_x, e.growth_norm.value_or(0.0)});
    }
    return s;
  };
  auto [U, rep] = picard_iterate(
      GridFunction::constant_extension(g0, tg), phi,
      [](const GridFunction& a, const GridFunction& b) { return sup_diff(a, b); }, size,
      [](const GridFunction& u) { return u.all_finite(); }, cfg);
  return HilbertSolution{std::move(U), std::move(se), std::move(rep), exits.load()};
}

ContinuationResult continue_to_blowup_hilbert(const HilbertProblem& problem, double t_horizon,
                                              const PicardConfig& cfg, bool noise) {
  problem.check();
  std::uint64_t segment = 0;
  SegmentSolve solve = [&](std::shared_ptr<const SpatialField> u0, double len) {
    HilbertProblem p = problem;
    p.U0 = std::move(u0);
    PicardConfig c = cfg;
    c.seed = cfg.seed + 0x9E3779B97F4A7C15ULL * segment++;
    HilbertSolution s = picard_solve_hilbert(p, len, c, noise);
    return std::make_pair(std::move(s.U), std::move(s.report));
  };
  return continue_segments(problem.U0, problem.solve_box, t_horizon, cfg, solve, estimate_slice,
                           OutOfDomain::extrapolate);
}

Eigen::MatrixXd riccati_reference(const Eigen::MatrixXd& A0, double t) {
  if (A0.rows() != A0.cols()) throw PreconditionError("riccati_reference: A0 must be square");
  if ((A0 - A0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, A0.cwiseAbs().maxCoeff())) {
    throw PreconditionError("riccati_reference: A0 must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A0);
  Eigen::VectorXd a = es.eigenvalues();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double den = 1.0 + t * a(i);
    if (!(den > 1e-14)) throw BlowUpReached("riccati_reference: I + t A0 is singular at or before t");
    a(i) = a(i) / den;
  }
  return es.eigenvectors() * a.asDiagonal() * es.eigenvectors().transpose();
}

double riccati_blowup_time(const Eigen::MatrixXd& A0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A0);
  double t = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < 0.0) t = std::min(t, -1.0 / es.eigenvalues()(i));
  return t;
}

}  // namespace charax::hilbert
