#include "charax/verify/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "charax/core/errors.hpp"
#include "charax/core/norms.hpp"

namespace charax::verify {

namespace {

struct SliceTerms {
  std::vector<double> F, G, jump;  // per node: d, od, od values
};

// F(x, V), G(x, V) and V - DS^T V(S x) on all nodes of slice k.
SliceTerms slice_terms(const GridFunction& V, std::size_t k, const finite::FiniteProblem& pb,
                       const std::vector<double>& nodes) {
  const SpaceGrid& g = V.grid();
  const std::size_t n = g.size();
  const auto d = static_cast<std::size_t>(g.dim());
  const auto od = static_cast<std::size_t>(V.out_dim());
  const auto v = V.slice(k);
  SliceTerms st;
  st.F.assign(n * d, 0.0);
  st.G.assign(n * od, 0.0);
  st.jump.assign(n * od, 0.0);
  pb.F->eval(nodes, v, st.F);
  if (pb.G && !pb.G->is_zero()) pb.G->eval(nodes, v, st.G);
  if (pb.lambda != 0.0 && pb.S) {
    std::vector<double> sx(n * d), vs(n * od), jac(n * d * d);
    pb.S->apply(nodes, sx);
    pb.S->jacobian(nodes, jac);
    V.eval(V.time_of(k), sx, vs, OutOfDomain::extrapolate);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < od; ++r) {
        double s = 0.0;
        if (od == d) {
          for (std::size_t c = 0; c < d; ++c) s += jac[i * d * d + c * d + r] * vs[i * od + c];
        } else {
          s = vs[i * od + r];
        }
        st.jump[i * od + r] = v[i * od + r] - s;
      }
    }
  }
  return st;
}

bool interior(const SpaceGrid& g, std::span<const int> idx) {
  if (g.is_torus()) return true;
  for (int a = 0; a < g.dim(); ++a) {
    const int i = idx[static_cast<std::size_t>(a)];
    if (i == 0 || i == g.n_points(a) - 1) return false;
  }
  return true;
}

std::size_t neighbour(const SpaceGrid& g, std::vector<int>& idx, int a, int step) {
  const auto au = static_cast<std::size_t>(a);
  const int saved = idx[au];
  const int n = g.n_points(a);
  idx[au] = (saved + step + n) % n;
  const std::size_t f = g.flat(idx);
  idx[au] = saved;
  return f;
}

}  // namespace

double residual_finite(const GridFunction& V, const finite::FiniteProblem& pb) {
  if (!V.time()) throw PreconditionError("residual_finite: V needs a time grid");
  const SpaceGrid& g = V.grid();
  for (int a = 0; a < g.dim(); ++a) {
    if (g.n_points(a) < 3) throw PreconditionError("residual_finite: need at least 3 nodes per axis");
  }
  if (V.n_times() < 2) throw PreconditionError("residual_finite: need at least 2 time nodes");
  if (!pb.F) throw PreconditionError("residual_finite: problem has no F");
  const std::size_t n = g.size();
  const auto d = static_cast<std::size_t>(g.dim());
  const auto od = static_cast<std::size_t>(V.out_dim());
  const double dt = V.time()->dt();
  const auto nodes = g.nodes();
  std::vector<int> idx(d);
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < V.n_times(); ++k) {
    const auto v0 = V.slice(k);
    const auto v1 = V.slice(k + 1);
    const SliceTerms st = slice_terms(V, k, pb, nodes);
    for (std::size_t i = 0; i < n; ++i) {
      g.unflatten(i, idx);
      if (!interior(g, idx)) continue;
      for (std::size_t r = 0; r < od; ++r) {
        double res = (v1[i * od + r] - v0[i * od + r]) / dt - st.G[i * od + r] + pb.lambda * st.jump[i * od + r];
        for (std::size_t a = 0; a < d; ++a) {
          const int ai = static_cast<int>(a);
          const std::size_t ip = neighbour(g, idx, ai, 1), im = neighbour(g, idx, ai, -1);
          res += st.F[i * d + a] * (v0[ip * od + r] - v0[im * od + r]) / (2.0 * g.spacing(ai));
        }
        if (!std::isfinite(res)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::abs(res));
      }
    }
  }
  return worst;
}

double default_constant(const GridFunction& U, const GridFunction& V, const finite::FiniteProblem& pb,
                        std::uint64_t seed) {
  const SpaceGrid& g = U.grid();
  const auto d = static_cast<std::size_t>(g.dim());
  const auto od = static_cast<std::size_t>(U.out_dim());
  std::vector<double> lo(od, std::numeric_limits<double>::infinity()), hi(od, -lo[0]);
  for (const GridFunction* f : {&U, &V}) {
    const auto& vals = f->values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      lo[i % od] = std::min(lo[i % od], vals[i]);
      hi[i % od] = std::max(hi[i % od], vals[i]);
    }
  }
  for (std::size_t r = 0; r < od; ++r) {
    const double pad = std::max(0.1 * (hi[r] - lo[r]), 1e-3);
    lo[r] -= pad;
    hi[r] += pad;
  }
  const auto nodes = g.nodes();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> p1(od), p2(od), f1(d), f2(d), g1(od), g2(od);
  double lip_f = 0.0, lip_g = 0.0;
  for (int s = 0; s < 2000; ++s) {
    const std::size_t i = static_cast<std::size_t>(rng() % g.size());
    const std::span<const double> x(nodes.data() + i * d, d);
    double dp = 0.0;
    for (std::size_t r = 0; r < od; ++r) {
      p1[r] = lo[r] + u01(rng) * (hi[r] - lo[r]);
      p2[r] = lo[r] + u01(rng) * (hi[r] - lo[r]);
      dp += (p1[r] - p2[r]) * (p1[r] - p2[r]);
    }
    dp = std::sqrt(dp);
    if (dp == 0.0) continue;
    pb.F->eval(x, p1, f1);
    pb.F->eval(x, p2, f2);
    double df = 0.0;
    for (std::size_t a = 0; a < d; ++a) df += (f1[a] - f2[a]) * (f1[a] - f2[a]);
    lip_f = std::max(lip_f, std::sqrt(df) / dp);
    if (pb.G && !pb.G->is_zero()) {
      pb.G->eval(x, p1, g1);
      pb.G->eval(x, p2, g2);
      double dg = 0.0;
      for (std::size_t r = 0; r < od; ++r) dg += (g1[r] - g2[r]) * (g1[r] - g2[r]);
      lip_g = std::max(lip_g, std::sqrt(dg) / dp);
    }
  }
  double jac_norm = 1.0;
  if (pb.lambda != 0.0 && pb.S) {
    std::vector<double> jac(g.size() * d * d);
    pb.S->jacobian(nodes, jac);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double fro = 0.0;
      for (std::size_t q = 0; q < d * d; ++q) fro += jac[i * d * d + q] * jac[i * d * d + q];
      jac_norm = std::max(jac_norm, std::sqrt(fro));
    }
  }
  double lip_u = 0.0;
  for (std::size_t k = 0; k < U.n_times(); ++k) lip_u = std::max(lip_u, lipschitz_x_slice(U, k));
  return lip_g + std::abs(pb.lambda) * (1.0 + jac_norm) + lip_u * lip_f;
}

Certificate strong_weak_certificate(const GridFunction& U, const GridFunction& V, const finite::FiniteProblem& pb,
                                    std::optional<double> C) {
  if (!U.time() || !V.time() || !U.grid().same_as(V.grid()) ||
      !U.time()->same_as(*V.time()) || U.out_dim() != V.out_dim()) {
    throw PreconditionError("strong_weak_certificate: U and V must share grids");
  }
  Certificate cert;
  cert.epsilon = residual_finite(V, pb);
  {
    std::vector<double> u0(U.slice_size());
    pb.U0->eval(U.grid().nodes(), u0);
    const auto v0 = V.slice(0);
    for (std::size_t i = 0; i < u0.size(); ++i) cert.init_gap = std::max(cert.init_gap, std::abs(v0[i] - u0[i]));
  }
  cert.C_used = C ? *C : default_constant(U, V, pb);
  const double base = 2.0 * std::max(cert.epsilon, cert.init_gap);
  cert.passed = std::isfinite(cert.epsilon);
  for (std::size_t k = 0; k < U.n_times(); ++k) {
    const auto a = U.slice(k);
    const auto b = V.slice(k);
    double gap = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
    const double t = U.time_of(k);
    const double bound = base * std::exp(cert.C_used * t);
    cert.times.push_back(t);
    cert.gaps.push_back(gap);
    cert.bounds.push_back(bound);
    cert.sup_gap = std::max(cert.sup_gap, gap);
    if (!(gap <= bound)) cert.passed = false;
  }
  return cert;
}

TimeLipschitz time_lipschitz_check(const GridFunction& U, const finite::FiniteProblem& pb) {
  if (!U.time() || U.n_times() < 2) throw PreconditionError("time_lipschitz_check: U needs a time grid");
  const SpaceGrid& g = U.grid();
  const auto nodes = g.nodes();
  const double dt = U.time()->dt();
  const auto d = static_cast<std::size_t>(g.dim());
  TimeLipschitz r;
  double sup_g = 0.0, sup_jump = 0.0, sup_f = 0.0, lip = 0.0;
  for (std::size_t k = 0; k < U.n_times(); ++k) {
    const auto st = slice_terms(U, k, pb, nodes);
    for (double v : st.G) sup_g = std::max(sup_g, std::abs(v));
    for (double v : st.jump) sup_jump = std::max(sup_jump, std::abs(v));
    for (std::size_t i = 0; i < g.size(); ++i) {
      double f = 0.0;
      for (std::size_t a = 0; a < d; ++a) f += st.F[i * d + a] * st.F[i * d + a];
      sup_f = std::max(sup_f, std::sqrt(f));
    }
    lip = std::max(lip, lipschitz_x_slice(U, k));
    if (k + 1 < U.n_times()) {
      const auto a = U.slice(k);
      const auto b = U.slice(k + 1);
      for (std::size_t i = 0; i < a.size(); ++i) r.measured = std::max(r.measured, std::abs(b[i] - a[i]) / dt);
    }
  }
  r.bound = 1.1 * (sup_g + std::abs(pb.lambda) * sup_jump + sup_f * lip);
  r.passed = r.measured <= r.bound;
  return r;
}

}  // namespace charax::verify
