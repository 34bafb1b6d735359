#include "charax/measure/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "charax/core/errors.hpp"
#include "charax/core/parallel.hpp"
#include "charax/simd/kernels.hpp"

namespace charax::measure {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void require_torus1d(const SpaceGrid& g, const char* who) {
  if (!g.is_torus() || g.dim() != 1) throw PreconditionError(std::string(who) + ": need a 1-d torus grid");
}

void require_same(const MeasureState& a, const MeasureState& b, const char* who) {
  if (!a.grid().same_as(b.grid())) throw PreconditionError(std::string(who) + ": measures live on different grids");
}

// Adds mass `w` (already divided by dx) at position y with linear weights
// between the two nearest nodes.
inline void splat(std::vector<double>& out, double lo, double inv_dx, double y, double w) {
  const std::size_t n = out.size();
  const double u = (y - lo) * inv_dx;
  const double nd = static_cast<double>(n);
  const double wrapped = u - nd * std::floor(u / nd);
  const double fl = std::floor(wrapped);
  auto i0 = static_cast<std::size_t>(fl);
  if (i0 >= n) i0 -= n;
  const std::size_t i1 = i0 + 1 == n ? 0 : i0 + 1;
  const double f = wrapped - fl;
  out[i0] += (1.0 - f) * w;
  out[i1] += f * w;
}

}  // namespace

MeasureState::MeasureState(SpaceGrid grid, std::vector<double> density, bool norm)
    : grid_(std::move(grid)), density_(std::move(density)) {
  require_torus1d(grid_, "MeasureState");
  if (density_.size() != grid_.size()) throw PreconditionError("MeasureState: density size does not match grid");
  for (double v : density_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("MeasureState: density must be finite and >= 0");
  }
  if (norm) normalize();
}

MeasureState MeasureState::uniform(const SpaceGrid& grid) {
  return MeasureState(grid, std::vector<double>(grid.size(), 1.0));
}

MeasureState MeasureState::spike(const SpaceGrid& grid, double x) {
  require_torus1d(grid, "MeasureState::spike");
  std::vector<double> d(grid.size(), 0.0);
  const double u = (x - grid.lo(0)) / grid.spacing(0);
  const auto n = static_cast<long>(grid.size());
  long i = std::lround(u) % n;
  if (i < 0) i += n;
  d[static_cast<std::size_t>(i)] = 1.0;
  return MeasureState(grid, std::move(d));
}

MeasureState MeasureState::wrapped_gaussian(const SpaceGrid& grid, double center, double width) {
  require_torus1d(grid, "MeasureState::wrapped_gaussian");
  if (!(width > 0.0)) throw PreconditionError("wrapped_gaussian: width must be positive");
  const double p = grid.period(0);
  std::vector<double> d(grid.size());
  const int images = 2 + static_cast<int>(std::ceil(6.0 * width / p));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = grid.coord(0, static_cast<int>(i));
    double s = 0.0;
    for (int k = -images; k <= images; ++k) {
      const double z = (x - center + k * p) / width;
      s += std::exp(-0.5 * z * z);
    }
    d[i] = s;
  }
  return MeasureState(grid, std::move(d));
}

MeasureState MeasureState::mixture(const MeasureState& a, const MeasureState& b, double w) {
  require_same(a, b, "MeasureState::mixture");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (1.0 - w) * a[i] + w * b[i];
  return MeasureState(a.grid(), std::move(d));
}

double MeasureState::mass() const {
  double s = 0.0;
  for (double v : density_) s += v;
  return s * dx();
}

void MeasureState::normalize() {
  const double m = mass();
  if (!(m > 0.0)) throw PreconditionError("MeasureState: zero mass");
  const double inv = 1.0 / m;
  for (double& v : density_) v *= inv;
}

double MeasureState::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < density_.size(); ++i) s += grid_.coord(0, static_cast<int>(i)) * density_[i];
  return s * dx();
}

double d1_distance(const MeasureState& m1, const MeasureState& m2) {
  require_same(m1, m2, "d1_distance");
  const std::size_t n = m1.size();
  const double dx = m1.dx();
  std::vector<double> cum(n);
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c += (m1[i] - m2[i]) * dx;
    cum[i] = c;
  }
  // Midpoint of the two middle values: any point between them is optimal,
  // and this choice keeps d1(a, b) == d1(b, a) bit for bit.
  std::vector<double> tmp = cum;
  auto hi = tmp.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(tmp.begin(), hi, tmp.end());
  double med = *hi;
  if (n % 2 == 0) med = 0.5 * (med + *std::max_element(tmp.begin(), hi));
  double s = 0.0;
  for (double v : cum) s += std::abs(v - med);
  return s * dx;
}

MeasureState translate(const MeasureState& m, double shift) {
  const std::size_t n = m.size();
  const double lo = m.grid().lo(0);
  const double dx = m.dx();
  const double inv_dx = 1.0 / dx;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i] == 0.0) continue;
    splat(out, lo, inv_dx, m.grid().coord(0, static_cast<int>(i)) + shift, m[i]);
  }
  for (double& v : out) v = std::max(v, 0.0);
  return MeasureState(m.grid(), std::move(out));
}

MeasureState pushforward(const std::function<double(double)>& psi, const GridFunction& phi, const MeasureState& m) {
  if (phi.grid().dim() != 1 || phi.out_dim() != 1) throw PreconditionError("pushforward: phi must be scalar 1-d");
  const std::size_t n = m.size();
  const double lo = m.grid().lo(0);
  const double inv_dx = 1.0 / m.dx();
  std::vector<double> xs(n), ph(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = m.grid().coord(0, static_cast<int>(i));
  phi.eval(0.0, xs, ph, OutOfDomain::extrapolate);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i] == 0.0) continue;
    const double y = psi(ph[i]);
    if (!std::isfinite(y)) throw CoefficientError("pushforward: psi(phi(x)) is not finite");
    splat(out, lo, inv_dx, y, m[i]);
  }
  return MeasureState(m.grid(), std::move(out));
}

std::vector<MeasureState> fokker_planck_solve(const FPDrift& drift, double sigma_prime, const MeasureState& m0,
                                              double t, int n_steps, FPStats* stats) {
  if (n_steps < 1) throw PreconditionError("fokker_planck_solve: n_steps must be positive");
  if (!(t >= 0.0)) throw PreconditionError("fokker_planck_solve: t must be >= 0");
  if (!(sigma_prime >= 0.0)) throw PreconditionError("fokker_planck_solve: sigma' must be >= 0");
  const std::size_t n = m0.size();
  const double dx = m0.dx();
  const auto& kern = simd::kernels();
  std::vector<double> faces(n), v(n), next(n);
  for (std::size_t i = 0; i < n; ++i) faces[i] = m0.grid().coord(0, static_cast<int>(i)) + 0.5 * dx;

  FPStats st;
  st.min_density = *std::min_element(m0.density().begin(), m0.density().end());
  std::vector<MeasureState> traj;
  traj.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.push_back(m0);
  MeasureState cur = m0;
  const double big = t / n_steps;
  double s = 0.0;
  for (int j = 0; j < n_steps; ++j) {
    const double s_end = (j + 1) * big;
    double remaining = s_end - s;
    while (remaining > 1e-14 * std::max(big, 1e-300)) {
      drift(s, faces, cur, v);
      double vmax = 0.0;
      for (double f : v) {
        if (!std::isfinite(f)) {
          std::ostringstream os;
          os << "Fokker-Planck drift is not finite at s = " << s;
          throw CoefficientError(os.str());
        }
        vmax = std::max(vmax, std::abs(f));
      }
      const double rate = vmax / dx + 2.0 * sigma_prime / (dx * dx);
      const double dt_max = rate > 0.0 ? 0.4 / rate : remaining;
      const double left = std::max(1.0, std::ceil(remaining / dt_max - 1e-9));
      const double h = remaining / left;
      const double before = cur.mass();
      kern.fv_step(cur.raw().data(), v.data(), next.data(), n, h / dx, sigma_prime * h / (dx * dx));
      double after = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] = std::max(next[i], 0.0);
        after += next[i];
      }
      after *= dx;
      st.max_mass_drift = std::max(st.max_mass_drift, std::abs(after - before));
      std::swap(cur.raw(), next);
      cur.normalize();
      st.min_density = std::min(st.min_density, *std::min_element(cur.density().begin(), cur.density().end()));
      ++st.substeps;
      s += h;
      remaining = s_end - s;
    }
    s = s_end;
    traj.push_back(cur);
  }
  if (stats) *stats = st;
  return traj;
}

void MeasureProblem::check() const {
  require_torus1d(grid, "MeasureProblem");
  if (!H || !DpH || !DxH || !B || !U0 || !gradU0) throw PreconditionError("MeasureProblem: missing callback");
  if (!(sigma > 0.0) || !(sigma_prime > 0.0)) throw PreconditionError("MeasureProblem: sigma and sigma' must be > 0");
  if (!(sigma_0 >= 0.0)) throw PreconditionError("MeasureProblem: sigma_0 must be >= 0");
  if (anchors.empty()) throw PreconditionError("MeasureProblem: no anchor measures");
  for (const auto& a : anchors) {
    if (!a.grid().same_as(grid)) throw PreconditionError("MeasureProblem: anchor on a different grid");
  }
  const double mis = derivative_mismatch(*this);
  if (!(mis <= 1e-4)) {
    std::ostringstream os;
    os << "MeasureProblem: D_pH/D_xH disagree with finite differences of H (relative mismatch " << mis << ")";
    throw PreconditionError(os.str());
  }
}

double derivative_mismatch(const MeasureProblem& pb, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(pb.grid.lo(0), pb.grid.hi(0)), up(-2.0, 2.0);
  const double eps = 1e-5;
  double worst = 0.0;
  double x[1], p[1], xs[1], ps[1], out[1];
  auto h = [&](double xv, double pv, const MeasureState& m) {
    xs[0] = xv;
    ps[0] = pv;
    pb.H(xs, ps, m, out);
    return out[0];
  };
  for (int i = 0; i < n; ++i) {
    const auto& m = pb.anchors[static_cast<std::size_t>(rng() % pb.anchors.size())];
    x[0] = ux(rng);
    p[0] = up(rng);
    double dp[1], dxv[1];
    pb.DpH(x, p, m, dp);
    pb.DxH(x, p, m, dxv);
    const double fp = (h(x[0], p[0] + eps, m) - h(x[0], p[0] - eps, m)) / (2 * eps);
    const double fx = (h(x[0] + eps, p[0], m) - h(x[0] - eps, p[0], m)) / (2 * eps);
    worst = std::max(worst, std::abs(dp[0] - fp) / std::max(1.0, std::abs(fp)));
    worst = std::max(worst, std::abs(dxv[0] - fx) / std::max(1.0, std::abs(fx)));
    if (!std::isfinite(dp[0]) || !std::isfinite(dxv[0])) return std::numeric_limits<double>::infinity();
  }
  return worst;
}

std::vector<MeasureState> generate_anchors(const SpaceGrid& grid, int n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("generate_anchors: n must be positive");
  std::vector<MeasureState> out;
  out.push_back(MeasureState::uniform(grid));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uc(0.0, 1.0);
  const double widths[] = {0.05, 0.1, 0.2};
  for (int i = 1; i < n; ++i) {
    const double c = grid.lo(0) + uc(rng) * grid.period(0);
    const double w = widths[i % 3] * grid.period(0);
    if (i % 2 == 1) {
      out.push_back(MeasureState::wrapped_gaussian(grid, c, w));
    } else {
      const auto a = MeasureState::wrapped_gaussian(grid, c, 0.5 * w);
      const auto b = MeasureState::wrapped_gaussian(grid, c + 0.5 * grid.period(0), w);
      out.push_back(MeasureState::mixture(a, b, 0.3 + 0.4 * uc(rng)));
    }
  }
  return out;
}

WField::WField(SpaceGrid grid, TimeGrid time, std::vector<MeasureState> anchors)
    : grid_(std::move(grid)), time_(time), anchors_(std::move(anchors)) {
  require_torus1d(grid_, "WField");
  if (anchors_.empty()) throw PreconditionError("WField: need at least one anchor");
  const std::size_t na = anchors_.size();
  d_.assign(na * na, 0.0);
  for (std::size_t a = 0; a < na; ++a) {
    if (!anchors_[a].grid().same_as(grid_)) throw PreconditionError("WField: anchor on a different grid");
    for (std::size_t b = a + 1; b < na; ++b) d_[a * na + b] = d_[b * na + a] = d1_distance(anchors_[a], anchors_[b]);
  }
  values_.assign(n_times() * na * n_space(), 0.0);
  se_.assign(values_.size(), 0.0);
}

std::vector<double> WField::weights(const MeasureState& m) const {
  const std::size_t na = n_anchors();
  std::vector<double> w(na, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < na; ++a) {
    const double d = d1_distance(m, anchors_[a]);
    if (d < 1e-14) {
      std::fill(w.begin(), w.end(), 0.0);
      w[a] = 1.0;
      return w;
    }
    w[a] = 1.0 / (d * d);
    total += w[a];
  }
  for (double& v : w) v /= total;
  return w;
}

void WField::eval(double t, std::span<const double> x, const std::vector<double>& w, std::span<double> out) const {
  int k = 0;
  double theta = 0.0;
  time_.locate(t, k, theta);
  const auto& kern = simd::kernels();
  const std::size_t n = n_space();
  const double inv_dx = 1.0 / grid_.spacing(0);
  thread_local std::vector<double> row, tmp;
  row.resize(n);
  tmp.resize(x.size());
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t a = 0; a < n_anchors(); ++a) {
    if (w[a] == 0.0) continue;
    const auto s0 = slice(static_cast<std::size_t>(k), a);
    const double* table = s0.data();
    if (theta != 0.0) {
      const auto s1 = slice(static_cast<std::size_t>(k) + 1, a);
      for (std::size_t i = 0; i < n; ++i) row[i] = s0[i] + theta * (s1[i] - s0[i]);
      table = row.data();
    }
    kern.lerp_periodic(table, n, grid_.lo(0), inv_dx, x.data(), tmp.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += w[a] * tmp[i];
  }
}

void WField::eval(double t, std::span<const double> x, const MeasureState& m, std::span<double> out) const {
  eval(t, x, weights(m), out);
}

bool WField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double WField::lip_x_slice(std::size_t k) const {
  const auto& kern = simd::kernels();
  double l = 0.0;
  for (std::size_t a = 0; a < n_anchors(); ++a) {
    l = std::max(l, kern.max_edge_slope(slice(k, a).data(), n_space(), 1.0 / grid_.spacing(0), true));
  }
  return l;
}

double WField::lip_x() const {
  double l = 0.0;
  for (std::size_t k = 0; k < n_times(); ++k) l = std::max(l, lip_x_slice(k));
  return l;
}

double WField::lip_m_slice(std::size_t k) const {
  const auto& kern = simd::kernels();
  double l = 0.0;
  for (std::size_t a = 0; a < n_anchors(); ++a) {
    for (std::size_t b = a + 1; b < n_anchors(); ++b) {
      const double d = anchor_distance(a, b);
      if (d < 1e-14) continue;
      l = std::max(l, kern.max_abs_diff(slice(k, a).data(), slice(k, b).data(), n_space()) / d);
    }
  }
  return l;
}

double WField::lip_m() const {
  double l = 0.0;
  for (std::size_t k = 0; k < n_times(); ++k) l = std::max(l, lip_m_slice(k));
  return l;
}

double WField::anchor_deviation() const {
  const auto& kern = simd::kernels();
  double dev = 0.0;
  for (std::size_t k = 0; k < n_times(); ++k) {
    for (std::size_t a = 0; a < n_anchors(); ++a) {
      for (std::size_t b = a + 1; b < n_anchors(); ++b) {
        dev = std::max(dev, kern.max_abs_diff(slice(k, a).data(), slice(k, b).data(), n_space()));
      }
    }
  }
  return dev;
}

double WField::max_stderr() const { return se_.empty() ? 0.0 : *std::max_element(se_.begin(), se_.end()); }

double sup_diff(const WField& a, const WField& b) {
  if (a.values().size() != b.values().size()) throw PreconditionError("sup_diff: WField shapes differ");
  return simd::kernels().max_abs_diff(a.values().data(), b.values().data(), a.values().size());
}

namespace {

// Accumulated node statistics for one (time node, anchor) group.
struct GroupStats {
  std::vector<double> mean, var;  // var = sample variance of the estimator's terms
};

// Monte Carlo over X-paths for every node, given the measure path at the EM
// steps. `common_shift` (size steps) is added to X after each step when non-empty.
GroupStats run_group(double t, int steps, double h, const SpaceGrid& grid, const GradData& data, double sigma,
                     const PathBatch& batch, const std::vector<MeasureState>& mpath,
                     std::span<const double> common_shift) {
  const std::size_t M = grid.size();
  const auto P = static_cast<std::size_t>(batch.n_paths());
  const auto& kern = simd::kernels();
  const double inv_dx = 1.0 / grid.spacing(0);
  const double lo = grid.lo(0);
  const double period = grid.period(0);
  const auto nodes = grid.nodes();

  // Tabulated b and A at the nodes for each EM time.
  const bool has_b = static_cast<bool>(data.b);
  const bool has_a = static_cast<bool>(data.A);
  std::vector<double> btab(has_b ? static_cast<std::size_t>(steps) * M : 0);
  std::vector<double> atab(has_a ? static_cast<std::size_t>(steps + 1) * M : 0);
  for (int j = 0; j <= steps; ++j) {
    const double tau = t - j * h;
    const auto& m = mpath[static_cast<std::size_t>(j)];
    if (has_b && j < steps) {
      data.b(tau, nodes, m, std::span<double>(btab.data() + static_cast<std::size_t>(j) * M, M));
    }
    if (has_a) data.A(tau, nodes, m, std::span<double>(atab.data() + static_cast<std::size_t>(j) * M, M));
  }
  for (double v : btab) {
    if (!std::isfinite(v)) throw CoefficientError("particle drift is not finite");
  }
  for (double v : atab) {
    if (!std::isfinite(v)) throw CoefficientError("source is not finite");
  }

  const double vol = std::sqrt(2.0 * sigma);
  std::vector<double> X(P), acc(P), drift(P, 0.0), tmp(P), w0(P);
  GroupStats gs;
  gs.mean.assign(M, 0.0);
  gs.var.assign(M, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    std::fill(X.begin(), X.end(), nodes[i]);
    std::fill(acc.begin(), acc.end(), 0.0);
    if (has_a) {
      const double a0 = atab[i];
      for (std::size_t p = 0; p < P; ++p) acc[p] = 0.5 * h * a0;
    }
    for (int j = 0; j < steps; ++j) {
      if (has_b) kern.lerp_periodic(btab.data() + static_cast<std::size_t>(j) * M, M, lo, inv_dx, X.data(),
                                    drift.data(), P);
      if (common_shift.empty()) {
        kern.em_advance(X.data(), drift.data(), batch.increments(j, 0), P, h, vol, period);
      } else {
        kern.em_advance(X.data(), drift.data(), batch.increments(j, 0), P, h, vol, 0.0);
        const double c = common_shift[static_cast<std::size_t>(j)];
        for (double& x : X) x += c;
        grid.wrap_all(X);
      }
      if (has_a) {
        kern.lerp_periodic(atab.data() + static_cast<std::size_t>(j + 1) * M, M, lo, inv_dx, X.data(), tmp.data(),
                           P);
        const double wgt = j + 1 == steps ? 0.5 * h : h;
        for (std::size_t p = 0; p < P; ++p) acc[p] += wgt * tmp[p];
      }
    }
    data.W0(X, mpath.back(), w0);
    double s = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      acc[p] += w0[p];
      s += acc[p];
    }
    const double mean = s / static_cast<double>(P);
    double q = 0.0;
    for (std::size_t p = 0; p < P; ++p) q += (acc[p] - mean) * (acc[p] - mean);
    if (!std::isfinite(mean)) throw CoefficientError("Feynman-Kac estimate is not finite");
    gs.mean[i] = mean;
    gs.var[i] = P > 1 ? q / static_cast<double>(P - 1) : 0.0;
  }
  return gs;
}

FPDrift make_fp_drift(const GradData& data, double t) {
  if (!data.F) {
    return [](double, std::span<const double>, const MeasureState&, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
    };
  }
  return [&data, t](double s, std::span<const double> x, const MeasureState& m, std::span<double> out) {
    data.F(t - s, x, m, out);
  };
}

void check_psi_inputs(const TimeGrid& time, const SpaceGrid& grid, const GradData& data, const PathBatch& batch,
                      const std::vector<MeasureState>& anchors, const PsiOptions& opt) {
  require_torus1d(grid, "psi_grad");
  if (!data.W0) throw PreconditionError("psi_grad: W0 is required");
  if (opt.em_sub < 1) throw PreconditionError("psi_grad: em_sub must be positive");
  if (batch.dim() != 1) throw PreconditionError("psi_grad: path batch must be 1-d");
  const double h = time.dt() / opt.em_sub;
  if (std::abs(batch.h() - h) > 1e-12 * h) throw PreconditionError("psi_grad: batch step does not match dt/em_sub");
  if (batch.n_steps() < time.n_steps() * opt.em_sub) throw PreconditionError("psi_grad: batch has too few steps");
  for (const auto& a : anchors) {
    if (!a.grid().same_as(grid)) throw PreconditionError("psi_grad: anchor on a different grid");
  }
}

}  // namespace

WField psi_grad(const TimeGrid& time, const SpaceGrid& grid, const GradData& data, double sigma, double sigma_prime,
                const PathBatch& batch, const std::vector<MeasureState>& anchors, const PsiOptions& opt) {
  check_psi_inputs(time, grid, data, batch, anchors, opt);
  WField out(grid, time, anchors);
  const std::size_t K = time.n_nodes();
  const std::size_t na = anchors.size();
  const double h = time.dt() / opt.em_sub;
  const auto nodes = grid.nodes();
  const double sqrtP = std::sqrt(static_cast<double>(batch.n_paths()));
  parallel_for(K * na, [&](std::size_t item) {
    const std::size_t k = item / na;
    const std::size_t a = item % na;
    if (k == 0) {
      data.W0(nodes, anchors[a], out.slice(0, a));
      return;
    }
    const int steps = static_cast<int>(k) * opt.em_sub;
    const double t = time.node(static_cast<int>(k));
    const auto mpath = fokker_planck_solve(make_fp_drift(data, t), sigma_prime, anchors[a], t, steps);
    const auto gs = run_group(t, steps, h, grid, data, sigma, batch, mpath, {});
    auto v = out.slice(k, a);
    auto se = out.se_slice(k, a);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = gs.mean[i];
      se[i] = std::sqrt(gs.var[i]) / sqrtP;
    }
  });
  return out;
}

std::vector<MeasureState> shifted_fp_path(const FPDrift& drift, double sigma_prime, const MeasureState& m0, double h,
                                          std::span<const double> path) {
  const int steps = static_cast<int>(path.size()) - 1;
  if (steps < 1) return {m0};
  auto shift_at = [&](double s) {
    double u = s / h;
    int j = std::clamp(static_cast<int>(std::floor(u)), 0, steps - 1);
    const double f = u - j;
    return path[static_cast<std::size_t>(j)] + f * (path[static_cast<std::size_t>(j) + 1] - path[static_cast<std::size_t>(j)]);
  };
  // m_s = translate(mt_s, shift_s); mt sees the drift in the moving frame.
  FPDrift moving = [&](double s, std::span<const double> x, const MeasureState& mt, std::span<double> out) {
    const double c = shift_at(s);
    thread_local std::vector<double> y;
    y.assign(x.begin(), x.end());
    for (double& v : y) v += c;
    drift(s, y, translate(mt, c), out);
  };
  const auto mt = fokker_planck_solve(moving, sigma_prime, translate(m0, -path[0]), h * steps, steps);
  std::vector<MeasureState> out;
  out.reserve(mt.size());
  for (std::size_t j = 0; j < mt.size(); ++j) out.push_back(translate(mt[j], path[j]));
  return out;
}

WField psi_grad_common_noise(const TimeGrid& time, const SpaceGrid& grid, const GradData& data, double sigma,
                             double sigma_prime, double sigma_0, const PathBatch& batch, const PathBatch& common,
                             const std::vector<MeasureState>& anchors, const PsiOptions& opt) {
  check_psi_inputs(time, grid, data, batch, anchors, opt);
  if (!(sigma_0 > 0.0)) throw PreconditionError("psi_grad_common_noise: sigma_0 must be > 0");
  check_psi_inputs(time, grid, data, common, anchors, opt);
  WField out(grid, time, anchors);
  const std::size_t K = time.n_nodes();
  const std::size_t na = anchors.size();
  const auto L = static_cast<std::size_t>(common.n_paths());
  const double h = time.dt() / opt.em_sub;
  const double c0 = std::sqrt(2.0 * sigma_0);
  const auto nodes = grid.nodes();
  const std::size_t M = grid.size();

  // Group means per (k, anchor, common path), reduced in a fixed order below.
  std::vector<double> group(K * na * L * M, 0.0);
  parallel_for(K * na * L, [&](std::size_t item) {
    const std::size_t l = item % L;
    const std::size_t a = (item / L) % na;
    const std::size_t k = item / (L * na);
    double* g = group.data() + item * M;
    if (k == 0) {
      data.W0(nodes, anchors[a], std::span<double>(g, M));
      return;
    }
    const int steps = static_cast<int>(k) * opt.em_sub;
    const double t = time.node(static_cast<int>(k));
    std::vector<double> path(static_cast<std::size_t>(steps) + 1, 0.0), shift(static_cast<std::size_t>(steps));
    for (int j = 0; j < steps; ++j) {
      shift[static_cast<std::size_t>(j)] = c0 * common.increments(j, 0)[l];
      path[static_cast<std::size_t>(j) + 1] = path[static_cast<std::size_t>(j)] + shift[static_cast<std::size_t>(j)];
    }
    const auto mpath = shifted_fp_path(make_fp_drift(data, t), sigma_prime, anchors[a], h, path);
    const auto gs = run_group(t, steps, h, grid, data, sigma, batch, mpath, shift);
    std::copy(gs.mean.begin(), gs.mean.end(), g);
  });
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t a = 0; a < na; ++a) {
      auto v = out.slice(k, a);
      auto se = out.se_slice(k, a);
      const double* base = group.data() + (k * na + a) * L * M;
      for (std::size_t i = 0; i < M; ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l < L; ++l) s += base[l * M + i];
        const double mean = s / static_cast<double>(L);
        double q = 0.0;
        for (std::size_t l = 0; l < L; ++l) q += (base[l * M + i] - mean) * (base[l * M + i] - mean);
        v[i] = mean;
        se[i] = k == 0 || L < 2 ? 0.0 : std::sqrt(q / static_cast<double>(L - 1) / static_cast<double>(L));
      }
    }
  }
  return out;
}

namespace {

// Coefficients of Psi built from the current iterate W.
GradData coupled_data(const MeasureProblem& pb, std::shared_ptr<const WField> W, bool value_mode) {
  GradData d;
  auto eval_w = [W](double t, std::span<const double> x, const MeasureState& m, std::vector<double>& w) {
    w.resize(x.size());
    W->eval(t, x, m, w);
  };
  if (!value_mode) {
    d.b = [&pb, eval_w](double t, std::span<const double> x, const MeasureState& m, std::span<double> out) {
      thread_local std::vector<double> w;
      eval_w(t, x, m, w);
      pb.DpH(x, w, m, out);
      for (double& v : out) v = -v;
    };
    d.A = [&pb, eval_w](double t, std::span<const double> x, const MeasureState& m, std::span<double> out) {
      thread_local std::vector<double> w;
      eval_w(t, x, m, w);
      pb.DxH(x, w, m, out);
      for (double& v : out) v = -v;
    };
    d.W0 = pb.gradU0;
  } else {
    d.A = [&pb, eval_w](double t, std::span<const double> x, const MeasureState& m, std::span<double> out) {
      thread_local std::vector<double> w;
      eval_w(t, x, m, w);
      pb.H(x, w, m, out);
      for (double& v : out) v = -v;
    };
    d.W0 = pb.U0;
  }
  d.F = [&pb, eval_w](double t, std::span<const double> x, const MeasureState& m, std::span<double> out) {
    thread_local std::vector<double> w;
    eval_w(t, x, m, w);
    pb.B(x, w, m, out);
    for (double& v : out) v = -v;
  };
  return d;
}

WField apply_psi(const MeasureProblem& pb, const TimeGrid& time, const GradData& d, const PathBatch& batch,
                 const PathBatch* common, const PicardConfig& cfg) {
  PsiOptions opt{cfg.em_sub};
  if (common) {
    return psi_grad_common_noise(time, pb.grid, d, pb.sigma, pb.sigma_prime, pb.sigma_0, batch, *common, pb.anchors,
                                 opt);
  }
  return psi_grad(time, pb.grid, d, pb.sigma, pb.sigma_prime, batch, pb.anchors, opt);
}

}  // namespace

GradSolution picard_solve_grad(const MeasureProblem& pb, double T, const PicardConfig& cfg,
                               const MeasureOptions& mopt) {
  cfg.validate();
  pb.check();
  const TimeGrid time = TimeGrid::with_step(T, cfg.dt);
  const double h = time.dt() / cfg.em_sub;
  const int steps = time.n_steps() * cfg.em_sub;
  const PathBatch batch(cfg.mc_samples, steps, 1, h, cfg.seed);
  std::optional<PathBatch> common;
  if (pb.sigma_0 > 0.0) common.emplace(mopt.common_paths, steps, 1, h, cfg.seed ^ 0x5DEECE66DULL);

  WField init(pb.grid, time, pb.anchors);
  const auto nodes = pb.grid.nodes();
  for (std::size_t a = 0; a < pb.anchors.size(); ++a) {
    std::vector<double> g(pb.grid.size());
    pb.gradU0(nodes, pb.anchors[a], g);
    for (std::size_t k = 0; k < init.n_times(); ++k) std::copy(g.begin(), g.end(), init.slice(k, a).begin());
  }
  if (!init.all_finite()) throw CoefficientError("grad U0 is not finite on the anchors");

  auto phi = [&](const WField& w) {
    auto W = std::make_shared<const WField>(w);
    return apply_psi(pb, time, coupled_data(pb, W, false), batch, common ? &*common : nullptr, cfg);
  };
  auto dist = [](const WField& a, const WField& b) { return sup_diff(a, b); };
  auto size = [](const WField& w) { return w.lip_x() + w.lip_m(); };
  auto finite = [](const WField& w) { return w.all_finite(); };
  auto [W, rep] = picard_iterate(std::move(init), phi, dist, size, finite, cfg);
  GradSolution sol{std::move(W), std::move(rep)};
  sol.lip_x = sol.W.lip_x();
  sol.lip_m = sol.W.lip_m();
  return sol;
}

WField reconstruct_value(const WField& W, const MeasureProblem& pb, const PicardConfig& cfg) {
  const TimeGrid& time = W.time();
  const double h = time.dt() / cfg.em_sub;
  const int steps = time.n_steps() * cfg.em_sub;
  const PathBatch batch(cfg.mc_samples, steps, 1, h, cfg.seed);
  auto Wp = std::make_shared<const WField>(W);
  MeasureProblem local = pb;
  local.anchors = W.anchors();
  local.grid = W.grid();
  std::optional<PathBatch> common;
  if (pb.sigma_0 > 0.0) common.emplace(16, steps, 1, h, cfg.seed ^ 0x5DEECE66DULL);
  return apply_psi(local, time, coupled_data(local, Wp, true), batch, common ? &*common : nullptr, cfg);
}

namespace builtin {

namespace {
void fill(std::span<double> out, double v) { std::fill(out.begin(), out.end(), v); }
}  // namespace

void quadratic(MeasureProblem& pb, double kappa) {
  pb.H = [kappa](std::span<const double> x, std::span<const double> p, const MeasureState&, std::span<double> o) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = 0.5 * p[i] * p[i] + kappa * std::cos(two_pi * x[i]);
  };
  pb.DpH = [](std::span<const double>, std::span<const double> p, const MeasureState&, std::span<double> o) {
    std::copy(p.begin(), p.end(), o.begin());
  };
  pb.DxH = [kappa](std::span<const double> x, std::span<const double>, const MeasureState&, std::span<double> o) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = -two_pi * kappa * std::sin(two_pi * x[i]);
  };
}

void nonlocal_mean(MeasureProblem& pb) {
  pb.H = [](std::span<const double>, std::span<const double> p, const MeasureState& m, std::span<double> o) {
    const double mu = m.mean();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = p[i] * mu;
  };
  pb.DpH = [](std::span<const double>, std::span<const double>, const MeasureState& m, std::span<double> o) {
    fill(o, m.mean());
  };
  pb.DxH = [](std::span<const double>, std::span<const double>, const MeasureState&, std::span<double> o) {
    fill(o, 0.0);
  };
}

void zero_hamiltonian(MeasureProblem& pb) {
  auto z = [](std::span<const double>, std::span<const double>, const MeasureState&, std::span<double> o) {
    fill(o, 0.0);
  };
  pb.H = z;
  pb.DpH = z;
  pb.DxH = z;
}

void b_momentum(MeasureProblem& pb) {
  pb.B = [](std::span<const double>, std::span<const double> p, const MeasureState&, std::span<double> o) {
    std::copy(p.begin(), p.end(), o.begin());
  };
}

void b_mean(MeasureProblem& pb) {
  pb.B = [](std::span<const double>, std::span<const double>, const MeasureState& m, std::span<double> o) {
    fill(o, m.mean());
  };
}

void b_zero(MeasureProblem& pb) {
  pb.B = [](std::span<const double>, std::span<const double>, const MeasureState&, std::span<double> o) {
    fill(o, 0.0);
  };
}

void u0_sine(MeasureProblem& pb, double amp) {
  pb.U0 = [amp](std::span<const double> x, const MeasureState&, std::span<double> o) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = amp / two_pi * std::sin(two_pi * x[i]);
  };
  pb.gradU0 = [amp](std::span<const double> x, const MeasureState&, std::span<double> o) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = amp * std::cos(two_pi * x[i]);
  };
}

void u0_mean_coupled(MeasureProblem& pb, double amp) {
  pb.U0 = [amp](std::span<const double> x, const MeasureState& m, std::span<double> o) {
    const double mu = m.mean();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = amp / two_pi * std::sin(two_pi * (x[i] - mu));
  };
  pb.gradU0 = [amp](std::span<const double> x, const MeasureState& m, std::span<double> o) {
    const double mu = m.mean();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = amp * std::cos(two_pi * (x[i] - mu));
  };
}

}  // namespace builtin

}  // namespace charax::measure
