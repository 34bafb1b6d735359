#include "charax/finite/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "charax/core/errors.hpp"
#include "charax/core/parallel.hpp"

namespace charax::finite {

namespace {

constexpr double kExitTol = 1e-8;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

// Stage points are pulled back onto the box when exits are errors (RK4
// stages may poke a hair outside along a tangent boundary). Torus stage
// points are left unwrapped; only the step endpoints are wrapped.
void project(const SpaceGrid& g, std::span<double> pts, OutOfDomain policy) {
  const int d = g.dim();
  const std::size_t n = pts.size() / static_cast<std::size_t>(d);
  if (!g.is_torus() && policy == OutOfDomain::error) {
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) {
        double& v = pts[i * d + a];
        v = std::clamp(v, g.lo(a), g.hi(a));
      }
  }
}

}  // namespace

FlowResult solve_flow(const TimeField& B, double t, std::span<const double> x0, double dt, int n_sub,
                      const SpaceGrid& domain) {
  const int d = domain.dim();
  if (static_cast<int>(x0.size()) != d || B.in_dim() != d || B.out_dim() != d) {
    throw PreconditionError("solve_flow: dimension mismatch");
  }
  if (!(t >= 0.0) || !(dt > 0.0) || n_sub < 1) throw PreconditionError("solve_flow: need t >= 0, dt > 0, n_sub >= 1");

  FlowResult r;
  std::vector<double> x(x0.begin(), x0.end());
  domain.wrap(x);
  r.s.push_back(0.0);
  r.path.insert(r.path.end(), x.begin(), x.end());
  const long steps = static_cast<long>(std::ceil(t / dt - 1e-9)) * n_sub;
  if (steps == 0) return r;
  const double h = t / static_cast<double>(steps);

  const auto du = static_cast<std::size_t>(d);
  std::vector<double> k1(du), k2(du), k3(du), k4(du), xs(du);
  auto stage = [&](double tau, const std::vector<double>& base, const std::vector<double>& k, double c,
                   std::vector<double>& out) {
    for (std::size_t a = 0; a < du; ++a) xs[a] = base[a] + c * k[a];
    domain.wrap(xs);
    B.eval(tau, xs, out);
  };
  for (long j = 0; j < steps; ++j) {
    const double t0 = static_cast<double>(steps - j) * h;
    const double tm = (static_cast<double>(steps - j) - 0.5) * h;
    const double t1 = static_cast<double>(steps - j - 1) * h;
    B.eval(t0, x, k1);
    stage(tm, x, k1, 0.5 * h, k2);
    stage(tm, x, k2, 0.5 * h, k3);
    stage(t1, x, k3, h, k4);
    for (std::size_t a = 0; a < du; ++a) x[a] = x[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    if (!all_finite(x)) throw CoefficientError("solve_flow: drift produced a non-finite value");
    domain.wrap(x);
    r.s.push_back(static_cast<double>(j + 1) * h);
    r.path.insert(r.path.end(), x.begin(), x.end());
    if (!domain.is_torus() && !domain.contains(x, kExitTol)) {
      r.exited = true;
      break;
    }
  }
  return r;
}

GridFunction psi_transport(const TimeGrid& time, const SpaceGrid& grid, const TransportFields& fields,
                           const SpatialField& u0, const TransportOptions& opt) {
  const int d = grid.dim();
  if (fields.dim() != d || u0.in_dim() != d) throw PreconditionError("psi_transport: dimension mismatch");
  if (opt.n_sub < 1) throw PreconditionError("psi_transport: n_sub must be at least 1");
  const int od = u0.out_dim();
  if (fields.has_source() && fields.out_dim() != od) {
    throw PreconditionError("psi_transport: source and initial condition differ in dimension");
  }

  GridFunction out(grid, time, od);
  const std::vector<double> nodes = grid.nodes();
  const std::size_t n = grid.size();
  const auto du = static_cast<std::size_t>(d);
  const auto odu = static_cast<std::size_t>(od);
  const double h = time.dt() / opt.n_sub;
  const bool source = fields.has_source();

  parallel_for(time.n_nodes(), [&](std::size_t k) {
    std::vector<double> x(nodes);
    std::vector<double> acc(n * odu, 0.0);
    const long steps = static_cast<long>(k) * opt.n_sub;
    if (steps > 0) {
      std::vector<double> k1(n * du), k2(n * du), k3(n * du), k4(n * du), xs(n * du);
      std::vector<double> a0(source ? n * odu : 0), a1(source ? n * odu : 0);
      std::vector<char> exited(opt.exits ? n : 0, 0);
      auto tau = [&](double j) { return (static_cast<double>(steps) - j) * h; };
      auto stage = [&](double t, const std::vector<double>& kk, double c, std::vector<double>& res) {
        for (std::size_t i = 0; i < n * du; ++i) xs[i] = x[i] + c * kk[i];
        project(grid, xs, opt.exit_policy);
        fields.drift(t, xs, res);
      };

      if (source) {
        fields.drift_and_source(tau(0), x, k1, a0);
      } else {
        fields.drift(tau(0), x, k1);
      }
      for (long j = 0; j < steps; ++j) {
        const double jd = static_cast<double>(j);
        stage(tau(jd + 0.5), k1, 0.5 * h, k2);
        stage(tau(jd + 0.5), k2, 0.5 * h, k3);
        stage(tau(jd + 1.0), k3, h, k4);
        for (std::size_t i = 0; i < n * du; ++i) x[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!all_finite(x)) throw CoefficientError("psi_transport: drift produced a non-finite value");

        if (grid.is_torus()) {
          grid.wrap_all(x);
        } else {
          for (std::size_t i = 0; i < n; ++i) {
            auto p = std::span<double>(x).subspan(i * du, du);
            if (grid.contains(p, kExitTol)) {
              if (opt.exit_policy == OutOfDomain::error)
                for (int a = 0; a < d; ++a) p[a] = std::clamp(p[a], grid.lo(a), grid.hi(a));
              continue;
            }
            if (opt.exit_policy == OutOfDomain::error) {
              std::ostringstream os;
              os.precision(17);
              os << "characteristic from (t=" << time.node(static_cast<int>(k)) << ", x=(";
              for (int a = 0; a < d; ++a) os << (a ? ", " : "") << nodes[i * du + a];
              os << ")) left the domain";
              throw DomainViolation(os.str());
            }
            if (opt.exits && !exited[i]) {
              exited[i] = 1;
              opt.exits->fetch_add(1, std::memory_order_relaxed);
            }
          }
        }

        if (source) {
          fields.drift_and_source(tau(jd + 1.0), x, k1, a1);
          for (std::size_t i = 0; i < n * odu; ++i) acc[i] += 0.5 * h * (a0[i] + a1[i]);
          std::swap(a0, a1);
        } else if (j + 1 < steps) {
          fields.drift(tau(jd + 1.0), x, k1);
        }
      }
    }
    auto dst = out.slice(k);
    u0.eval(x, dst);
    for (std::size_t i = 0; i < n * odu; ++i) dst[i] += acc[i];
  });
  return out;
}

GridFunction psi_transport(const TimeGrid& time, const SpaceGrid& grid, const TimeField* A, const TimeField& B,
                           const SpatialField& u0, const TransportOptions& opt) {
  SplitFields f(A, B);
  return psi_transport(time, grid, f, u0, opt);
}

}  // namespace charax::finite
